#include "hetsim/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hetsim/rng.hpp"

namespace hetsim {

namespace {

// ---------------------------------------------------------------- text utils

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const std::size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return {};
    const std::size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (start <= s.size()) {
        const std::string::size_type end = s.find(sep, start);
        if (end == std::string::npos) {
            const std::string item = trim(s.substr(start));
            if (!item.empty()) out.push_back(item);
            break;
        }
        const std::string item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(item);
        start = end + 1;
    }
    return out;
}

[[noreturn]] void fail_at(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& s, int line, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        fail_at(line, what + ": '" + s + "' is not a number");
    return v;
}

long long parse_integer(const std::string& s, int line, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        fail_at(line, what + ": '" + s + "' is not an integer");
    return v;
}

std::uint64_t parse_seed(const std::string& s, int line) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        fail_at(line, "seed: '" + s + "' is not an unsigned integer");
    return v;
}

// Accepts "a", "bi", "a+bi", "a-bi" with explicit coefficients.
Complex parse_complex(const std::string& s, int line, const std::string& what) {
    const char* p = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double first = std::strtod(p, &end);
    if (end == p || errno == ERANGE) fail_at(line, what + ": '" + s + "' is not a number");
    if (*end == '\0') return Complex(first, 0.0);
    if (*end == 'i' && *(end + 1) == '\0') return Complex(0.0, first);
    const char* q = end;
    const double second = std::strtod(q, &end);
    if (end == q || errno == ERANGE || *end != 'i' || *(end + 1) != '\0')
        fail_at(line, what + ": '" + s + "' is not of the form a, bi or a+bi");
    return Complex(first, second);
}

bool safe_name(const std::string& s) {
    if (s.empty()) return false;
    for (const char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_f3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// ------------------------------------------------------------- config parser

struct PendingState {
    std::string label;
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> keys;
};

struct PendingAnalysis {
    std::string kind;
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> keys;
};

const std::map<std::string, AnalysisRequest::Kind>& analysis_kinds() {
    static const std::map<std::string, AnalysisRequest::Kind> kinds = {
        {"moments", AnalysisRequest::Kind::Moments},
        {"quadratures", AnalysisRequest::Kind::Quadratures},
        {"phase", AnalysisRequest::Kind::Phase},
        {"reconstruct", AnalysisRequest::Kind::Reconstruct},
        {"compare_direct", AnalysisRequest::Kind::CompareDirect},
        {"shift", AnalysisRequest::Kind::Shift},
    };
    return kinds;
}

void require_only(const PendingState& st, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : st.keys) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail_at(value.second, "unknown key '" + key + "' for state kind");
    }
}

const std::pair<std::string, int>* find_key(const PendingState& st, const char* key) {
    const auto it = st.keys.find(key);
    return it == st.keys.end() ? nullptr : &it->second;
}

int optional_dim(const PendingState& st) {
    if (const auto* dim = find_key(st, "dim")) {
        const long long v = parse_integer(dim->first, dim->second, "dim");
        if (v < 1) fail_at(dim->second, "dim must be positive");
        return static_cast<int>(v);
    }
    return 0;
}

StateSpec finalize_state(const PendingState& st,
                         const std::vector<std::pair<std::string, StateSpec>>& earlier) {
    const auto* kind = find_key(st, "kind");
    if (!kind) fail_at(st.line, "state '" + st.label + "' needs a kind");
    const std::string k = kind->first;
    const int dim = optional_dim(st);

    if (k == "coherent") {
        require_only(st, {"kind", "alpha", "dim"});
        const auto* alpha = find_key(st, "alpha");
        if (!alpha) fail_at(st.line, "coherent state needs alpha");
        const Complex a = parse_complex(alpha->first, alpha->second, "alpha");
        return dim > 0 ? StateSpec::coherent(a, dim) : StateSpec::coherent(a);
    }
    if (k == "number") {
        require_only(st, {"kind", "n", "dim"});
        const auto* n = find_key(st, "n");
        if (!n) fail_at(st.line, "number state needs n");
        return StateSpec::number(static_cast<int>(parse_integer(n->first, n->second, "n")), dim);
    }
    if (k == "squeezed") {
        require_only(st, {"kind", "alpha", "r", "theta", "dim"});
        const auto* r = find_key(st, "r");
        if (!r) fail_at(st.line, "squeezed state needs r");
        Complex a = 0.0;
        if (const auto* alpha = find_key(st, "alpha"))
            a = parse_complex(alpha->first, alpha->second, "alpha");
        double theta = 0.0;
        if (const auto* th = find_key(st, "theta"))
            theta = parse_double(th->first, th->second, "theta");
        const double rv = parse_double(r->first, r->second, "r");
        return dim > 0 ? StateSpec::squeezed_coherent(a, rv, theta, dim)
                       : StateSpec::squeezed_coherent(a, rv, theta);
    }
    if (k == "superposition") {
        require_only(st, {"kind", "coefficients", "dim"});
        const auto* coeffs = find_key(st, "coefficients");
        if (!coeffs) fail_at(st.line, "superposition needs coefficients");
        std::vector<Complex> c;
        for (const std::string& item : split_list(coeffs->first, ','))
            c.push_back(parse_complex(item, coeffs->second, "coefficients"));
        if (c.empty()) fail_at(coeffs->second, "coefficients list is empty");
        return StateSpec::superposition(c, dim);
    }
    if (k == "mixture") {
        require_only(st, {"kind", "components", "dim"});
        const auto* comps = find_key(st, "components");
        if (!comps) fail_at(st.line, "mixture needs components");
        std::vector<double> weights;
        std::vector<StateSpec> parts;
        for (const std::string& item : split_list(comps->first, ',')) {
            const std::size_t star = item.find('*');
            if (star == std::string::npos)
                fail_at(comps->second, "components entries look like weight*label");
            const std::string w = trim(item.substr(0, star));
            const std::string label = trim(item.substr(star + 1));
            weights.push_back(parse_double(w, comps->second, "component weight"));
            bool found = false;
            for (const auto& [name, spec] : earlier)
                if (name == label) {
                    parts.push_back(spec);
                    found = true;
                    break;
                }
            if (!found)
                fail_at(comps->second, "component '" + label + "' is not an earlier state");
        }
        if (weights.empty()) fail_at(comps->second, "components list is empty");
        return StateSpec::mixture(weights, parts, dim);
    }
    fail_at(kind->second, "unknown state kind '" + k + "'");
}

AnalysisRequest finalize_analysis(const PendingAnalysis& an) {
    const auto kind_it = analysis_kinds().find(an.kind);
    if (kind_it == analysis_kinds().end())
        fail_at(an.line, "unknown analysis '" + an.kind + "'");
    AnalysisRequest req;
    req.kind = kind_it->second;

    std::set<std::string> allowed;
    switch (req.kind) {
    case AnalysisRequest::Kind::Moments: allowed = {"orders"}; break;
    case AnalysisRequest::Kind::Quadratures:
    case AnalysisRequest::Kind::Shift: allowed = {"angles"}; break;
    case AnalysisRequest::Kind::Phase: allowed = {"bins"}; break;
    case AnalysisRequest::Kind::Reconstruct: allowed = {"cutoff", "max_cutoff"}; break;
    case AnalysisRequest::Kind::CompareDirect: break;
    }
    for (const auto& [key, value] : an.keys)
        if (!allowed.count(key))
            fail_at(value.second, "unknown key '" + key + "' for analysis " + an.kind);

    const auto get = [&](const char* key) -> const std::pair<std::string, int>* {
        const auto it = an.keys.find(key);
        return it == an.keys.end() ? nullptr : &it->second;
    };

    switch (req.kind) {
    case AnalysisRequest::Kind::Moments: {
        const auto* orders = get("orders");
        if (!orders) fail_at(an.line, "moments analysis needs orders (n:d pairs)");
        for (const std::string& item : split_list(orders->first, ',')) {
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos)
                fail_at(orders->second, "orders entries look like n:d");
            const int n = static_cast<int>(
                parse_integer(trim(item.substr(0, colon)), orders->second, "order n"));
            const int d = static_cast<int>(
                parse_integer(trim(item.substr(colon + 1)), orders->second, "order d"));
            req.orders.emplace_back(n, d);
        }
        if (req.orders.empty()) fail_at(orders->second, "orders list is empty");
        break;
    }
    case AnalysisRequest::Kind::Quadratures:
    case AnalysisRequest::Kind::Shift: {
        const auto* angles = get("angles");
        if (!angles) fail_at(an.line, "analysis " + an.kind + " needs angles");
        for (const std::string& item : split_list(angles->first, ','))
            req.angles.push_back(parse_double(item, angles->second, "angle"));
        if (req.angles.empty()) fail_at(angles->second, "angles list is empty");
        break;
    }
    case AnalysisRequest::Kind::Phase: {
        if (const auto* bins = get("bins")) {
            req.n_bins = static_cast<int>(parse_integer(bins->first, bins->second, "bins"));
            if (req.n_bins < 2) fail_at(bins->second, "bins must be at least 2");
        }
        break;
    }
    case AnalysisRequest::Kind::Reconstruct: {
        const auto* fixed = get("cutoff");
        const auto* searched = get("max_cutoff");
        if (!!fixed == !!searched)
            fail_at(an.line, "reconstruct needs exactly one of cutoff or max_cutoff");
        if (fixed)
            req.cutoff = static_cast<int>(parse_integer(fixed->first, fixed->second, "cutoff"));
        else
            req.max_cutoff = static_cast<int>(
                parse_integer(searched->first, searched->second, "max_cutoff"));
        break;
    }
    case AnalysisRequest::Kind::CompareDirect: break;
    }
    return req;
}

ExpectRule parse_rule(const std::string& value, int line) {
    ExpectRule rule;
    rule.line = line;
    rule.text = value;

    std::istringstream in(value);
    std::string path, op;
    in >> path >> op;
    if (path.empty() || op.empty()) fail_at(line, "expect rule needs a path and an operator");

    const std::vector<std::string> parts = split_list(path, '/');
    if (parts.size() != 4)
        fail_at(line, "expect path looks like analysis/state/eta/quantity");
    rule.analysis = parts[0];
    rule.state = parts[1];
    rule.eta = parts[2];
    rule.quantity = parts[3];
    if (!analysis_kinds().count(rule.analysis))
        fail_at(line, "unknown analysis '" + rule.analysis + "' in expect path");
    if (rule.eta != "*") parse_double(rule.eta, line, "expect eta");

    if (op == "~") {
        std::string target, within, radius, units;
        in >> target >> within >> radius >> units;
        if (within != "within" || (units != "ci" && units != "abs"))
            fail_at(line, "expect rule looks like 'path ~ value within k ci|abs'");
        const std::vector<std::string> comps = split_list(target, ',');
        if (comps.empty() || comps.size() > 2) fail_at(line, "expect target is re or re,im");
        rule.target = Complex(parse_double(comps[0], line, "expect target"),
                              comps.size() == 2 ? parse_double(comps[1], line, "expect target")
                                                : 0.0);
        rule.radius = parse_double(radius, line, "expect radius");
        rule.absolute = units == "abs";
        rule.op = ExpectRule::Op::Within;
    } else if (op == ">=" || op == "<=") {
        std::string bound;
        in >> bound;
        rule.bound = parse_double(bound, line, "expect bound");
        rule.op = op == ">=" ? ExpectRule::Op::AtLeast : ExpectRule::Op::AtMost;
    } else if (op == "increasing_in_eta" || op == "decreasing_in_eta") {
        rule.op = op == "increasing_in_eta" ? ExpectRule::Op::IncreasingInEta
                                            : ExpectRule::Op::DecreasingInEta;
    } else {
        fail_at(line, "unknown expect operator '" + op + "'");
    }
    std::string extra;
    if (in >> extra) fail_at(line, "unexpected trailing text '" + extra + "' in expect rule");
    return rule;
}

} // namespace

const char* analysis_name(AnalysisRequest::Kind kind) {
    switch (kind) {
    case AnalysisRequest::Kind::Moments: return "moments";
    case AnalysisRequest::Kind::Quadratures: return "quadratures";
    case AnalysisRequest::Kind::Phase: return "phase";
    case AnalysisRequest::Kind::Reconstruct: return "reconstruct";
    case AnalysisRequest::Kind::CompareDirect: return "compare_direct";
    case AnalysisRequest::Kind::Shift: return "shift";
    }
    return "?";
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.seed = 1;

    enum class Section { None, Run, State, Analysis, Output, Expect };
    Section section = Section::None;
    PendingState pending_state;
    PendingAnalysis pending_analysis;
    bool eta_seen = false;
    bool samples_seen = false;

    const auto close_section = [&] {
        if (section == Section::State) {
            cfg.states.emplace_back(pending_state.label,
                                    finalize_state(pending_state, cfg.states));
            pending_state = {};
        } else if (section == Section::Analysis) {
            cfg.analyses.push_back(finalize_analysis(pending_analysis));
            pending_analysis = {};
        }
    };

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') fail_at(line, "unterminated section header");
            close_section();
            const std::string header = trim(s.substr(1, s.size() - 2));
            if (header == "run") {
                section = Section::Run;
            } else if (header == "output") {
                section = Section::Output;
            } else if (header == "expect") {
                section = Section::Expect;
            } else if (header.rfind("state", 0) == 0) {
                section = Section::State;
                pending_state.label = trim(header.substr(5));
                pending_state.line = line;
                if (!safe_name(pending_state.label))
                    fail_at(line, "state label must be a plain name: [state <label>]");
                for (const auto& [name, spec] : cfg.states)
                    if (name == pending_state.label)
                        fail_at(line, "duplicate state label '" + name + "'");
            } else if (header.rfind("analysis", 0) == 0) {
                section = Section::Analysis;
                pending_analysis.kind = trim(header.substr(8));
                pending_analysis.line = line;
                if (pending_analysis.kind.empty())
                    fail_at(line, "analysis section needs a kind: [analysis <kind>]");
            } else {
                fail_at(line, "unknown section [" + header + "]");
            }
            continue;
        }

        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail_at(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail_at(line, "empty key");

        switch (section) {
        case Section::None: fail_at(line, "key outside any section");
        case Section::Run:
            if (key == "seed") {
                cfg.seed = parse_seed(value, line);
            } else if (key == "samples") {
                const long long v = parse_integer(value, line, "samples");
                if (v < 1) fail_at(line, "samples must be at least 1");
                cfg.n_samples = v;
                samples_seen = true;
            } else if (key == "eta") {
                for (const std::string& item : split_list(value, ',')) {
                    const double e = parse_double(item, line, "eta");
                    if (!(e > 0.0) || e > 1.0) fail_at(line, "eta values must lie in (0, 1]");
                    cfg.eta_list.push_back(e);
                }
                eta_seen = true;
            } else if (key == "blocks") {
                const long long v = parse_integer(value, line, "blocks");
                if (v < 2) fail_at(line, "blocks must be at least 2");
                cfg.n_blocks = static_cast<int>(v);
            } else {
                fail_at(line, "unknown key '" + key + "' in [run]");
            }
            break;
        case Section::State:
            if (pending_state.keys.count(key)) fail_at(line, "duplicate key '" + key + "'");
            pending_state.keys[key] = {value, line};
            break;
        case Section::Analysis:
            if (pending_analysis.keys.count(key)) fail_at(line, "duplicate key '" + key + "'");
            pending_analysis.keys[key] = {value, line};
            break;
        case Section::Output:
            if (key == "dir") {
                cfg.output_dir = value;
            } else if (key == "prefix") {
                if (!safe_name(value)) fail_at(line, "prefix must be a plain name");
                cfg.prefix = value;
            } else {
                fail_at(line, "unknown key '" + key + "' in [output]");
            }
            break;
        case Section::Expect:
            if (key != "rule") fail_at(line, "the [expect] section holds rule = ... lines");
            cfg.expectations.push_back(parse_rule(value, line));
            break;
        }
    }
    close_section();

    if (!samples_seen) throw ConfigError("missing [run] samples");
    if (!eta_seen || cfg.eta_list.empty()) throw ConfigError("empty eta list in [run]");
    if (cfg.states.empty()) throw ConfigError("no [state] sections");
    if (cfg.analyses.empty()) throw ConfigError("no [analysis] sections");
    for (const ExpectRule& rule : cfg.expectations) {
        if (rule.state == "*") continue;
        bool found = false;
        for (const auto& [name, spec] : cfg.states) found = found || name == rule.state;
        if (!found)
            fail_at(rule.line, "expect rule names unknown state '" + rule.state + "'");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

const std::vector<std::pair<std::string, std::string>>& bundled_configs() {
    static const std::vector<std::pair<std::string, std::string>> configs = {
#include "bundled_configs.inc"
    };
    return configs;
}

const char* version_string() { return "hetsim 1.0.0"; }

// ------------------------------------------------------------------- runner

namespace {

std::uint64_t cell_seed(std::uint64_t base, std::size_t state_idx, std::size_t eta_idx,
                        bool direct) {
    std::uint64_t x = base;
    x ^= 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(state_idx + 1);
    x ^= 0xbf58476d1ce4e5b9ULL * static_cast<std::uint64_t>(eta_idx + 1);
    if (direct) x ^= 0x94d049bb133111ebULL;
    return splitmix64(x);
}

struct PhaseHistRow {
    std::string state;
    double eta;
    int bin;
    double center;
    double mass;
};

struct MatrixFileContent {
    std::string name;
    std::string text;
};

ResultRow make_row(const char* analysis, const std::string& state, double eta,
                   std::string quantity, double param, const EstimateWithCI& est) {
    ResultRow row;
    row.analysis = analysis;
    row.state = state;
    row.eta = eta;
    row.quantity = std::move(quantity);
    row.param = param;
    row.value_re = est.value.real();
    row.value_im = est.value.imag();
    row.ci_re = est.hw_re;
    row.ci_im = est.hw_im;
    return row;
}

ResultRow scalar_row(const char* analysis, const std::string& state, double eta,
                     std::string quantity, double param, double value) {
    ResultRow row;
    row.analysis = analysis;
    row.state = state;
    row.eta = eta;
    row.quantity = std::move(quantity);
    row.param = param;
    row.value_re = value;
    return row;
}

std::string matrix_cell(const ReconstructionResult& rec, int m, int n) {
    const Complex v = rec.elements(m, n);
    if (m == n) return fmt_f3(v.real()) + "\xc2\xb1" + fmt_f3(rec.hw_re(m, n));
    const std::string val = "(" + fmt_f3(v.real()) + (v.imag() < 0 ? "-" : "+") +
                            fmt_f3(std::abs(v.imag())) + "i)";
    const std::string hw =
        "(" + fmt_f3(rec.hw_re(m, n)) + "+" + fmt_f3(rec.hw_im(m, n)) + "i)";
    return val + "\xc2\xb1" + hw;
}

bool eta_matches(const ExpectRule& rule, double eta) {
    if (rule.eta == "*") return true;
    return std::abs(std::strtod(rule.eta.c_str(), nullptr) - eta) <= 1e-9;
}

void evaluate_rule(const ExpectRule& rule, const std::vector<ResultRow>& rows,
                   std::vector<std::string>& failures) {
    std::vector<const ResultRow*> matched;
    for (const ResultRow& row : rows)
        if (row.analysis == rule.analysis && row.quantity == rule.quantity &&
            (rule.state == "*" || row.state == rule.state) && eta_matches(rule, row.eta))
            matched.push_back(&row);

    const auto fail = [&](const std::string& why) {
        failures.push_back("expect (line " + std::to_string(rule.line) + ") '" + rule.text +
                           "': " + why);
    };
    if (matched.empty()) {
        fail("matched no result rows");
        return;
    }

    switch (rule.op) {
    case ExpectRule::Op::Within:
        for (const ResultRow* row : matched) {
            const double rad_re = rule.absolute ? rule.radius : rule.radius * row->ci_re;
            const double rad_im = rule.absolute ? rule.radius : rule.radius * row->ci_im;
            if (std::abs(row->value_re - rule.target.real()) > rad_re + 1e-12 ||
                std::abs(row->value_im - rule.target.imag()) > rad_im + 1e-12) {
                fail("state " + row->state + " eta " + fmt_g(row->eta) + " got " +
                     fmt_g(row->value_re) + (row->value_im != 0.0 || rule.target.imag() != 0.0
                                                 ? "," + fmt_g(row->value_im)
                                                 : "") +
                     " outside " + fmt_g(rule.target.real()) + "," +
                     fmt_g(rule.target.imag()) + " radius " + fmt_g(rad_re) + "/" +
                     fmt_g(rad_im));
                return;
            }
        }
        break;
    case ExpectRule::Op::AtLeast:
    case ExpectRule::Op::AtMost:
        for (const ResultRow* row : matched) {
            const bool ok = rule.op == ExpectRule::Op::AtLeast
                                ? row->value_re >= rule.bound - 1e-12
                                : row->value_re <= rule.bound + 1e-12;
            if (!ok) {
                fail("state " + row->state + " eta " + fmt_g(row->eta) + " got " +
                     fmt_g(row->value_re));
                return;
            }
        }
        break;
    case ExpectRule::Op::IncreasingInEta:
    case ExpectRule::Op::DecreasingInEta: {
        std::map<std::string, std::vector<const ResultRow*>> per_state;
        for (const ResultRow* row : matched) per_state[row->state].push_back(row);
        for (auto& [state, seq] : per_state) {
            std::sort(seq.begin(), seq.end(),
                      [](const ResultRow* a, const ResultRow* b) { return a->eta < b->eta; });
            if (seq.size() < 2) {
                fail("state " + state + " has fewer than two eta points");
                return;
            }
            for (std::size_t i = 1; i < seq.size(); ++i) {
                const bool ok = rule.op == ExpectRule::Op::IncreasingInEta
                                    ? seq[i]->value_re > seq[i - 1]->value_re
                                    : seq[i]->value_re < seq[i - 1]->value_re;
                if (!ok) {
                    fail("state " + state + " not monotonic between eta " +
                         fmt_g(seq[i - 1]->eta) + " and " + fmt_g(seq[i]->eta));
                    return;
                }
            }
        }
        break;
    }
    }
}

} // namespace

RunOutcome run(const ExperimentConfig& config, const RunOptions& options) {
    RunOutcome outcome;
    const std::uint64_t seed = options.seed_override.value_or(config.seed);
    const std::string out_dir =
        options.out_dir_override.value_or(config.output_dir.empty() ? "." : config.output_dir);

    // One sample set per (state, eta) cell, shared by every analysis.
    std::vector<DensityMatrix> states;
    std::vector<HeterodyneSampler> samplers;
    states.reserve(config.states.size());
    samplers.reserve(config.states.size());
    for (const auto& [label, spec] : config.states) {
        states.push_back(build_state(spec));
        samplers.emplace_back(states.back());
    }

    bool need_direct = false;
    for (const AnalysisRequest& an : config.analyses)
        need_direct = need_direct || an.kind == AnalysisRequest::Kind::CompareDirect;

    std::vector<std::vector<HeterodyneSampleSet>> het(config.states.size());
    std::vector<std::vector<CountSampleSet>> direct(config.states.size());
    for (std::size_t si = 0; si < config.states.size(); ++si)
        for (std::size_t ei = 0; ei < config.eta_list.size(); ++ei) {
            const double eta = config.eta_list[ei];
            het[si].push_back(samplers[si].sample(
                DetectorConfig{eta, config.n_samples, cell_seed(seed, si, ei, false)},
                config.states[si].first));
            if (need_direct)
                direct[si].push_back(sample_direct(
                    states[si],
                    DetectorConfig{eta, config.n_samples, cell_seed(seed, si, ei, true)}));
        }

    std::vector<PhaseHistRow> hist_rows;
    std::vector<MatrixFileContent> matrix_files;

    for (const AnalysisRequest& an : config.analyses) {
        const char* name = analysis_name(an.kind);
        for (std::size_t si = 0; si < config.states.size(); ++si) {
            const std::string& label = config.states[si].first;
            for (std::size_t ei = 0; ei < config.eta_list.size(); ++ei) {
                const double eta = config.eta_list[ei];
                const HeterodyneSampleSet& samples = het[si][ei];
                auto& rows = outcome.table.rows;

                switch (an.kind) {
                case AnalysisRequest::Kind::Moments:
                    for (const auto& [n, d] : an.orders)
                        rows.push_back(make_row(
                            name, label, eta,
                            "m_" + std::to_string(n) + "_" + std::to_string(d), 0.0,
                            estimate_normal_moment(samples, n, d)));
                    break;
                case AnalysisRequest::Kind::Quadratures:
                    for (std::size_t ai = 0; ai < an.angles.size(); ++ai) {
                        const double phi = an.angles[ai];
                        const QuadratureEstimate q =
                            estimate_quadrature(samples, phi, config.n_blocks);
                        const std::string idx = std::to_string(ai);
                        rows.push_back(make_row(name, label, eta, "x_mean_" + idx, phi, q.mean));
                        rows.push_back(
                            make_row(name, label, eta, "x_second_" + idx, phi, q.second));
                        rows.push_back(
                            make_row(name, label, eta, "x_var_" + idx, phi, q.variance));
                    }
                    break;
                case AnalysisRequest::Kind::Phase: {
                    const PhaseHistogram hist = phase_histogram(samples, an.n_bins);
                    const PhaseModes modes = find_phase_modes(hist);
                    const double bins = static_cast<double>(an.n_bins);
                    rows.push_back(scalar_row(name, label, eta, "n_peaks", bins,
                                              static_cast<double>(modes.peak_bins.size())));
                    double separation = 0.0;
                    if (modes.peak_bins.size() == 2) {
                        const double raw = std::abs(hist.bin_center(modes.peak_bins[1]) -
                                                    hist.bin_center(modes.peak_bins[0]));
                        separation = std::min(raw, 2.0 * M_PI - raw);
                    }
                    rows.push_back(scalar_row(name, label, eta, "peak_separation", bins,
                                              separation));
                    const double height =
                        modes.peak_bins.empty()
                            ? 0.0
                            : *std::max_element(modes.smoothed_masses.begin(),
                                                modes.smoothed_masses.end());
                    rows.push_back(scalar_row(name, label, eta, "peak_height", bins, height));
                    for (int b = 0; b < hist.n_bins; ++b)
                        hist_rows.push_back({label, eta, b, hist.bin_center(b),
                                             hist.bin_masses[static_cast<std::size_t>(b)]});
                    break;
                }
                case AnalysisRequest::Kind::Reconstruct: {
                    int N = an.cutoff;
                    bool searched = false;
                    bool unstable = false;
                    if (N < 0) {
                        const CutoffChoice choice =
                            choose_cutoff(samples, an.max_cutoff, config.n_blocks);
                        N = choice.cutoff_N;
                        unstable = choice.unstable;
                        searched = true;
                    }
                    const ReconstructionResult rec = reconstruct(samples, N, config.n_blocks);
                    rows.push_back(scalar_row(name, label, eta, "cutoff",
                                              static_cast<double>(N),
                                              static_cast<double>(N)));
                    if (searched)
                        rows.push_back(scalar_row(name, label, eta, "unstable",
                                                  static_cast<double>(N), unstable ? 1.0 : 0.0));
                    for (int m = 0; m <= N; ++m)
                        for (int n = 0; n <= m; ++n) {
                            ResultRow row;
                            row.analysis = name;
                            row.state = label;
                            row.eta = eta;
                            row.quantity =
                                "rho_" + std::to_string(m) + "_" + std::to_string(n);
                            row.param = static_cast<double>(N);
                            row.value_re = rec.elements(m, n).real();
                            row.value_im = rec.elements(m, n).imag();
                            row.ci_re = rec.hw_re(m, n);
                            row.ci_im = rec.hw_im(m, n);
                            rows.push_back(row);
                        }
                    rows.push_back(make_row(name, label, eta, "trace",
                                            static_cast<double>(N), rec.trace_estimate));

                    std::string text;
                    text += "# state: " + label + "  eta: " + fmt_g(eta) +
                            "  cutoff: " + std::to_string(N);
                    if (searched) text += unstable ? "  (unstable)" : "  (stable)";
                    text += "\n";
                    for (int m = 0; m <= N; ++m) {
                        for (int n = 0; n <= N; ++n)
                            text += (n ? "  " : "") + matrix_cell(rec, m, n);
                        text += "\n";
                    }
                    matrix_files.push_back(
                        {config.prefix + "_matrix_" + label + "_eta" + std::to_string(ei) +
                             ".txt",
                         text});
                    break;
                }
                case AnalysisRequest::Kind::CompareDirect: {
                    const EstimateWithCI n_het = estimate_mean_photon(samples);
                    const EstimateWithCI n_dir = estimate_mean_photon(direct[si][ei]);
                    rows.push_back(make_row(name, label, eta, "n_het", 0.0, n_het));
                    rows.push_back(make_row(name, label, eta, "n_dir", 0.0, n_dir));
                    const double db = 20.0 * std::log10(n_het.hw_re / n_dir.hw_re);
                    rows.push_back(scalar_row(name, label, eta, "db_added", 0.0, db));
                    break;
                }
                case AnalysisRequest::Kind::Shift:
                    for (std::size_t ai = 0; ai < an.angles.size(); ++ai)
                        rows.push_back(make_row(name, label, eta,
                                                "shift_" + std::to_string(ai), an.angles[ai],
                                                estimate_shift_operator(samples,
                                                                        an.angles[ai])));
                    break;
                }
            }
        }
    }

    // Metadata block shared by every artifact.
    auto& meta = outcome.table.metadata;
    meta.push_back(version_string());
    meta.push_back("seed: " + std::to_string(seed));
    meta.push_back("samples: " + std::to_string(config.n_samples));
    meta.push_back("blocks: " + std::to_string(config.n_blocks));
    {
        std::string etas = "eta:";
        for (const double e : config.eta_list) etas += " " + fmt_g(e);
        meta.push_back(etas);
    }
    for (const auto& [label, spec] : config.states)
        meta.push_back("state " + label + ": " + describe(spec));
    if (!options.reproducible) {
        char stamp[32];
        const std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        meta.push_back(std::string("generated: ") + stamp);
    }

    // Artifacts: one CSV per analysis kind, plus the phase histogram dump and
    // the matrix renderings.
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    const auto open_out = [&](const std::string& file_name) {
        const std::string path = (std::filesystem::path(out_dir) / file_name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        outcome.files_written.push_back(path);
        return out;
    };
    const auto write_meta = [&](std::ofstream& out) {
        for (const std::string& line : meta) out << "# " << line << "\n";
    };

    std::vector<std::string> kinds_written;
    for (const AnalysisRequest& an : config.analyses) {
        const std::string name = analysis_name(an.kind);
        bool seen = false;
        for (const std::string& k : kinds_written) seen = seen || k == name;
        if (seen) continue;
        kinds_written.push_back(name);

        std::ofstream out = open_out(config.prefix + "_" + name + ".csv");
        write_meta(out);
        out << "analysis,state,eta,quantity,param,value_re,value_im,ci_re,ci_im\n";
        for (const ResultRow& row : outcome.table.rows)
            if (row.analysis == name)
                out << row.analysis << ',' << row.state << ',' << fmt_g(row.eta) << ','
                    << row.quantity << ',' << fmt_g(row.param) << ',' << fmt_g(row.value_re)
                    << ',' << fmt_g(row.value_im) << ',' << fmt_g(row.ci_re) << ','
                    << fmt_g(row.ci_im) << "\n";
        if (!out) throw IoError("failed while writing results CSV");
    }

    if (!hist_rows.empty()) {
        std::ofstream out = open_out(config.prefix + "_phase_hist.csv");
        write_meta(out);
        out << "state,eta,bin,bin_center,mass\n";
        for (const PhaseHistRow& r : hist_rows)
            out << r.state << ',' << fmt_g(r.eta) << ',' << r.bin << ',' << fmt_g(r.center)
                << ',' << fmt_g(r.mass) << "\n";
    }
    for (const MatrixFileContent& mf : matrix_files) {
        std::ofstream out = open_out(mf.name);
        write_meta(out);
        out << mf.text;
    }

    for (const ExpectRule& rule : config.expectations)
        evaluate_rule(rule, outcome.table.rows, outcome.failed_expectations);
    return outcome;
}

} // namespace hetsim
