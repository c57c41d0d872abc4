// Batch experiment runner: a parsed config names states, efficiencies and
// analyses; run() samples each (state, eta) cell once, feeds every analysis
// from the shared sample set, writes one CSV per analysis and evaluates the
// config's embedded expectation rules.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hetsim/reconstruction.hpp"

namespace hetsim {

struct AnalysisRequest {
    enum class Kind { Moments, Quadratures, Phase, Reconstruct, CompareDirect, Shift };

    Kind kind = Kind::Moments;
    std::vector<std::pair<int, int>> orders; // Moments: (n, d) pairs
    std::vector<double> angles;              // Quadratures / Shift
    int n_bins = 64;                         // Phase
    int cutoff = -1;                         // Reconstruct: fixed N
    int max_cutoff = -1;                     // Reconstruct: stability search bound
};

const char* analysis_name(AnalysisRequest::Kind kind);

// One line from an [expect] section. Within compares value against target
// componentwise, radius in CI multiples or absolute units; AtLeast/AtMost
// bound the real part; the eta-trend ops check monotonicity of the real part
// across the eta grid.
struct ExpectRule {
    enum class Op { Within, AtLeast, AtMost, IncreasingInEta, DecreasingInEta };

    std::string analysis;
    std::string state; // label or "*"
    std::string eta;   // literal value or "*"
    std::string quantity;
    Op op = Op::Within;
    Complex target;
    double radius = 0.0;
    bool absolute = false; // radius in absolute units instead of CI multiples
    double bound = 0.0;
    int line = 0;
    std::string text;
};

struct ExperimentConfig {
    std::vector<std::pair<std::string, StateSpec>> states; // label -> spec, config order
    std::vector<double> eta_list;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 1;
    int n_blocks = 50;
    std::vector<AnalysisRequest> analyses;
    std::string output_dir; // empty: current directory
    std::string prefix = "results";
    std::vector<ExpectRule> expectations;
};

struct ResultRow {
    std::string analysis;
    std::string state;
    double eta = 0.0;
    std::string quantity;
    double param = 0.0; // angle, bin count or cutoff where meaningful
    double value_re = 0.0;
    double value_im = 0.0;
    double ci_re = 0.0;
    double ci_im = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<std::string> metadata; // header lines without the leading '#'
};

struct RunOptions {
    bool reproducible = false; // suppress the timestamp metadata line
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_dir_override;
};

struct RunOutcome {
    ResultTable table;
    std::vector<std::string> failed_expectations;
    std::vector<std::string> files_written;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Name -> config text for the examples compiled into the library.
const std::vector<std::pair<std::string, std::string>>& bundled_configs();

RunOutcome run(const ExperimentConfig& config, const RunOptions& options = {});

const char* version_string();

} // namespace hetsim
