#ifndef BLOCKMT_IO_HPP
#define BLOCKMT_IO_HPP

#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockmt/core.hpp"
#include "blockmt/simulation.hpp"

namespace blockmt {

/// Malformed input file; `line` is 1-based (0 when not tied to a line).
class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// P-values read from a `block_id,hypothesis_id,p_value` file. Blocks are
/// ordered by first appearance; hypotheses keep file order within a block.
struct LabeledPValues {
    PValueMatrix matrix;
    std::vector<std::string> block_ids;
    std::vector<std::vector<std::string>> hypothesis_ids;
};

LabeledPValues read_pvalue_csv(std::istream& in);
LabeledPValues read_pvalue_file(const std::string& path);

/// Summary and per-hypothesis decisions of one analysis.
struct AnalysisReport {
    std::string method;
    double alpha = 0.0;
    std::optional<double> lambda;
    std::optional<std::string> estimator;
    double lambda_threshold = 0.0;
    TestOutcome outcome;
};

nlohmann::json to_json(const AnalysisReport& report, const LabeledPValues& data);

/// Rebuilds the outcome part (rejections, B, estimate) from `to_json` output.
TestOutcome outcome_from_json(const nlohmann::json& doc);

/// Delimited table (`,` or `\t`) preceded by `# key=value` summary lines.
std::string to_delimited(const AnalysisReport& report, const LabeledPValues& data, char sep);

/// `key = value` simulation settings; `#` starts a comment. Keys: preset, n,
/// n0, s, lambda, rho, alpha, d, reps, seed, methods (lists comma-separated).
/// Settings apply on top of `start`; a `preset` line replaces the grid
/// (keeping the seed) and later keys override it.
SimGrid read_grid_config(std::istream& in, SimGrid start);

} // namespace blockmt

#endif // BLOCKMT_IO_HPP
