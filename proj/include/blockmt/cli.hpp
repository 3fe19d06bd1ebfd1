#ifndef BLOCKMT_CLI_HPP
#define BLOCKMT_CLI_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "blockmt/estimators.hpp"
#include "blockmt/simulation.hpp"

namespace blockmt::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_verification_failed = 1,
    exit_input_error = 2,
    exit_parameter_error = 3,
};

enum class OutputFormat { json, csv, tsv };

/// Environment variable holding the default simulation seed.
inline constexpr const char* seed_env_var = "BLOCKMT_SEED";

struct AnalysisRequest {
    std::string input_path;
    /// bh, bonferroni, two-stage-bh, adaptive-bh, adaptive-bonferroni, bky
    std::string method = "two-stage-bh";
    double alpha = 0.05;
    std::optional<double> lambda;
    EstimatorKind estimator = EstimatorKind::block;
    OutputFormat format = OutputFormat::json;
};

bool is_adaptive_method(std::string_view method);

/// Decisions, R, B, n0_hat and pi0_hat on `out`; the below-threshold lambda
/// warning and error messages on `err`.
int cmd_test(const AnalysisRequest& request, std::ostream& out, std::ostream& err);

/// CSV on `out`, one row per (method, s, lambda, rho).
int cmd_simulate(const SimGrid& grid, unsigned threads, std::ostream& out, std::ostream& err);

struct VerifyScope {
    bool property1 = false;
    bool lemma1 = false;
    bool lemma2 = false;
    bool identity = false;
    bool oracles = false;
    std::size_t max_blocks = 12;
    std::size_t max_block_size = 4;
    std::size_t instances = 1000;
    std::uint64_t seed = 0;

    /// Nothing selected means everything.
    bool any() const { return property1 || lemma1 || lemma2 || identity || oracles; }
};

int cmd_verify(const VerifyScope& scope, std::ostream& out, std::ostream& err);

int cmd_threshold(long long blocks, std::ostream& out, std::ostream& err);

/// Default seed from BLOCKMT_SEED, or 0 when unset. Throws
/// std::invalid_argument when set to something other than an unsigned integer.
std::uint64_t default_seed();

} // namespace blockmt::cli

#endif // BLOCKMT_CLI_HPP
