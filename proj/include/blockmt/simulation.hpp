#ifndef BLOCKMT_SIMULATION_HPP
#define BLOCKMT_SIMULATION_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockmt/core.hpp"

namespace blockmt {

enum class Method {
    BH,     ///< conventional BH on the flat p-values
    tsBH,   ///< two-stage BH under block dependence
    adBH1,  ///< flat adaptive BH with the Storey estimate
    adBH2,  ///< adaptive two-stage BH with the block estimate
    adBH3,  ///< Benjamini-Krieger-Yekutieli two-stage BH
    Bonf,   ///< Bonferroni
    adBon1, ///< adaptive Bonferroni with the Storey estimate
    adBon2, ///< adaptive Bonferroni with the block estimate
};

std::string_view method_name(Method method);
/// Throws std::invalid_argument on an unknown name.
Method method_from_name(std::string_view name);
/// Whether the method's decisions depend on lambda.
bool uses_lambda(Method method);

struct SimConfig {
    std::size_t n = 240;
    std::size_t n0 = 120;
    std::size_t block_size = 2;
    double rho = 0.0;
    double signal = std::sqrt(10.0);
    double alpha = 0.05;
    double lambda = 0.5;
    std::size_t reps = 2000;
    std::uint64_t seed = 0;
    std::vector<Method> methods{Method::BH, Method::adBH1, Method::adBH2, Method::adBH3};

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Monte Carlo mean with its standard error (absent when reps == 1).
struct MetricEstimate {
    double mean = 0.0;
    std::optional<double> se;
};

struct SimRow {
    Method method = Method::BH;
    std::size_t n = 0;
    std::size_t n0 = 0;
    std::size_t block_size = 0;
    double lambda = 0.0;
    double rho = 0.0;
    double alpha = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    MetricEstimate fdr;
    MetricEstimate fwer;
    MetricEstimate power;
};

struct SimReport {
    std::vector<SimRow> rows;
};

/// Per-replication statistics of one method: V / max(R, 1), I(V >= 1) and
/// the share of false nulls rejected.
struct ReplicationStats {
    double false_discovery_proportion = 0.0;
    double any_false_rejection = 0.0;
    double power = 0.0;
};

/// Null/alternative pattern: n0 / b true nulls per block with the last
/// (n0 mod b) blocks holding one extra, true nulls first within each block.
/// Throws std::invalid_argument when s does not divide n or n0 > n.
TruthAssignment truth_layout(std::size_t n, std::size_t n0, std::size_t block_size);

/// Standard normal CDF. Throws std::invalid_argument on non-finite input.
double normal_cdf(double x);

/// 2 (1 - Phi(|z|)), evaluated without cancellation.
double two_sided_pvalue(double z);

/// Block-equicorrelated normal scores X_ij = mu_ij + sqrt(rho) Z_i +
/// sqrt(1 - rho) e_ij with mu_ij = signal for false nulls, mapped to
/// two-sided p-values.
PValueMatrix generate(const SimConfig& config, const TruthAssignment& truth, std::mt19937_64& rng);

/// Independent generator for one replication of one (n, n0, s, rho, signal)
/// cell. Identical inputs give identical streams.
std::mt19937_64 replication_stream(const SimConfig& config, std::uint64_t replication);

/// Runs every requested method on one replicated dataset.
/// Result is indexed [lambda][method].
std::vector<std::vector<ReplicationStats>> evaluate_replication(
    const SimConfig& config, const TruthAssignment& truth, std::span<const double> lambdas,
    std::uint64_t replication);

/// Monte Carlo estimates for one configuration, one row per method.
/// `threads` = 0 picks the hardware concurrency. Output does not depend on it.
SimReport run_mc(const SimConfig& config, unsigned threads = 0);

/// Cartesian grid over block size, lambda and rho around a base config.
struct SimGrid {
    SimConfig base;
    std::vector<std::size_t> block_sizes;
    std::vector<double> lambdas;
    std::vector<double> rhos;
};

/// Rho values 0, 0.1, ..., 0.9.
std::vector<double> default_rho_grid();

/// "fdr-figures" or "fwer-figures". Throws std::invalid_argument otherwise.
SimGrid preset_grid(std::string_view name);

/// Rows ordered by block size, lambda, rho, then method.
SimReport run_grid(const SimGrid& grid, unsigned threads = 0);

/// Sum in a fixed pairwise tree so the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error (sample sd / sqrt(count)) of per-replication values.
MetricEstimate summarize(std::span<const double> values);

inline constexpr std::string_view sim_csv_header =
    "method,n,n0,s,lambda,rho,alpha,reps,seed,fdr,fdr_se,fwer,fwer_se,power,power_se";

std::string to_csv(const SimReport& report);

} // namespace blockmt

#endif // BLOCKMT_SIMULATION_HPP
