#ifndef BLOCKMT_VERIFICATION_HPP
#define BLOCKMT_VERIFICATION_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "blockmt/core.hpp"
#include "blockmt/estimators.hpp"
#include "blockmt/simulation.hpp"

namespace blockmt::verify {

/// Layout, truth and lambda for a Dirac-uniform check: false nulls fixed at
/// 0, true nulls i.i.d. U(0, 1).
struct DUCheckInput {
    BlockLayout layout;
    TruthAssignment truth;
    double lambda;

    /// Throws std::invalid_argument on a layout mismatch or lambda outside (0, 1).
    void validate() const;
};

/// Exact Dirac-uniform value of
///   sum_ij I(H_ij = 0) E{ 1 / n0_block(P^(-i), 0) }
/// for the block estimate. Deleting row i and zeroing it leaves n - R(lambda)
/// equal to the number of true nulls outside row i that exceed lambda, a
/// Binomial(n0 - m_i, 1 - lambda) count W_i, so the sum is
///   sum_i m_i (1 - lambda) E{ 1 / (W_i + s_max) }.
double property1_lhs_exact(const DUCheckInput& input);

/// Same quantity from per-block true-null counts and the largest block size.
double property1_lhs_exact(std::span<const std::size_t> nulls_per_block,
                           std::size_t max_block_size, double lambda);

using NullCountEstimator = std::function<double(const PValueMatrix&)>;

/// Monte Carlo version for any estimator: each replication draws a
/// Dirac-uniform matrix and, for every block holding true nulls, evaluates
/// the estimator with that block zeroed.
MetricEstimate property1_lhs_mc(const DUCheckInput& input, const NullCountEstimator& estimator,
                                std::size_t reps, std::uint64_t seed);

struct CertificationReport {
    std::size_t configurations = 0;
    double max_lhs = 0.0;
    std::size_t worst_blocks = 0;
    std::size_t worst_max_size = 0;
    double worst_lambda = 0.0;
    std::vector<std::size_t> worst_nulls;
    bool passed = true;
};

/// Exhaustive check of the block estimate over b <= max_blocks, s_max <=
/// max_block_size and every multiset of per-block true-null counts, at
/// lambda = lambda_threshold(b), lambda_threshold(b) + 0.05 and a grid above
/// the threshold. Passes when every value is <= 1 + tolerance.
CertificationReport certify_block_estimator(std::size_t max_blocks, std::size_t max_block_size,
                                            double tolerance = 1e-12);

/// Binomial(n, theta) probability of k.
double binomial_pmf(std::size_t n, std::size_t k, double theta);

/// E{1 / (1 + X)}, X ~ Bin(n, theta), by the closed form
/// [1 - (1 - theta)^(n+1)] / ((n + 1) theta). Returns 1 for theta == 0.
/// Throws for theta outside [0, 1].
double binomial_inverse_moment(std::size_t n, double theta);

/// The same expectation by direct summation over the pmf.
double binomial_inverse_moment_by_summation(std::size_t n, double theta);

/// Dense p x q matrix with 0/1 entries.
class ZeroOneMatrix {
public:
    /// Throws std::invalid_argument on ragged rows or entries other than 0/1.
    static ZeroOneMatrix from_rows(const std::vector<std::vector<int>>& rows);
    ZeroOneMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    int operator()(std::size_t r, std::size_t c) const { return cells_.at(r * cols_ + c); }
    void set(std::size_t r, std::size_t c, int v);

    std::size_t total() const;
    std::vector<std::size_t> row_sums() const;
    std::vector<std::size_t> column_sums() const;

    bool operator==(const ZeroOneMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<int> cells_;
};

/// Moves the ones of each row among that row's cells so that every column sum
/// is floor(m/q) or floor(m/q) + 1. Rows are processed top to bottom, each
/// placing its ones in the currently least-filled columns (lowest index first).
ZeroOneMatrix balanced_rearrangement(const ZeroOneMatrix& matrix);

/// Row sums preserved and every column sum within {floor(m/q), floor(m/q) + 1}.
bool is_balanced_rearrangement(const ZeroOneMatrix& original, const ZeroOneMatrix& arranged);

/// f(x) = (2x + 3)^(-2 / (x + 2)); throws for x < 0.
double lemma2_f(double x);

/// f nondecreasing over grid points in [max(lo, 1), hi] and f(x) <= f(1) for
/// grid points in [lo, 1].
bool grid_monotonicity_check(double lo, double hi, double step);

enum class OracleMethod { two_stage_bh, adaptive_bh, adaptive_bonferroni };

inline constexpr std::size_t oracle_max_hypotheses = 20;

/// Literal exhaustive-scan evaluation of the block procedures, independent of
/// the production code. Adaptive methods need `estimator`. Throws
/// std::invalid_argument above oracle_max_hypotheses.
std::vector<HypothesisIndex> brute_force_procedure(const PValueMatrix& pvalues, double alpha,
                                                   OracleMethod method,
                                                   std::optional<EstimatorSpec> estimator = {});

/// Random ragged matrix with 1..max_blocks blocks of 1..max_size entries.
/// About a third of the instances draw p-values from a coarse grid (ties,
/// exact 0 and 1); the rest are U^3 so small values are common.
PValueMatrix random_pvalue_matrix(std::mt19937_64& rng, std::size_t max_blocks,
                                  std::size_t max_size);

/// Random p x q 0/1 matrix with p, q in 1..max_dim and a random fill rate.
ZeroOneMatrix random_zero_one_matrix(std::mt19937_64& rng, std::size_t max_dim);

/// Step-up by trying every R from n down to 1.
std::vector<std::size_t> brute_force_stepup(std::span<const double> values,
                                            std::span<const double> constants);

} // namespace blockmt::verify

#endif // BLOCKMT_VERIFICATION_HPP
