#ifndef BLOCKMT_PROCEDURES_HPP
#define BLOCKMT_PROCEDURES_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "blockmt/core.hpp"
#include "blockmt/estimators.hpp"

namespace blockmt {

/// Bonferroni-adjusted block minima s_bar * min_j P_ij. Entries may exceed 1.
struct BlockPValues {
    std::vector<double> values;
};

BlockPValues block_pvalues(const PValueMatrix& pvalues);

/// Two-stage BH under block dependence.
///
/// Stage one runs BH over the b block p-values at level alpha and finds
/// B = max{i : P~_(i) <= i alpha / b}. Stage two rejects every H_ij whose
/// block satisfies P~_i <= P~_(B) and whose own p-value satisfies
/// P_ij <= B alpha / n. With no significant block nothing is rejected and
/// B = 0. A significant block with no individual rejection is legal (B >= 1,
/// R = 0).
TestOutcome two_stage_bh(const PValueMatrix& pvalues, double alpha);

/// Adaptive two-stage BH: the two-stage procedure applied to the shrunken
/// p-values Q_ij = pi0_hat * P_ij, pi0_hat = n0_hat / n, with n0_hat evaluated
/// once on the full matrix. Q values are not truncated at 1.
TestOutcome adaptive_bh(const PValueMatrix& pvalues, double alpha, const EstimatorSpec& estimator);

/// As above with a caller-supplied null-count estimate (must be positive).
TestOutcome adaptive_bh(const PValueMatrix& pvalues, double alpha, double n0_hat);

/// Single-step test at threshold alpha / n0_hat.
TestOutcome adaptive_bonferroni(const PValueMatrix& pvalues, double alpha,
                                const EstimatorSpec& estimator);
TestOutcome adaptive_bonferroni(const PValueMatrix& pvalues, double alpha, double n0_hat);

/// Flat adaptive BH: step-up of Q_i = (n0_hat / n) P_i against i alpha / n.
/// Ignores block structure.
std::vector<std::size_t> adaptive_bh_flat(std::span<const double> pvalues, double alpha,
                                          double n0_hat);

/// Benjamini-Krieger-Yekutieli two-stage adaptive BH on a flat list.
///
/// BH at alpha' = alpha / (1 + alpha) gives r1 rejections; r1 = 0 accepts
/// all, r1 = n rejects all, otherwise the step-up is rerun with constants
/// i alpha' / (n - r1).
std::vector<std::size_t> bky_adaptive_bh(std::span<const double> pvalues, double alpha);

} // namespace blockmt

#endif // BLOCKMT_PROCEDURES_HPP
