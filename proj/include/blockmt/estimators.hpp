#ifndef BLOCKMT_ESTIMATORS_HPP
#define BLOCKMT_ESTIMATORS_HPP

#include <cstddef>
#include <string_view>

#include "blockmt/core.hpp"

namespace blockmt {

enum class EstimatorKind {
    /// (n - R(lambda) + 1) / (1 - lambda)
    storey,
    /// (n - R(lambda) + s_max) / (1 - lambda)
    block,
};

std::string_view to_string(EstimatorKind kind);
/// Accepts "storey" and "block"; throws std::invalid_argument otherwise.
EstimatorKind estimator_kind_from_string(std::string_view name);

/// Number of p-values not exceeding lambda.
std::size_t r_lambda(const PValueMatrix& pvalues, double lambda);

/// Block-aware null-count estimate. Not clamped to [1, n].
double n0_block(const PValueMatrix& pvalues, double lambda);

/// Storey-type estimate, the block estimate with s_max replaced by 1.
double n0_storey(const PValueMatrix& pvalues, double lambda);

/// Smallest lambda for which the block estimate is certified for b blocks:
/// (2b + 3)^(-2 / (b + 2)). Throws std::invalid_argument for b < 1.
double lambda_threshold(std::size_t blocks);

void require_lambda(double lambda);

/// A null-count estimator: kind plus tuning parameter, callable on a matrix.
class EstimatorSpec {
public:
    EstimatorSpec(EstimatorKind kind, double lambda);

    EstimatorKind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }

    double operator()(const PValueMatrix& pvalues) const;

private:
    EstimatorKind kind_;
    double lambda_;
};

} // namespace blockmt

#endif // BLOCKMT_ESTIMATORS_HPP
