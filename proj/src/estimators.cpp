#include "blockmt/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blockmt {

namespace {

double estimate(const PValueMatrix& pvalues, double lambda, std::size_t offset) {
    require_lambda(lambda);
    const auto n = static_cast<double>(pvalues.layout().total());
    const auto r = static_cast<double>(r_lambda(pvalues, lambda));
    return (n - r + static_cast<double>(offset)) / (1.0 - lambda);
}

} // namespace

std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::storey: return "storey";
    case EstimatorKind::block: return "block";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
    if (name == "storey") return EstimatorKind::storey;
    if (name == "block") return EstimatorKind::block;
    throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

void require_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("lambda must lie in (0, 1), got " + std::to_string(lambda));
    }
}

std::size_t r_lambda(const PValueMatrix& pvalues, double lambda) {
    require_lambda(lambda);
    std::size_t count = 0;
    for (double p : pvalues.flat()) {
        if (p <= lambda) ++count;
    }
    return count;
}

double n0_block(const PValueMatrix& pvalues, double lambda) {
    return estimate(pvalues, lambda, pvalues.layout().max_size());
}

double n0_storey(const PValueMatrix& pvalues, double lambda) {
    return estimate(pvalues, lambda, 1);
}

double lambda_threshold(std::size_t blocks) {
    if (blocks < 1) throw std::invalid_argument("block count must be at least 1");
    const auto b = static_cast<double>(blocks);
    return std::pow(2.0 * b + 3.0, -2.0 / (b + 2.0));
}

EstimatorSpec::EstimatorSpec(EstimatorKind kind, double lambda) : kind_(kind), lambda_(lambda) {
    require_lambda(lambda);
}

double EstimatorSpec::operator()(const PValueMatrix& pvalues) const {
    return kind_ == EstimatorKind::block ? n0_block(pvalues, lambda_)
                                         : n0_storey(pvalues, lambda_);
}

} // namespace blockmt
