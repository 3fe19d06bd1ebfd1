#include "blockmt/procedures.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace blockmt {

namespace {

// Two-stage BH on the p-values scaled by `shrink` (1 for the plain method).
TestOutcome scaled_two_stage(const PValueMatrix& pvalues, double alpha, double shrink) {
    const auto& layout = pvalues.layout();
    const std::size_t b = layout.blocks();
    const auto n = static_cast<double>(layout.total());

    std::vector<double> block_values = block_pvalues(pvalues).values;
    for (double& v : block_values) v *= shrink;

    const auto constants = detail::linear_constants(b, alpha);
    const auto cut = detail::stepup_cut(block_values, constants);

    TestOutcome outcome;
    outcome.significant_blocks = cut.count;
    if (cut.count == 0) return outcome;

    const double item_threshold = static_cast<double>(cut.count) * alpha / n;
    for (std::size_t i = 0; i < b; ++i) {
        if (block_values[i] > cut.cutoff) continue;
        const auto row = pvalues.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (shrink * row[j] <= item_threshold) outcome.rejected.push_back({i, j});
        }
    }
    return outcome;
}

void require_estimate(double n0_hat) {
    if (!(n0_hat > 0.0)) throw std::invalid_argument("null-count estimate must be positive");
}

} // namespace

BlockPValues block_pvalues(const PValueMatrix& pvalues) {
    const auto& layout = pvalues.layout();
    const double mean_size = layout.mean_size();
    BlockPValues out;
    out.values.reserve(layout.blocks());
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        const auto row = pvalues.row(i);
        out.values.push_back(mean_size * *std::min_element(row.begin(), row.end()));
    }
    return out;
}

TestOutcome two_stage_bh(const PValueMatrix& pvalues, double alpha) {
    require_level(alpha);
    return scaled_two_stage(pvalues, alpha, 1.0);
}

TestOutcome adaptive_bh(const PValueMatrix& pvalues, double alpha, double n0_hat) {
    require_level(alpha);
    require_estimate(n0_hat);
    const double pi0_hat = n0_hat / static_cast<double>(pvalues.layout().total());
    auto outcome = scaled_two_stage(pvalues, alpha, pi0_hat);
    outcome.n0_estimate = n0_hat;
    return outcome;
}

TestOutcome adaptive_bh(const PValueMatrix& pvalues, double alpha, const EstimatorSpec& estimator) {
    return adaptive_bh(pvalues, alpha, estimator(pvalues));
}

TestOutcome adaptive_bonferroni(const PValueMatrix& pvalues, double alpha, double n0_hat) {
    require_level(alpha);
    require_estimate(n0_hat);
    const double threshold = alpha / n0_hat;
    const auto& layout = pvalues.layout();

    TestOutcome outcome;
    outcome.n0_estimate = n0_hat;
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        const auto row = pvalues.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] <= threshold) outcome.rejected.push_back({i, j});
        }
    }
    return outcome;
}

TestOutcome adaptive_bonferroni(const PValueMatrix& pvalues, double alpha,
                                const EstimatorSpec& estimator) {
    return adaptive_bonferroni(pvalues, alpha, estimator(pvalues));
}

std::vector<std::size_t> adaptive_bh_flat(std::span<const double> pvalues, double alpha,
                                          double n0_hat) {
    require_level(alpha);
    require_estimate(n0_hat);
    const double pi0_hat = n0_hat / static_cast<double>(pvalues.size());
    std::vector<double> shrunk(pvalues.begin(), pvalues.end());
    for (double& q : shrunk) q *= pi0_hat;

    const auto cut = detail::stepup_cut(shrunk, detail::linear_constants(shrunk.size(), alpha));
    std::vector<std::size_t> rejected;
    if (cut.count == 0) return rejected;
    for (std::size_t i = 0; i < shrunk.size(); ++i) {
        if (shrunk[i] <= cut.cutoff) rejected.push_back(i);
    }
    return rejected;
}

std::vector<std::size_t> bky_adaptive_bh(std::span<const double> pvalues, double alpha) {
    require_level(alpha);
    const double stage_alpha = alpha / (1.0 + alpha);
    const auto first = bh(pvalues, stage_alpha);
    const std::size_t n = pvalues.size();
    const std::size_t r1 = first.size();
    if (r1 == 0 || r1 == n) return first;

    const auto retained = static_cast<double>(n - r1);
    std::vector<double> constants(n);
    for (std::size_t i = 0; i < n; ++i) {
        constants[i] = static_cast<double>(i + 1) * stage_alpha / retained;
    }
    const auto cut = detail::stepup_cut(pvalues, constants);
    std::vector<std::size_t> rejected;
    if (cut.count == 0) return rejected;
    for (std::size_t i = 0; i < n; ++i) {
        if (pvalues[i] <= cut.cutoff) rejected.push_back(i);
    }
    return rejected;
}

} // namespace blockmt
