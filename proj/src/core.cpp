#include "blockmt/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace blockmt {

namespace {

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

void validate_probabilities(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!is_probability(values[i])) {
            throw std::invalid_argument(std::string(what) + " at index " + std::to_string(i) +
                                        " is outside [0, 1]");
        }
    }
}

} // namespace

BlockLayout::BlockLayout(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("block layout needs at least one block");
    offsets_.reserve(sizes_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t s : sizes_) {
        if (s == 0) throw std::invalid_argument("block sizes must be positive");
        offsets_.push_back(offsets_.back() + s);
        max_size_ = std::max(max_size_, s);
    }
}

BlockLayout BlockLayout::uniform(std::size_t blocks, std::size_t size) {
    return BlockLayout(std::vector<std::size_t>(blocks, size));
}

PValueMatrix::PValueMatrix(BlockLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_.total()) {
        throw std::invalid_argument("p-value count " + std::to_string(values_.size()) +
                                    " does not match layout total " +
                                    std::to_string(layout_.total()));
    }
    validate_probabilities(values_, "p-value");
}

PValueMatrix PValueMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<std::size_t> sizes;
    std::vector<double> flat;
    for (const auto& row : rows) {
        sizes.push_back(row.size());
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return PValueMatrix(BlockLayout(std::move(sizes)), std::move(flat));
}

TruthAssignment::TruthAssignment(BlockLayout layout, std::vector<bool> false_null)
    : layout_(std::move(layout)), false_null_(std::move(false_null)) {
    if (false_null_.size() != layout_.total()) {
        throw std::invalid_argument("truth labels do not match layout");
    }
    per_block_.resize(layout_.blocks(), 0);
    for (std::size_t i = 0; i < layout_.blocks(); ++i) {
        for (std::size_t j = 0; j < layout_.size(i); ++j) {
            if (!false_null_[layout_.offset(i) + j]) ++per_block_[i];
        }
        true_nulls_ += per_block_[i];
    }
}

TruthAssignment TruthAssignment::from_rows(const std::vector<std::vector<int>>& labels) {
    std::vector<std::size_t> sizes;
    std::vector<bool> flat;
    for (const auto& row : labels) {
        sizes.push_back(row.size());
        for (int h : row) {
            if (h != 0 && h != 1) throw std::invalid_argument("truth labels must be 0 or 1");
            flat.push_back(h == 1);
        }
    }
    return TruthAssignment(BlockLayout(std::move(sizes)), std::move(flat));
}

bool TruthAssignment::is_true_null(std::size_t block, std::size_t item) const {
    if (item >= layout_.size(block)) throw std::out_of_range("hypothesis index out of range");
    return !false_null_[layout_.offset(block) + item];
}

void require_level(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

namespace detail {

StepUpCut stepup_cut(std::span<const double> values, std::span<const double> constants) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t r = sorted.size(); r > 0; --r) {
        if (sorted[r - 1] <= constants[r - 1]) return {r, sorted[r - 1]};
    }
    return {};
}

std::vector<double> linear_constants(std::size_t m, double alpha) {
    std::vector<double> c(m);
    for (std::size_t i = 0; i < m; ++i) {
        c[i] = static_cast<double>(i + 1) * alpha / static_cast<double>(m);
    }
    return c;
}

} // namespace detail

std::vector<std::size_t> stepup(std::span<const double> pvalues,
                                std::span<const double> critical_constants) {
    if (pvalues.size() != critical_constants.size()) {
        throw std::invalid_argument("p-values and critical constants differ in length");
    }
    if (pvalues.empty()) throw std::invalid_argument("step-up needs at least one p-value");
    validate_probabilities(pvalues, "p-value");
    validate_probabilities(critical_constants, "critical constant");
    if (!std::is_sorted(critical_constants.begin(), critical_constants.end())) {
        throw std::invalid_argument("critical constants must be nondecreasing");
    }

    const auto cut = detail::stepup_cut(pvalues, critical_constants);
    std::vector<std::size_t> rejected;
    if (cut.count == 0) return rejected;
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
        if (pvalues[i] <= cut.cutoff) rejected.push_back(i);
    }
    return rejected;
}

std::vector<std::size_t> bh(std::span<const double> pvalues, double alpha) {
    require_level(alpha);
    const auto constants = detail::linear_constants(pvalues.size(), alpha);
    return stepup(pvalues, constants);
}

std::vector<std::size_t> bonferroni(std::span<const double> pvalues, double alpha) {
    require_level(alpha);
    if (pvalues.empty()) throw std::invalid_argument("bonferroni needs at least one p-value");
    validate_probabilities(pvalues, "p-value");
    const double threshold = alpha / static_cast<double>(pvalues.size());
    std::vector<std::size_t> rejected;
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
        if (pvalues[i] <= threshold) rejected.push_back(i);
    }
    return rejected;
}

std::size_t false_rejections(const TestOutcome& outcome, const TruthAssignment& truth) {
    const auto& layout = truth.layout();
    if (outcome.significant_blocks > layout.blocks()) {
        throw std::invalid_argument("outcome has more significant blocks than the layout");
    }
    std::size_t v = 0;
    for (const auto& idx : outcome.rejected) {
        if (idx.block >= layout.blocks() || idx.item >= layout.size(idx.block)) {
            throw std::invalid_argument("rejected index does not fit the truth layout");
        }
        if (truth.is_true_null(idx.block, idx.item)) ++v;
    }
    return v;
}

std::vector<HypothesisIndex> to_hypothesis_indices(const BlockLayout& layout,
                                                   std::span<const std::size_t> flat_indices) {
    std::vector<HypothesisIndex> out;
    out.reserve(flat_indices.size());
    std::size_t block = 0;
    for (std::size_t k : flat_indices) {
        if (k >= layout.total()) throw std::out_of_range("flat index beyond layout");
        while (k >= layout.offset(block) + layout.size(block)) ++block;
        out.push_back({block, k - layout.offset(block)});
    }
    return out;
}

} // namespace blockmt
