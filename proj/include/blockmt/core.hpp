#ifndef BLOCKMT_CORE_HPP
#define BLOCKMT_CORE_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace blockmt {

/// Sizes of the b blocks the n hypotheses are grouped into.
class BlockLayout {
public:
    /// Throws std::invalid_argument on an empty list or a zero-sized block.
    explicit BlockLayout(std::vector<std::size_t> sizes);

    static BlockLayout uniform(std::size_t blocks, std::size_t size);
    static BlockLayout singletons(std::size_t n) { return uniform(n, 1); }

    std::size_t total() const noexcept { return offsets_.back(); }
    std::size_t blocks() const noexcept { return sizes_.size(); }
    std::size_t max_size() const noexcept { return max_size_; }
    /// n / b.
    double mean_size() const noexcept {
        return static_cast<double>(total()) / static_cast<double>(blocks());
    }

    std::size_t size(std::size_t block) const { return sizes_.at(block); }
    /// Flat (block-major) index of the first entry of `block`.
    std::size_t offset(std::size_t block) const { return offsets_.at(block); }
    std::span<const std::size_t> sizes() const noexcept { return sizes_; }

    bool operator==(const BlockLayout& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t max_size_ = 0;
};

/// Ragged matrix of p-values, stored flat in block-major order.
class PValueMatrix {
public:
    /// Throws std::invalid_argument when the value count does not match the
    /// layout or any entry lies outside [0, 1].
    PValueMatrix(BlockLayout layout, std::vector<double> values);

    static PValueMatrix from_rows(const std::vector<std::vector<double>>& rows);

    const BlockLayout& layout() const noexcept { return layout_; }
    std::span<const double> flat() const noexcept { return values_; }
    std::span<const double> row(std::size_t block) const {
        return std::span<const double>(values_).subspan(layout_.offset(block), layout_.size(block));
    }
    double at(std::size_t block, std::size_t item) const { return row(block)[item]; }

private:
    BlockLayout layout_;
    std::vector<double> values_;
};

/// Ground truth: which hypotheses are true nulls.
class TruthAssignment {
public:
    /// `false_null[k]` is true when flat hypothesis k is a false null (H = 1).
    TruthAssignment(BlockLayout layout, std::vector<bool> false_null);

    static TruthAssignment from_rows(const std::vector<std::vector<int>>& labels);

    const BlockLayout& layout() const noexcept { return layout_; }
    bool is_true_null(std::size_t block, std::size_t item) const;
    bool is_true_null(std::size_t flat_index) const { return !false_null_.at(flat_index); }

    std::size_t true_nulls() const noexcept { return true_nulls_; }
    double null_proportion() const noexcept {
        return static_cast<double>(true_nulls_) / static_cast<double>(layout_.total());
    }
    std::size_t true_nulls_in_block(std::size_t block) const { return per_block_.at(block); }
    std::span<const std::size_t> true_nulls_per_block() const noexcept { return per_block_; }

private:
    BlockLayout layout_;
    std::vector<bool> false_null_;
    std::vector<std::size_t> per_block_;
    std::size_t true_nulls_ = 0;
};

struct HypothesisIndex {
    std::size_t block = 0;
    std::size_t item = 0;

    auto operator<=>(const HypothesisIndex&) const = default;
};

struct TestOutcome {
    /// Sorted block-major.
    std::vector<HypothesisIndex> rejected;
    /// Number of significant blocks; 0 for procedures without a block stage.
    std::size_t significant_blocks = 0;
    std::optional<double> n0_estimate;

    std::size_t rejections() const noexcept { return rejected.size(); }

    bool operator==(const TestOutcome&) const = default;
};

/// Generic step-up test. Returns the sorted indices i with p_i <= p_(R), where
/// R = max{i : p_(i) <= c_i}; empty when no such i exists. Throws
/// std::invalid_argument on a length mismatch, a p-value or constant outside
/// [0, 1], or decreasing constants.
std::vector<std::size_t> stepup(std::span<const double> pvalues,
                                std::span<const double> critical_constants);

/// Benjamini-Hochberg: step-up with constants i * alpha / n.
std::vector<std::size_t> bh(std::span<const double> pvalues, double alpha);

/// Single-step Bonferroni: rejects {i : p_i <= alpha / n}.
std::vector<std::size_t> bonferroni(std::span<const double> pvalues, double alpha);

/// Number of rejected true nulls. Throws when the outcome does not fit the truth layout.
std::size_t false_rejections(const TestOutcome& outcome, const TruthAssignment& truth);

/// Converts a flat block-major index list (sorted) to (block, item) pairs.
std::vector<HypothesisIndex> to_hypothesis_indices(const BlockLayout& layout,
                                                   std::span<const std::size_t> flat_indices);

void require_level(double alpha);

namespace detail {

struct StepUpCut {
    /// R; 0 when no order statistic passes its constant.
    std::size_t count = 0;
    /// The R-th smallest value; meaningless when count == 0.
    double cutoff = 0.0;
};

/// Step-up on arbitrary nonnegative values (block p-values and adaptive
/// p-values may exceed 1). No validation.
StepUpCut stepup_cut(std::span<const double> values, std::span<const double> constants);

/// Constants i * alpha / m for i = 1..m.
std::vector<double> linear_constants(std::size_t m, double alpha);

} // namespace detail

} // namespace blockmt

#endif // BLOCKMT_CORE_HPP
