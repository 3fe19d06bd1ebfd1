#include "blockmt/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace blockmt::verify {

void DUCheckInput::validate() const {
    if (!(truth.layout() == layout)) {
        throw std::invalid_argument("truth assignment does not match the layout");
    }
    require_lambda(lambda);
}

double binomial_pmf(std::size_t n, std::size_t k, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
    if (k > n) return 0.0;
    if (theta == 0.0) return k == 0 ? 1.0 : 0.0;
    if (theta == 1.0) return k == n ? 1.0 : 0.0;
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    const double log_choose = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                              std::lgamma(nd - kd + 1.0);
    return std::exp(log_choose + kd * std::log(theta) + (nd - kd) * std::log1p(-theta));
}

double binomial_inverse_moment(std::size_t n, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
    if (theta == 0.0) return 1.0;
    const auto trials = static_cast<double>(n) + 1.0;
    // 1 - (1 - theta)^(n+1) without cancellation for small theta.
    const double numerator = theta == 1.0 ? 1.0 : -std::expm1(trials * std::log1p(-theta));
    return numerator / (trials * theta);
}

double binomial_inverse_moment_by_summation(std::size_t n, double theta) {
    double total = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        total += binomial_pmf(n, k, theta) / static_cast<double>(k + 1);
    }
    return total;
}

double property1_lhs_exact(std::span<const std::size_t> nulls_per_block,
                           std::size_t max_block_size, double lambda) {
    require_lambda(lambda);
    if (max_block_size == 0) throw std::invalid_argument("max block size must be positive");
    std::size_t n0 = 0;
    for (std::size_t m : nulls_per_block) {
        if (m > max_block_size) throw std::invalid_argument("block holds more nulls than s_max");
        n0 += m;
    }
    const double above = 1.0 - lambda;
    const auto offset = static_cast<double>(max_block_size);

    double lhs = 0.0;
    for (std::size_t m : nulls_per_block) {
        if (m == 0) continue;
        const std::size_t outside = n0 - m;
        double expectation = 0.0;
        for (std::size_t w = 0; w <= outside; ++w) {
            expectation += binomial_pmf(outside, w, above) / (static_cast<double>(w) + offset);
        }
        lhs += static_cast<double>(m) * above * expectation;
    }
    return lhs;
}

double property1_lhs_exact(const DUCheckInput& input) {
    input.validate();
    return property1_lhs_exact(input.truth.true_nulls_per_block(), input.layout.max_size(),
                               input.lambda);
}

MetricEstimate property1_lhs_mc(const DUCheckInput& input, const NullCountEstimator& estimator,
                                std::size_t reps, std::uint64_t seed) {
    input.validate();
    if (reps == 0) throw std::invalid_argument("reps must be at least 1");
    const auto& layout = input.layout;
    std::vector<double> per_rep(reps, 0.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    for (std::size_t rep = 0; rep < reps; ++rep) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
        std::mt19937_64 rng(seq);
        std::vector<double> values(layout.total(), 0.0);
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (input.truth.is_true_null(k)) values[k] = uniform(rng);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < layout.blocks(); ++i) {
            const std::size_t m = input.truth.true_nulls_in_block(i);
            if (m == 0) continue;
            std::vector<double> zeroed = values;
            std::fill_n(zeroed.begin() + static_cast<std::ptrdiff_t>(layout.offset(i)),
                        layout.size(i), 0.0);
            total += static_cast<double>(m) / estimator(PValueMatrix(layout, std::move(zeroed)));
        }
        per_rep[rep] = total;
    }
    return summarize(per_rep);
}

namespace {

void visit_multisets(std::size_t length, std::size_t max_value, std::vector<std::size_t>& prefix,
                     const std::function<void(const std::vector<std::size_t>&)>& visit) {
    if (prefix.size() == length) {
        visit(prefix);
        return;
    }
    const std::size_t start = prefix.empty() ? 0 : prefix.back();
    for (std::size_t v = start; v <= max_value; ++v) {
        prefix.push_back(v);
        visit_multisets(length, max_value, prefix, visit);
        prefix.pop_back();
    }
}

std::vector<double> certification_lambdas(std::size_t blocks) {
    const double threshold = lambda_threshold(blocks);
    std::vector<double> lambdas{threshold};
    if (threshold + 0.05 < 1.0) lambdas.push_back(threshold + 0.05);
    for (int k = 1; k < 10; ++k) lambdas.push_back(threshold + (1.0 - threshold) * k / 10.0);
    return lambdas;
}

} // namespace

CertificationReport certify_block_estimator(std::size_t max_blocks, std::size_t max_block_size,
                                            double tolerance) {
    CertificationReport report;
    std::vector<std::size_t> prefix;
    for (std::size_t b = 1; b <= max_blocks; ++b) {
        const auto lambdas = certification_lambdas(b);
        for (std::size_t s = 1; s <= max_block_size; ++s) {
            visit_multisets(b, s, prefix, [&](const std::vector<std::size_t>& nulls) {
                for (double lambda : lambdas) {
                    const double lhs = property1_lhs_exact(nulls, s, lambda);
                    ++report.configurations;
                    if (lhs > report.max_lhs) {
                        report.max_lhs = lhs;
                        report.worst_blocks = b;
                        report.worst_max_size = s;
                        report.worst_lambda = lambda;
                        report.worst_nulls = nulls;
                    }
                }
            });
        }
    }
    report.passed = report.max_lhs <= 1.0 + tolerance;
    return report;
}

ZeroOneMatrix::ZeroOneMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

ZeroOneMatrix ZeroOneMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    ZeroOneMatrix out(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw std::invalid_argument("ragged 0/1 matrix");
        for (std::size_t c = 0; c < cols; ++c) out.set(r, c, rows[r][c]);
    }
    return out;
}

void ZeroOneMatrix::set(std::size_t r, std::size_t c, int v) {
    if (v != 0 && v != 1) throw std::invalid_argument("matrix entries must be 0 or 1");
    if (r >= rows_ || c >= cols_) throw std::out_of_range("matrix index out of range");
    cells_[r * cols_ + c] = v;
}

std::size_t ZeroOneMatrix::total() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

std::vector<std::size_t> ZeroOneMatrix::row_sums() const {
    std::vector<std::size_t> sums(rows_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) sums[r] += static_cast<std::size_t>((*this)(r, c));
    }
    return sums;
}

std::vector<std::size_t> ZeroOneMatrix::column_sums() const {
    std::vector<std::size_t> sums(cols_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) sums[c] += static_cast<std::size_t>((*this)(r, c));
    }
    return sums;
}

ZeroOneMatrix balanced_rearrangement(const ZeroOneMatrix& matrix) {
    ZeroOneMatrix out(matrix.rows(), matrix.cols());
    std::vector<std::size_t> filled(matrix.cols(), 0);
    std::vector<std::size_t> order(matrix.cols());
    const auto ones = matrix.row_sums();
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return filled[a] < filled[b]; });
        for (std::size_t k = 0; k < ones[r]; ++k) {
            out.set(r, order[k], 1);
            ++filled[order[k]];
        }
    }
    return out;
}

bool is_balanced_rearrangement(const ZeroOneMatrix& original, const ZeroOneMatrix& arranged) {
    if (original.rows() != arranged.rows() || original.cols() != arranged.cols()) return false;
    if (original.row_sums() != arranged.row_sums()) return false;
    if (arranged.cols() == 0) return true;
    const std::size_t floor_share = arranged.total() / arranged.cols();
    for (std::size_t sum : arranged.column_sums()) {
        if (sum != floor_share && sum != floor_share + 1) return false;
    }
    return true;
}

double lemma2_f(double x) {
    if (!(x >= 0.0)) throw std::invalid_argument("f is defined for x >= 0");
    return std::pow(2.0 * x + 3.0, -2.0 / (x + 2.0));
}

bool grid_monotonicity_check(double lo, double hi, double step) {
    if (!(lo >= 0.0) || !(hi >= lo) || !(step > 0.0)) {
        throw std::invalid_argument("grid needs 0 <= lo <= hi and step > 0");
    }
    const double at_one = lemma2_f(1.0);
    const auto points = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::optional<double> previous;
    for (std::size_t k = 0; k < points; ++k) {
        const double x = lo + static_cast<double>(k) * step;
        const double fx = lemma2_f(x);
        if (x <= 1.0 && fx > at_one) return false;
        if (x >= 1.0) {
            if (previous && fx < *previous) return false;
            previous = fx;
        }
    }
    return true;
}

// ---- brute-force oracles -------------------------------------------------

namespace {

// k-th smallest (1-based) found by counting, no sorting.
double kth_smallest(std::span<const double> values, std::size_t k) {
    for (double candidate : values) {
        std::size_t below = 0;
        std::size_t at_or_below = 0;
        for (double v : values) {
            if (v < candidate) ++below;
            if (v <= candidate) ++at_or_below;
        }
        if (below < k && k <= at_or_below) return candidate;
    }
    throw std::logic_error("order statistic not found");
}

// Largest R with the R-th smallest value <= constants[R-1]; 0 when none.
std::size_t scan_stepup(std::span<const double> values, std::span<const double> constants) {
    for (std::size_t r = values.size(); r >= 1; --r) {
        if (kth_smallest(values, r) <= constants[r - 1]) return r;
    }
    return 0;
}

double oracle_estimate(const PValueMatrix& pvalues, const EstimatorSpec& spec) {
    std::size_t n = 0;
    std::size_t at_most_lambda = 0;
    std::size_t widest = 0;
    const auto& layout = pvalues.layout();
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        widest = std::max(widest, layout.size(i));
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            ++n;
            if (pvalues.at(i, j) <= spec.lambda()) ++at_most_lambda;
        }
    }
    const std::size_t offset = spec.kind() == EstimatorKind::block ? widest : 1;
    return (static_cast<double>(n) - static_cast<double>(at_most_lambda) +
            static_cast<double>(offset)) /
           (1.0 - spec.lambda());
}

std::vector<HypothesisIndex> oracle_two_stage(const PValueMatrix& pvalues, double alpha,
                                              double shrink) {
    const auto& layout = pvalues.layout();
    const std::size_t b = layout.blocks();
    const std::size_t n = layout.total();
    const double average = static_cast<double>(n) / static_cast<double>(b);

    std::vector<double> block(b);
    std::vector<double> constants(b);
    for (std::size_t i = 0; i < b; ++i) {
        double smallest = 1.0;
        for (std::size_t j = 0; j < layout.size(i); ++j) smallest = std::min(smallest, pvalues.at(i, j));
        block[i] = shrink * (average * smallest);
        constants[i] = static_cast<double>(i + 1) * alpha / static_cast<double>(b);
    }
    const std::size_t significant = scan_stepup(block, constants);
    std::vector<HypothesisIndex> rejected;
    if (significant == 0) return rejected;

    const double block_cut = kth_smallest(block, significant);
    const double item_cut = static_cast<double>(significant) * alpha / static_cast<double>(n);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            if (block[i] <= block_cut && shrink * pvalues.at(i, j) <= item_cut) {
                rejected.push_back({i, j});
            }
        }
    }
    return rejected;
}

} // namespace

std::vector<std::size_t> brute_force_stepup(std::span<const double> values,
                                            std::span<const double> constants) {
    if (values.size() != constants.size()) throw std::invalid_argument("length mismatch");
    const std::size_t r = scan_stepup(values, constants);
    std::vector<std::size_t> rejected;
    if (r == 0) return rejected;
    const double cut = kth_smallest(values, r);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] <= cut) rejected.push_back(i);
    }
    return rejected;
}

std::vector<HypothesisIndex> brute_force_procedure(const PValueMatrix& pvalues, double alpha,
                                                   OracleMethod method,
                                                   std::optional<EstimatorSpec> estimator) {
    const auto& layout = pvalues.layout();
    if (layout.total() > oracle_max_hypotheses) {
        throw std::invalid_argument("oracle is limited to " +
                                    std::to_string(oracle_max_hypotheses) + " hypotheses");
    }
    if (method == OracleMethod::two_stage_bh) return oracle_two_stage(pvalues, alpha, 1.0);
    if (!estimator) throw std::invalid_argument("adaptive oracle needs an estimator");

    const double n0_hat = oracle_estimate(pvalues, *estimator);
    if (method == OracleMethod::adaptive_bh) {
        return oracle_two_stage(pvalues, alpha, n0_hat / static_cast<double>(layout.total()));
    }
    std::vector<HypothesisIndex> rejected;
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            if (pvalues.at(i, j) <= alpha / n0_hat) rejected.push_back({i, j});
        }
    }
    return rejected;
}

PValueMatrix random_pvalue_matrix(std::mt19937_64& rng, std::size_t max_blocks,
                                  std::size_t max_size) {
    std::uniform_int_distribution<std::size_t> blocks_dist(1, max_blocks);
    std::uniform_int_distribution<std::size_t> size_dist(1, max_size);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<int> grid_dist(0, 20);
    std::bernoulli_distribution coarse(1.0 / 3.0);

    const bool use_grid = coarse(rng);
    std::vector<std::vector<double>> rows(blocks_dist(rng));
    for (auto& row : rows) {
        row.resize(size_dist(rng));
        for (double& p : row) {
            // Small values dominate so rejections actually happen.
            p = use_grid ? grid_dist(rng) / 20.0 * (grid_dist(rng) < 10 ? 0.02 : 1.0)
                         : std::pow(uniform(rng), 3.0);
        }
    }
    return PValueMatrix::from_rows(rows);
}

ZeroOneMatrix random_zero_one_matrix(std::mt19937_64& rng, std::size_t max_dim) {
    std::uniform_int_distribution<std::size_t> dim(1, max_dim);
    std::uniform_real_distribution<double> rate(0.0, 1.0);
    ZeroOneMatrix out(dim(rng), dim(rng));
    std::bernoulli_distribution one(rate(rng));
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) out.set(r, c, one(rng) ? 1 : 0);
    }
    return out;
}

} // namespace blockmt::verify
