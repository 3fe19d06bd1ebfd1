#include "blockmt/simulation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "blockmt/estimators.hpp"
#include "blockmt/format.hpp"
#include "blockmt/procedures.hpp"

namespace blockmt {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> method_names{{
    {Method::BH, "BH"},
    {Method::tsBH, "tsBH"},
    {Method::adBH1, "adBH1"},
    {Method::adBH2, "adBH2"},
    {Method::adBH3, "adBH3"},
    {Method::Bonf, "Bonf"},
    {Method::adBon1, "adBon1"},
    {Method::adBon2, "adBon2"},
}};

// Rejection decisions of one method as (flat index) list, block-major.
std::vector<std::size_t> flat_rejections(const TestOutcome& outcome, const BlockLayout& layout) {
    std::vector<std::size_t> flat;
    flat.reserve(outcome.rejected.size());
    for (const auto& idx : outcome.rejected) flat.push_back(layout.offset(idx.block) + idx.item);
    return flat;
}

std::vector<std::size_t> apply_method(Method method, const PValueMatrix& pvalues, double alpha,
                                      double lambda) {
    const auto flat = pvalues.flat();
    const auto& layout = pvalues.layout();
    switch (method) {
    case Method::BH: return bh(flat, alpha);
    case Method::tsBH: return flat_rejections(two_stage_bh(pvalues, alpha), layout);
    case Method::adBH1: return adaptive_bh_flat(flat, alpha, n0_storey(pvalues, lambda));
    case Method::adBH2:
        return flat_rejections(adaptive_bh(pvalues, alpha, n0_block(pvalues, lambda)), layout);
    case Method::adBH3: return bky_adaptive_bh(flat, alpha);
    case Method::Bonf: return bonferroni(flat, alpha);
    case Method::adBon1:
        return flat_rejections(adaptive_bonferroni(pvalues, alpha, n0_storey(pvalues, lambda)),
                               layout);
    case Method::adBon2:
        return flat_rejections(adaptive_bonferroni(pvalues, alpha, n0_block(pvalues, lambda)),
                               layout);
    }
    throw std::logic_error("unhandled method");
}

ReplicationStats score(std::span<const std::size_t> rejected, const TruthAssignment& truth) {
    std::size_t false_rejections = 0;
    for (std::size_t k : rejected) {
        if (truth.is_true_null(k)) ++false_rejections;
    }
    const std::size_t r = rejected.size();
    const std::size_t alternatives = truth.layout().total() - truth.true_nulls();
    ReplicationStats stats;
    stats.false_discovery_proportion =
        static_cast<double>(false_rejections) / static_cast<double>(std::max<std::size_t>(r, 1));
    stats.any_false_rejection = false_rejections > 0 ? 1.0 : 0.0;
    stats.power = alternatives == 0 ? 0.0
                                    : static_cast<double>(r - false_rejections) /
                                          static_cast<double>(alternatives);
    return stats;
}

unsigned worker_count(unsigned requested, std::size_t reps) {
    unsigned workers = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(workers, reps));
}

// One (n, n0, s, rho) cell evaluated for several lambdas on shared data.
std::vector<SimRow> run_cell(const SimConfig& config, std::span<const double> lambdas,
                             unsigned threads) {
    config.validate();
    for (double lambda : lambdas) require_lambda(lambda);

    const auto truth = truth_layout(config.n, config.n0, config.block_size);
    const std::size_t methods = config.methods.size();
    const std::size_t slots = lambdas.size() * methods;
    const std::size_t reps = config.reps;

    // stats[slot][rep], three metrics.
    std::vector<std::vector<double>> fdp(slots, std::vector<double>(reps));
    std::vector<std::vector<double>> fwe(slots, std::vector<double>(reps));
    std::vector<std::vector<double>> pow(slots, std::vector<double>(reps));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t rep = begin; rep < end; ++rep) {
            const auto per = evaluate_replication(config, truth, lambdas, rep);
            for (std::size_t l = 0; l < lambdas.size(); ++l) {
                for (std::size_t m = 0; m < methods; ++m) {
                    const std::size_t slot = l * methods + m;
                    fdp[slot][rep] = per[l][m].false_discovery_proportion;
                    fwe[slot][rep] = per[l][m].any_false_rejection;
                    pow[slot][rep] = per[l][m].power;
                }
            }
        }
    };

    const unsigned workers = worker_count(threads, reps);
    if (workers <= 1) {
        work(0, reps);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (reps + workers - 1) / workers;
        for (std::size_t begin = 0; begin < reps; begin += chunk) {
            pool.emplace_back(work, begin, std::min(reps, begin + chunk));
        }
    }

    std::vector<SimRow> rows;
    rows.reserve(slots);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        for (std::size_t m = 0; m < methods; ++m) {
            const std::size_t slot = l * methods + m;
            SimRow row;
            row.method = config.methods[m];
            row.n = config.n;
            row.n0 = config.n0;
            row.block_size = config.block_size;
            row.lambda = lambdas[l];
            row.rho = config.rho;
            row.alpha = config.alpha;
            row.reps = reps;
            row.seed = config.seed;
            row.fdr = summarize(fdp[slot]);
            row.fwer = summarize(fwe[slot]);
            row.power = summarize(pow[slot]);
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace

std::string_view method_name(Method method) {
    for (const auto& [m, name] : method_names) {
        if (m == method) return name;
    }
    return "unknown";
}

Method method_from_name(std::string_view name) {
    for (const auto& [m, known] : method_names) {
        if (known == name) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool uses_lambda(Method method) {
    return method == Method::adBH1 || method == Method::adBH2 || method == Method::adBon1 ||
           method == Method::adBon2;
}

void SimConfig::validate() const {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (block_size == 0 || n % block_size != 0) {
        throw std::invalid_argument("block size must divide n");
    }
    if (n0 > n) throw std::invalid_argument("n0 must not exceed n");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
    if (!std::isfinite(signal)) throw std::invalid_argument("signal must be finite");
    require_level(alpha);
    require_lambda(lambda);
    if (reps == 0) throw std::invalid_argument("reps must be at least 1");
    if (methods.empty()) throw std::invalid_argument("at least one method is required");
}

TruthAssignment truth_layout(std::size_t n, std::size_t n0, std::size_t block_size) {
    if (n == 0 || block_size == 0 || n % block_size != 0) {
        throw std::invalid_argument("block size must divide n");
    }
    if (n0 > n) throw std::invalid_argument("n0 must not exceed n");
    const std::size_t blocks = n / block_size;
    const std::size_t base = n0 / blocks;
    const std::size_t extra = n0 % blocks;

    std::vector<bool> false_null(n, true);
    for (std::size_t i = 0; i < blocks; ++i) {
        const std::size_t nulls = base + (i >= blocks - extra ? 1 : 0);
        for (std::size_t j = 0; j < nulls; ++j) false_null[i * block_size + j] = false;
    }
    return TruthAssignment(BlockLayout::uniform(blocks, block_size), std::move(false_null));
}

double normal_cdf(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("normal_cdf needs a finite argument");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double two_sided_pvalue(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

PValueMatrix generate(const SimConfig& config, const TruthAssignment& truth, std::mt19937_64& rng) {
    if (!(config.rho >= 0.0 && config.rho < 1.0)) {
        throw std::invalid_argument("rho must lie in [0, 1)");
    }
    const auto& layout = truth.layout();
    const double shared = std::sqrt(config.rho);
    const double own = std::sqrt(1.0 - config.rho);
    std::normal_distribution<double> normal;

    std::vector<double> pvalues(layout.total());
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        const double common = normal(rng);
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            const std::size_t k = layout.offset(i) + j;
            const double mean = truth.is_true_null(k) ? 0.0 : config.signal;
            pvalues[k] = two_sided_pvalue(mean + shared * common + own * normal(rng));
        }
    }
    return PValueMatrix(layout, std::move(pvalues));
}

std::mt19937_64 replication_stream(const SimConfig& config, std::uint64_t replication) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    const auto rho_bits = std::bit_cast<std::uint64_t>(config.rho);
    const auto signal_bits = std::bit_cast<std::uint64_t>(config.signal);
    std::seed_seq seq{lo(config.seed),        hi(config.seed),      lo(config.n),
                      lo(config.n0),          lo(config.block_size), lo(rho_bits),
                      hi(rho_bits),           lo(signal_bits),      hi(signal_bits),
                      lo(replication),        hi(replication)};
    return std::mt19937_64(seq);
}

std::vector<std::vector<ReplicationStats>> evaluate_replication(
    const SimConfig& config, const TruthAssignment& truth, std::span<const double> lambdas,
    std::uint64_t replication) {
    auto rng = replication_stream(config, replication);
    const auto pvalues = generate(config, truth, rng);

    const std::size_t methods = config.methods.size();
    std::vector<std::vector<ReplicationStats>> out(lambdas.size(),
                                                   std::vector<ReplicationStats>(methods));
    for (std::size_t m = 0; m < methods; ++m) {
        const Method method = config.methods[m];
        if (!uses_lambda(method)) {
            const auto stats = score(apply_method(method, pvalues, config.alpha, 0.5), truth);
            for (auto& per_lambda : out) per_lambda[m] = stats;
            continue;
        }
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            out[l][m] = score(apply_method(method, pvalues, config.alpha, lambdas[l]), truth);
        }
    }
    return out;
}

SimReport run_mc(const SimConfig& config, unsigned threads) {
    const std::array<double, 1> lambdas{config.lambda};
    return SimReport{run_cell(config, lambdas, threads)};
}

std::vector<double> default_rho_grid() {
    std::vector<double> rhos;
    for (int k = 0; k < 10; ++k) rhos.push_back(k / 10.0);
    return rhos;
}

SimGrid preset_grid(std::string_view name) {
    SimGrid grid;
    grid.lambdas = {0.2, 0.5, 0.8};
    grid.rhos = default_rho_grid();
    if (name == "fdr-figures") {
        grid.base.n = 240;
        grid.base.n0 = 120;
        grid.base.methods = {Method::BH, Method::adBH1, Method::adBH2, Method::adBH3};
        grid.block_sizes = {2, 3, 4, 6};
    } else if (name == "fwer-figures") {
        grid.base.n = 100;
        grid.base.n0 = 50;
        grid.base.methods = {Method::Bonf, Method::adBon1, Method::adBon2};
        grid.block_sizes = {2, 4, 10, 20};
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    }
    return grid;
}

SimReport run_grid(const SimGrid& grid, unsigned threads) {
    if (grid.block_sizes.empty() || grid.lambdas.empty() || grid.rhos.empty()) {
        throw std::invalid_argument("simulation grid has an empty axis");
    }
    // Rows come out of run_cell as [lambda][method] per (s, rho); reorder so
    // rho varies faster than lambda.
    SimReport report;
    for (std::size_t s : grid.block_sizes) {
        std::vector<std::vector<SimRow>> by_rho;
        for (double rho : grid.rhos) {
            SimConfig config = grid.base;
            config.block_size = s;
            config.rho = rho;
            config.lambda = grid.lambdas.front();
            by_rho.push_back(run_cell(config, grid.lambdas, threads));
        }
        const std::size_t methods = grid.base.methods.size();
        for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
            for (const auto& cell : by_rho) {
                for (std::size_t m = 0; m < methods; ++m) {
                    report.rows.push_back(cell[l * methods + m]);
                }
            }
        }
    }
    return report;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double total = 0.0;
        for (double v : values) total += v;
        return total;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MetricEstimate summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("cannot summarize an empty sample");
    const auto count = static_cast<double>(values.size());
    MetricEstimate est;
    est.mean = pairwise_sum(values) / count;
    if (values.size() > 1) {
        std::vector<double> squares(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double dev = values[k] - est.mean;
            squares[k] = dev * dev;
        }
        const double variance = pairwise_sum(squares) / (count - 1.0);
        est.se = std::sqrt(variance / count);
    }
    return est;
}

std::string to_csv(const SimReport& report) {
    const auto se = [](const MetricEstimate& m) {
        return m.se ? format_exact(*m.se) : std::string();
    };
    std::string out(sim_csv_header);
    out += '\n';
    for (const auto& row : report.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", method_name(row.method),
                           row.n, row.n0, row.block_size, format_exact(row.lambda),
                           format_exact(row.rho), format_exact(row.alpha), row.reps, row.seed,
                           format_exact(row.fdr.mean), se(row.fdr), format_exact(row.fwer.mean),
                           se(row.fwer), format_exact(row.power.mean), se(row.power));
    }
    return out;
}

} // namespace blockmt
