#include "blockmt/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "blockmt/format.hpp"
#include "blockmt/io.hpp"
#include "blockmt/procedures.hpp"
#include "blockmt/verification.hpp"

namespace blockmt::cli {

namespace {

TestOutcome run_method(const AnalysisRequest& request, const PValueMatrix& pvalues) {
    const auto& layout = pvalues.layout();
    const auto flat = pvalues.flat();
    const auto& m = request.method;
    if (m == "bh") return {to_hypothesis_indices(layout, bh(flat, request.alpha)), 0, {}};
    if (m == "bonferroni") {
        return {to_hypothesis_indices(layout, bonferroni(flat, request.alpha)), 0, {}};
    }
    if (m == "bky") return {to_hypothesis_indices(layout, bky_adaptive_bh(flat, request.alpha)), 0, {}};
    if (m == "two-stage-bh") return two_stage_bh(pvalues, request.alpha);

    const EstimatorSpec estimator(request.estimator, *request.lambda);
    if (m == "adaptive-bh") return adaptive_bh(pvalues, request.alpha, estimator);
    if (m == "adaptive-bonferroni") return adaptive_bonferroni(pvalues, request.alpha, estimator);
    throw std::invalid_argument("unknown method '" + m + "'");
}

bool known_method(std::string_view m) {
    return m == "bh" || m == "bonferroni" || m == "bky" || m == "two-stage-bh" ||
           is_adaptive_method(m);
}

void report_line(std::ostream& out, bool ok, std::string_view name, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
}

bool verify_property1(const VerifyScope& scope, std::ostream& out) {
    const auto report = verify::certify_block_estimator(scope.max_blocks, scope.max_block_size);
    report_line(out, report.passed, "property1",
                fmt::format("{} configurations, b <= {}, s_max <= {}, max lhs {} (b={}, s_max={}, "
                            "lambda={})",
                            report.configurations, scope.max_blocks, scope.max_block_size,
                            format_exact(report.max_lhs), report.worst_blocks,
                            report.worst_max_size, format_short(report.worst_lambda)));

    // Below-threshold values are informational only.
    for (double lambda : {0.2, 0.5, 0.8}) {
        std::optional<double> worst;
        for (std::size_t b = 1; b <= scope.max_blocks; ++b) {
            if (lambda >= lambda_threshold(b)) continue;
            for (std::size_t s = 1; s <= scope.max_block_size; ++s) {
                const std::vector<std::size_t> all_null(b, s);
                worst = std::max(worst.value_or(0.0),
                                 verify::property1_lhs_exact(all_null, s, lambda));
            }
        }
        out << "INFO property1 lambda=" << format_short(lambda);
        if (worst) {
            out << " below-threshold all-null max lhs " << format_exact(*worst) << '\n';
        } else {
            out << ": no b <= " << scope.max_blocks << " below threshold\n";
        }
    }
    return report.passed;
}

bool verify_lemma1(const VerifyScope& scope, std::ostream& out) {
    std::mt19937_64 rng(scope.seed);
    std::size_t failures = 0;
    for (std::size_t k = 0; k < scope.instances; ++k) {
        const auto a = verify::random_zero_one_matrix(rng, 8);
        if (!verify::is_balanced_rearrangement(a, verify::balanced_rearrangement(a))) ++failures;
    }
    report_line(out, failures == 0, "lemma1",
                fmt::format("{} random matrices, {} outside the column-sum window", scope.instances,
                            failures));
    return failures == 0;
}

bool verify_lemma2(std::ostream& out) {
    const bool grid = verify::grid_monotonicity_check(0.0, 200.0, 0.01);
    bool matches = true;
    for (std::size_t b = 1; b <= 200; ++b) {
        if (lambda_threshold(b) != verify::lemma2_f(static_cast<double>(b))) matches = false;
    }
    report_line(out, grid && matches, "lemma2",
                fmt::format("f monotone on [1, 200] step 0.01 and f <= f(1) on [0, 1]: {}; "
                            "threshold(b) == f(b) for b <= 200: {}",
                            grid, matches));
    return grid && matches;
}

bool verify_identity(std::ostream& out) {
    double worst = 0.0;
    for (std::size_t n = 0; n <= 60; ++n) {
        for (int t = 1; t <= 9; ++t) {
            const double theta = t / 10.0;
            worst = std::max(worst, std::abs(verify::binomial_inverse_moment(n, theta) -
                                             verify::binomial_inverse_moment_by_summation(n, theta)));
        }
    }
    const bool ok = worst <= 1e-12;
    report_line(out, ok, "identity",
                fmt::format("E(1/(1+X)) closed form vs pmf sum, n <= 60: max abs diff {}",
                            format_exact(worst)));
    return ok;
}

bool verify_oracles(const VerifyScope& scope, std::ostream& out) {
    std::mt19937_64 rng(scope.seed + 1);
    std::uniform_real_distribution<double> alpha_dist(0.01, 0.3);
    std::uniform_real_distribution<double> lambda_dist(0.05, 0.95);
    std::bernoulli_distribution use_block(0.5);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < scope.instances; ++k) {
        const auto p = verify::random_pvalue_matrix(rng, 4, 3);
        const double alpha = alpha_dist(rng);
        const EstimatorSpec est(use_block(rng) ? EstimatorKind::block : EstimatorKind::storey,
                                lambda_dist(rng));
        using verify::OracleMethod;
        if (two_stage_bh(p, alpha).rejected !=
            verify::brute_force_procedure(p, alpha, OracleMethod::two_stage_bh)) {
            ++mismatches;
        }
        if (adaptive_bh(p, alpha, est).rejected !=
            verify::brute_force_procedure(p, alpha, OracleMethod::adaptive_bh, est)) {
            ++mismatches;
        }
        if (adaptive_bonferroni(p, alpha, est).rejected !=
            verify::brute_force_procedure(p, alpha, OracleMethod::adaptive_bonferroni, est)) {
            ++mismatches;
        }
    }
    report_line(out, mismatches == 0, "oracles",
                fmt::format("{} instances x 3 procedures, {} mismatches", scope.instances,
                            mismatches));
    return mismatches == 0;
}

} // namespace

bool is_adaptive_method(std::string_view method) {
    return method == "adaptive-bh" || method == "adaptive-bonferroni";
}

std::uint64_t default_seed() {
    const char* raw = std::getenv(seed_env_var);
    if (raw == nullptr || *raw == '\0') return 0;
    std::uint64_t seed = 0;
    const std::string_view text(raw);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument(std::string(seed_env_var) + " is not an unsigned integer");
    }
    return seed;
}

int cmd_test(const AnalysisRequest& request, std::ostream& out, std::ostream& err) {
    if (!(request.alpha > 0.0 && request.alpha < 1.0)) {
        err << "error: alpha must lie in (0, 1)\n";
        return exit_parameter_error;
    }
    if (!known_method(request.method)) {
        err << "error: unknown method '" << request.method << "'\n";
        return exit_parameter_error;
    }
    const bool adaptive = is_adaptive_method(request.method);
    if (adaptive && !request.lambda) {
        err << "error: --lambda is required for " << request.method << '\n';
        return exit_parameter_error;
    }
    if (request.lambda && !(*request.lambda > 0.0 && *request.lambda < 1.0)) {
        err << "error: lambda must lie in (0, 1)\n";
        return exit_parameter_error;
    }

    std::optional<LabeledPValues> data;
    try {
        data = read_pvalue_file(request.input_path);
    } catch (const InputError& e) {
        err << "error: " << request.input_path << ": " << e.what() << '\n';
        return exit_input_error;
    }

    const std::size_t blocks = data->matrix.layout().blocks();
    AnalysisReport report;
    report.method = request.method;
    report.alpha = request.alpha;
    report.lambda_threshold = lambda_threshold(blocks);
    if (adaptive) {
        report.lambda = request.lambda;
        report.estimator = std::string(to_string(request.estimator));
        if (*request.lambda < report.lambda_threshold) {
            err << "warning: lambda " << format_short(*request.lambda)
                << " is below the certified threshold " << format_short(report.lambda_threshold)
                << " for b = " << blocks << " blocks\n";
        }
    }
    report.outcome = run_method(request, data->matrix);

    switch (request.format) {
    case OutputFormat::json: out << to_json(report, *data).dump(2) << '\n'; break;
    case OutputFormat::csv: out << to_delimited(report, *data, ','); break;
    case OutputFormat::tsv: out << to_delimited(report, *data, '\t'); break;
    }
    return exit_ok;
}

int cmd_simulate(const SimGrid& grid, unsigned threads, std::ostream& out, std::ostream& err) {
    try {
        for (std::size_t s : grid.block_sizes) {
            for (double rho : grid.rhos) {
                for (double lambda : grid.lambdas) {
                    SimConfig config = grid.base;
                    config.block_size = s;
                    config.rho = rho;
                    config.lambda = lambda;
                    config.validate();
                }
            }
        }
        if (grid.block_sizes.empty() || grid.lambdas.empty() || grid.rhos.empty()) {
            throw std::invalid_argument("simulation grid has an empty axis");
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_parameter_error;
    }
    out << to_csv(run_grid(grid, threads));
    return exit_ok;
}

int cmd_verify(const VerifyScope& scope, std::ostream& out, std::ostream& err) {
    if (scope.max_blocks < 1 || scope.max_block_size < 1 || scope.instances < 1) {
        err << "error: --max-b, --max-s and --instances must be positive\n";
        return exit_parameter_error;
    }
    const bool all = !scope.any();
    bool ok = true;
    if (all || scope.property1) ok = verify_property1(scope, out) && ok;
    if (all || scope.lemma1) ok = verify_lemma1(scope, out) && ok;
    if (all || scope.lemma2) ok = verify_lemma2(out) && ok;
    if (all || scope.identity) ok = verify_identity(out) && ok;
    if (all || scope.oracles) ok = verify_oracles(scope, out) && ok;
    return ok ? exit_ok : exit_verification_failed;
}

int cmd_threshold(long long blocks, std::ostream& out, std::ostream& err) {
    if (blocks < 1) {
        err << "error: block count must be at least 1\n";
        return exit_parameter_error;
    }
    out << format_exact(lambda_threshold(static_cast<std::size_t>(blocks))) << '\n';
    return exit_ok;
}

} // namespace blockmt::cli
