#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blockmt/simulation.hpp"

using namespace blockmt;

namespace {

// Kolmogorov-Smirnov distance of a sample from U(0, 1).
double ks_uniform(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        d = std::max({d, (static_cast<double>(k) + 1.0) / n - x[k], x[k] - static_cast<double>(k) / n});
    }
    return d;
}

// |z| from a two-sided p-value by bisection.
double abs_score(double p) {
    double lo = 0.0;
    double hi = 38.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (two_sided_pvalue(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> null_sample(double rho, std::size_t reps) {
    SimConfig config;
    config.n = 100;
    config.n0 = 100;
    config.block_size = 2;
    config.rho = rho;
    const auto truth = truth_layout(config.n, config.n0, config.block_size);
    std::vector<double> first;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        auto rng = replication_stream(config, rep);
        const auto p = generate(config, truth, rng);
        for (std::size_t i = 0; i < p.layout().blocks(); ++i) first.push_back(p.at(i, 0));
    }
    return first;
}

} // namespace

TEST_SUITE("simulation") {
    TEST_CASE("truth layout") {
        const auto even = truth_layout(8, 4, 4);
        CHECK(even.layout().blocks() == 2);
        CHECK(std::ranges::equal(even.true_nulls_per_block(), std::vector<std::size_t>{2, 2}));
        CHECK(even.is_true_null(0, 0));
        CHECK(even.is_true_null(0, 1));
        CHECK_FALSE(even.is_true_null(0, 2));

        // Three true nulls over two blocks: the extra one goes to the last block.
        const auto split = truth_layout(6, 3, 3);
        CHECK(std::ranges::equal(split.true_nulls_per_block(), std::vector<std::size_t>{1, 2}));

        CHECK(truth_layout(240, 120, 6).true_nulls() == 120);
        CHECK(truth_layout(12, 0, 3).true_nulls() == 0);
        CHECK(truth_layout(12, 12, 3).true_nulls() == 12);

        CHECK_THROWS_AS(truth_layout(10, 5, 3), std::invalid_argument);
        CHECK_THROWS_AS(truth_layout(10, 11, 2), std::invalid_argument);
        CHECK_THROWS_AS(truth_layout(10, 5, 0), std::invalid_argument);
    }

    TEST_CASE("normal CDF against high-precision values") {
        CHECK(normal_cdf(1.959964) == doctest::Approx(0.975000000903557595697504894747).epsilon(1e-15));
        CHECK(normal_cdf(0.5) == doctest::Approx(0.691462461274013103637704610608).epsilon(1e-15));
        CHECK(normal_cdf(1.0) == doctest::Approx(0.841344746068542948585232545632).epsilon(1e-15));
        CHECK(normal_cdf(2.5) == doctest::Approx(0.993790334674223864833021895426).epsilon(1e-15));
        CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316300945266518147676).epsilon(1e-14));
        CHECK(normal_cdf(6.0) == doctest::Approx(0.999999999013412354962301859299).epsilon(1e-15));
        CHECK(normal_cdf(-8.2) == doctest::Approx(1.20193515427357871096958412832e-16).epsilon(1e-12));
        CHECK(normal_cdf(0.0) == 0.5);
        for (double x = -9.0; x <= 9.0; x += 0.37) {
            CHECK(std::abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-14);
        }
        CHECK_THROWS_AS(normal_cdf(std::nan("")), std::invalid_argument);
        CHECK_THROWS_AS(normal_cdf(INFINITY), std::invalid_argument);
        CHECK(two_sided_pvalue(1.959964) == doctest::Approx(0.05).epsilon(1e-6));
        CHECK(two_sided_pvalue(-1.959964) == two_sided_pvalue(1.959964));
    }

    TEST_CASE("null p-values are uniform") {
        // 10^4 independent draws; 1.95 / sqrt(n) is the 0.001 KS critical value.
        const double critical = 1.95 / 100.0;
        CHECK(ks_uniform(null_sample(0.0, 200)) < critical);
        CHECK(ks_uniform(null_sample(0.7, 200)) < critical);
    }

    TEST_CASE("within-block correlation") {
        // A strong signal keeps every score positive, so the score is
        // recoverable from its p-value.
        SimConfig config;
        config.n = 2000;
        config.n0 = 0;
        config.block_size = 2;
        config.rho = 0.8;
        config.signal = 8.0;
        const auto truth = truth_layout(config.n, config.n0, config.block_size);
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        double count = 0;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            auto rng = replication_stream(config, rep);
            const auto p = generate(config, truth, rng);
            for (std::size_t i = 0; i < p.layout().blocks(); ++i) {
                const double x = abs_score(p.at(i, 0));
                const double y = abs_score(p.at(i, 1));
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
                count += 1;
            }
        }
        const double mx = sx / count;
        const double my = sy / count;
        const double corr = (sxy / count - mx * my) /
                            std::sqrt((sxx / count - mx * mx) * (syy / count - my * my));
        CHECK(count == 100000);
        CHECK(mx == doctest::Approx(8.0).epsilon(0.002));
        CHECK(corr == doctest::Approx(0.8).epsilon(0.02));
    }

    TEST_CASE("replication streams") {
        SimConfig a;
        auto r1 = replication_stream(a, 7);
        auto r2 = replication_stream(a, 7);
        CHECK(r1() == r2());
        auto r3 = replication_stream(a, 8);
        auto r4 = replication_stream(a, 7);
        CHECK(r3() != r4());

        // Lambda and method do not enter the stream.
        SimConfig b = a;
        b.lambda = 0.8;
        b.methods = {Method::Bonf};
        auto r5 = replication_stream(b, 7);
        auto r6 = replication_stream(a, 7);
        CHECK(r5() == r6());

        SimConfig c = a;
        c.rho = 0.1;
        auto r7 = replication_stream(c, 7);
        auto r8 = replication_stream(a, 7);
        CHECK(r7() != r8());
    }

    TEST_CASE("output does not depend on the thread count") {
        SimConfig config;
        config.n = 60;
        config.n0 = 30;
        config.block_size = 3;
        config.rho = 0.4;
        config.reps = 157;
        config.seed = 9;
        config.methods = {Method::BH, Method::tsBH, Method::adBH1, Method::adBH2, Method::adBH3,
                          Method::Bonf, Method::adBon1, Method::adBon2};
        const auto one = to_csv(run_mc(config, 1));
        CHECK(one == to_csv(run_mc(config, 3)));
        CHECK(one == to_csv(run_mc(config, 8)));
    }

    TEST_CASE("metric invariants") {
        SimConfig config;
        config.n = 40;
        config.n0 = 20;
        config.block_size = 4;
        config.rho = 0.5;
        config.reps = 200;
        config.methods = {Method::BH, Method::tsBH, Method::adBH1, Method::adBH2, Method::adBH3,
                          Method::Bonf, Method::adBon1, Method::adBon2};
        const auto truth = truth_layout(config.n, config.n0, config.block_size);
        const std::vector<double> lambdas{0.2, 0.5, 0.8};
        for (std::uint64_t rep = 0; rep < 50; ++rep) {
            const auto per = evaluate_replication(config, truth, lambdas, rep);
            REQUIRE(per.size() == 3);
            for (const auto& row : per) {
                for (const auto& stats : row) {
                    REQUIRE(stats.false_discovery_proportion >= 0.0);
                    REQUIRE(stats.false_discovery_proportion <= stats.any_false_rejection);
                    REQUIRE(stats.power >= 0.0);
                    REQUIRE(stats.power <= 1.0);
                }
            }
            // Methods without lambda agree across lambdas.
            REQUIRE(per[0][0].power == per[2][0].power);
        }

        for (const auto& row : run_mc(config, 2).rows) {
            CHECK(row.fdr.mean <= row.fwer.mean);
            CHECK(row.fdr.se.has_value());
        }
    }

    TEST_CASE("degenerate configurations") {
        SimConfig config;
        config.n = 24;
        config.n0 = 0;
        config.block_size = 4;
        config.reps = 50;
        for (const auto& row : run_mc(config).rows) {
            CHECK(row.fdr.mean == 0.0);
            CHECK(row.fwer.mean == 0.0);
        }

        config.n0 = 24;
        for (const auto& row : run_mc(config).rows) CHECK(row.power.mean == 0.0);

        config.reps = 1;
        const auto single = run_mc(config);
        CHECK_FALSE(single.rows.front().fdr.se.has_value());
        const auto csv = to_csv(single);
        CHECK(csv.find(",,") != std::string::npos);

        config.reps = 0;
        CHECK_THROWS_AS(run_mc(config), std::invalid_argument);
        config.reps = 10;
        config.rho = 1.0;
        CHECK_THROWS_AS(run_mc(config), std::invalid_argument);
        config.rho = 0.0;
        config.block_size = 5;
        CHECK_THROWS_AS(run_mc(config), std::invalid_argument);
    }

    TEST_CASE("summary statistics") {
        const std::vector<double> x{0.0, 1.0, 0.0, 1.0, 1.0};
        const auto est = summarize(x);
        CHECK(est.mean == doctest::Approx(0.6));
        // sample variance 0.3, se sqrt(0.3 / 5)
        CHECK(*est.se == doctest::Approx(std::sqrt(0.06)));
        CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);

        std::vector<double> many(1001, 0.1);
        CHECK(pairwise_sum(many) == doctest::Approx(100.1).epsilon(1e-14));
    }

    TEST_CASE("block adaptive BH equals the flat version with singleton blocks") {
        SimConfig config;
        config.n = 50;
        config.n0 = 25;
        config.block_size = 1;
        config.reps = 300;
        config.methods = {Method::adBH1, Method::adBH2, Method::BH, Method::tsBH};
        const auto rows = run_mc(config).rows;
        CHECK(rows[0].fdr.mean == rows[1].fdr.mean);
        CHECK(rows[0].power.mean == rows[1].power.mean);
        CHECK(rows[2].fdr.mean == rows[3].fdr.mean);
        CHECK(rows[2].power.mean == rows[3].power.mean);
    }

    TEST_CASE("error rates of the conventional procedures") {
        SimConfig config;
        config.n = 100;
        config.n0 = 100;
        config.block_size = 1;
        config.reps = 4000;
        config.methods = {Method::Bonf};
        const auto bonf = run_mc(config).rows.front();
        CHECK(bonf.fwer.mean <= 0.05 + 3.0 * *bonf.fwer.se);

        // Independent BH controls FDR at exactly n0 alpha / n.
        config.n0 = 50;
        config.methods = {Method::BH};
        const auto bh_row = run_mc(config).rows.front();
        CHECK(std::abs(bh_row.fdr.mean - 0.025) <= 4.0 * *bh_row.fdr.se);
    }

    TEST_CASE("CSV output") {
        SimConfig config;
        config.n = 8;
        config.n0 = 4;
        config.block_size = 2;
        config.reps = 5;
        config.seed = 3;
        config.methods = {Method::adBH2};
        const auto csv = to_csv(run_mc(config));
        CHECK(csv.rfind(std::string(sim_csv_header) + "\n", 0) == 0);
        CHECK(csv.find("\nadBH2,8,4,2,0.5,0,0.050000000000000003,5,3,") != std::string::npos);
        CHECK(method_from_name("adBon2") == Method::adBon2);
        CHECK(method_name(Method::tsBH) == "tsBH");
        CHECK_THROWS_AS(method_from_name("nope"), std::invalid_argument);
        CHECK(preset_grid("fwer-figures").block_sizes == std::vector<std::size_t>{2, 4, 10, 20});
        CHECK_THROWS_AS(preset_grid("other"), std::invalid_argument);
    }
}
