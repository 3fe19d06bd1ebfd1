#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "blockmt/cli.hpp"
#include "blockmt/io.hpp"
#include "blockmt/procedures.hpp"

using namespace blockmt;

namespace {

struct TempFile {
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("blockmt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
                 ".csv"))
                   .string();
        std::ofstream(path) << content;
    }
    ~TempFile() { std::filesystem::remove(path); }
    std::string path;
};

const char* two_blocks =
    "block_id,hypothesis_id,p_value\n"
    "g1,a,0.001\n"
    "g1,b,0.30\n"
    "g2,c,0.004\n"
    "g2,d,0.60\n";

std::size_t error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_pvalue_csv(in);
    } catch (const InputError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST_SUITE("io") {
    TEST_CASE("p-value files") {
        std::istringstream in("block_id,hypothesis_id,p_value\n"
                              "x,h1,0.5\n"
                              "y,h2,0.25\n"
                              "\n"
                              "x,h3,1\n");
        const auto data = read_pvalue_csv(in);
        CHECK(data.block_ids == std::vector<std::string>{"x", "y"});
        CHECK(data.hypothesis_ids[0] == std::vector<std::string>{"h1", "h3"});
        CHECK(std::ranges::equal(data.matrix.layout().sizes(), std::vector<std::size_t>{2, 1}));
        CHECK(data.matrix.at(0, 1) == 1.0);
        CHECK(data.matrix.at(1, 0) == 0.25);
    }

    TEST_CASE("malformed files report the line") {
        CHECK(error_line("") == 1);
        CHECK(error_line("block,hyp,p\n") == 1);
        CHECK(error_line("block_id,hypothesis_id,p_value\n") == 1);
        CHECK(error_line("block_id,hypothesis_id,p_value\na,b,0.1\na,c\n") == 3);
        CHECK(error_line("block_id,hypothesis_id,p_value\na,b,zero\n") == 2);
        CHECK(error_line("block_id,hypothesis_id,p_value\na,b,1.5\n") == 2);
        CHECK(error_line("block_id,hypothesis_id,p_value\na,b,-0.1\n") == 2);
        CHECK(error_line("block_id,hypothesis_id,p_value\n,b,0.1\n") == 2);
        CHECK(error_line("block_id,hypothesis_id,p_value\na,b,nan\n") == 2);
        CHECK_THROWS_AS(read_pvalue_file("/nonexistent/file.csv"), InputError);
    }

    TEST_CASE("JSON round trip") {
        std::istringstream in(two_blocks);
        const auto data = read_pvalue_csv(in);
        AnalysisReport report;
        report.method = "adaptive-bh";
        report.alpha = 0.05;
        report.lambda = 0.5;
        report.estimator = "block";
        report.lambda_threshold = lambda_threshold(2);
        report.outcome = adaptive_bh(data.matrix, 0.05, EstimatorSpec(EstimatorKind::block, 0.5));

        const auto doc = to_json(report, data);
        CHECK(doc.at("R") == 2);
        CHECK(doc.at("B") == 2);
        CHECK(doc.at("n0_hat") == 6.0);
        CHECK(doc.at("pi0_hat") == 1.5);
        CHECK(doc.at("decisions").size() == 4);
        CHECK(doc.at("decisions")[2].at("hypothesis_id") == "c");
        CHECK(doc.at("decisions")[2].at("rejected") == true);

        const auto reparsed = nlohmann::json::parse(doc.dump());
        CHECK(outcome_from_json(reparsed) == report.outcome);
        CHECK(reparsed.at("lambda_threshold").get<double>() == report.lambda_threshold);

        const auto table = to_delimited(report, data, '\t');
        CHECK(table.find("# R=2\n") != std::string::npos);
        CHECK(table.find("g2\tc\t0.0040000000000000001\t1\n") != std::string::npos);
    }

    TEST_CASE("grid configuration") {
        std::istringstream in("# comment\n"
                              "preset = fwer-figures\n"
                              "s = 5, 10\n"
                              "rho = 0, 0.5\n"
                              "reps = 12   # trailing comment\n"
                              "methods = Bonf,adBon2\n");
        SimGrid start;
        start.base.seed = 77;
        const auto grid = read_grid_config(in, start);
        CHECK(grid.base.n == 100);
        CHECK(grid.base.seed == 77);
        CHECK(grid.block_sizes == std::vector<std::size_t>{5, 10});
        CHECK(grid.rhos == std::vector<double>{0.0, 0.5});
        CHECK(grid.base.reps == 12);
        CHECK(grid.base.methods == std::vector<Method>{Method::Bonf, Method::adBon2});

        std::istringstream bad("reps = 10\nspeed = 3\n");
        try {
            read_grid_config(bad, SimGrid{});
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK(e.line() == 2);
        }
        std::istringstream negative("reps = -1\n");
        CHECK_THROWS_AS(read_grid_config(negative, SimGrid{}), InputError);
    }
}

TEST_SUITE("cli") {
    TEST_CASE("test subcommand exit codes") {
        const TempFile valid(two_blocks);
        const TempFile empty("");
        std::ostringstream out;
        std::ostringstream err;

        cli::AnalysisRequest request;
        request.input_path = valid.path;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_ok);
        const auto doc = nlohmann::json::parse(out.str());
        CHECK(doc.at("R") == 2);
        CHECK(doc.at("B") == 2);
        CHECK(doc.at("n0_hat").is_null());

        request.input_path = empty.path;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_input_error);
        request.input_path = valid.path;

        request.alpha = 1.5;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_parameter_error);
        request.alpha = 0.05;

        request.method = "adaptive-bh";
        CHECK(cli::cmd_test(request, out, err) == cli::exit_parameter_error);
        request.lambda = 1.0;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_parameter_error);
        request.method = "nope";
        request.lambda = 0.5;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_parameter_error);
    }

    TEST_CASE("below-threshold lambda warns but runs") {
        const TempFile valid(two_blocks);
        std::ostringstream out;
        std::ostringstream err;
        cli::AnalysisRequest request;
        request.input_path = valid.path;
        request.method = "adaptive-bonferroni";
        request.lambda = 0.2;
        request.format = cli::OutputFormat::csv;
        CHECK(cli::cmd_test(request, out, err) == cli::exit_ok);
        CHECK(err.str().find("below the certified threshold") != std::string::npos);
        CHECK(out.str().find("# lambda=0.20000000000000001\n") != std::string::npos);

        std::ostringstream quiet;
        request.lambda = 0.5;
        CHECK(cli::cmd_test(request, out, quiet) == cli::exit_ok);
        CHECK(quiet.str().empty());
    }

    TEST_CASE("every method runs on the fixture") {
        const TempFile valid(two_blocks);
        for (const char* method :
             {"bh", "bonferroni", "bky", "two-stage-bh", "adaptive-bh", "adaptive-bonferroni"}) {
            std::ostringstream out;
            std::ostringstream err;
            cli::AnalysisRequest request;
            request.input_path = valid.path;
            request.method = method;
            request.lambda = 0.5;
            request.format = cli::OutputFormat::tsv;
            CHECK_MESSAGE(cli::cmd_test(request, out, err) == cli::exit_ok, method);
        }
    }

    TEST_CASE("threshold and verify") {
        std::ostringstream out;
        std::ostringstream err;
        CHECK(cli::cmd_threshold(1, out, err) == cli::exit_ok);
        CHECK(out.str() == "0.3419951893353394\n");
        CHECK(cli::cmd_threshold(0, out, err) == cli::exit_parameter_error);

        std::ostringstream report;
        cli::VerifyScope scope;
        scope.lemma1 = true;
        scope.identity = true;
        scope.instances = 50;
        CHECK(cli::cmd_verify(scope, report, err) == cli::exit_ok);
        CHECK(report.str().find("PASS lemma1") != std::string::npos);
        CHECK(report.str().find("PASS identity") != std::string::npos);
        CHECK(report.str().find("oracles") == std::string::npos);

        scope.instances = 0;
        CHECK(cli::cmd_verify(scope, report, err) == cli::exit_parameter_error);
    }

    TEST_CASE("simulate rejects a bad grid") {
        auto grid = preset_grid("fdr-figures");
        grid.block_sizes = {7};
        std::ostringstream out;
        std::ostringstream err;
        CHECK(cli::cmd_simulate(grid, 1, out, err) == cli::exit_parameter_error);
        grid.block_sizes = {2};
        grid.rhos = {};
        CHECK(cli::cmd_simulate(grid, 1, out, err) == cli::exit_parameter_error);
    }
}
