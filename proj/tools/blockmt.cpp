// blockmt: block-aware multiple testing from the command line.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "blockmt/cli.hpp"
#include "blockmt/io.hpp"

namespace {

using namespace blockmt;

// Writes to --output when given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) file_.emplace(path);
    }
    bool ok() const { return !file_ || file_->good(); }
    std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

private:
    std::optional<std::ofstream> file_;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-aware adaptive FDR and FWER procedures"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<double> lambda;
    std::string output;
    unsigned threads = 0;
    app.add_option("--seed", seed, "Random seed (default from $BLOCKMT_SEED, else 0)");
    app.add_option("--alpha", alpha, "Level in (0, 1), default 0.05");
    app.add_option("--lambda", lambda, "Estimator tuning parameter in (0, 1)");
    app.add_option("--output,-o", output, "Write results to this file instead of stdout");
    app.add_option("--threads", threads, "Worker cap for simulations (0 = all cores)");

    // test
    auto* test = app.add_subcommand("test", "Apply a procedure to a p-value file");
    cli::AnalysisRequest request;
    std::string estimator = "block";
    std::string format = "json";
    test->add_option("input", request.input_path, "CSV with block_id,hypothesis_id,p_value")
        ->required();
    test->add_option("--method,-m", request.method,
                     "bh | bonferroni | two-stage-bh | adaptive-bh | adaptive-bonferroni | bky");
    test->add_option("--estimator", estimator, "block | storey (adaptive methods)");
    test->add_option("--format", format, "json | csv | tsv");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo error rates and power");
    std::string preset = "fdr-figures";
    std::string config_path;
    std::optional<std::size_t> sim_n;
    std::optional<std::size_t> sim_n0;
    std::optional<std::size_t> sim_reps;
    std::optional<double> sim_d;
    std::vector<std::size_t> sim_s;
    std::vector<double> sim_rho;
    std::vector<double> sim_lambdas;
    std::vector<std::string> sim_methods;
    simulate->add_option("--preset", preset, "fdr-figures | fwer-figures");
    simulate->add_option("--config", config_path, "key=value settings file");
    simulate->add_option("--n", sim_n, "Number of hypotheses");
    simulate->add_option("--n0", sim_n0, "Number of true nulls");
    simulate->add_option("--s", sim_s, "Block sizes")->delimiter(',');
    simulate->add_option("--rho", sim_rho, "Within-block correlations")->delimiter(',');
    simulate->add_option("--lambdas", sim_lambdas, "Estimator parameters")->delimiter(',');
    simulate->add_option("--reps", sim_reps, "Replications per cell (default 2000)");
    simulate->add_option("--d", sim_d, "Signal mean of false nulls (default sqrt(10))");
    simulate->add_option("--methods", sim_methods, "BH,tsBH,adBH1,adBH2,adBH3,Bonf,adBon1,adBon2")
        ->delimiter(',');

    // verify
    auto* verify = app.add_subcommand("verify", "Run the exact verification checks");
    cli::VerifyScope scope;
    verify->add_flag("--property1", scope.property1, "Certify the block estimator exactly");
    verify->add_option("--max-b", scope.max_blocks, "Largest block count for --property1");
    verify->add_option("--max-s", scope.max_block_size, "Largest block size for --property1");
    verify->add_flag("--lemma1", scope.lemma1, "Balanced column-sum rearrangement");
    verify->add_option("--instances", scope.instances, "Random instances for --lemma1/--oracles");
    verify->add_flag("--lemma2", scope.lemma2, "Monotonicity of the threshold function");
    verify->add_flag("--identity", scope.identity, "Binomial inverse-moment identity");
    verify->add_flag("--oracles", scope.oracles, "Procedures against brute-force oracles");

    // threshold
    auto* threshold = app.add_subcommand("threshold", "Smallest certified lambda for b blocks");
    long long blocks = 0;
    threshold->add_option("b", blocks, "Number of blocks")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::exit_ok : cli::exit_parameter_error;
    }

    std::uint64_t default_seed = 0;
    try {
        default_seed = seed.value_or(cli::default_seed());
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_parameter_error;
    }

    Sink sink(output);
    if (!sink.ok()) {
        std::cerr << "error: cannot write '" << output << "'\n";
        return cli::exit_input_error;
    }

    if (*test) {
        request.alpha = alpha.value_or(0.05);
        request.lambda = lambda;
        try {
            request.estimator = estimator_kind_from_string(estimator);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::exit_parameter_error;
        }
        if (format == "json") {
            request.format = cli::OutputFormat::json;
        } else if (format == "csv") {
            request.format = cli::OutputFormat::csv;
        } else if (format == "tsv") {
            request.format = cli::OutputFormat::tsv;
        } else {
            std::cerr << "error: unknown format '" << format << "'\n";
            return cli::exit_parameter_error;
        }
        return cli::cmd_test(request, sink.stream(), std::cerr);
    }

    if (*simulate) {
        SimGrid grid;
        try {
            grid = preset_grid(preset);
            grid.base.seed = default_seed;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) {
                    std::cerr << "error: cannot open '" << config_path << "'\n";
                    return cli::exit_input_error;
                }
                grid = read_grid_config(in, grid);
            }
            if (seed) grid.base.seed = *seed;
            if (alpha) grid.base.alpha = *alpha;
            if (lambda) grid.lambdas = {*lambda};
            if (!sim_lambdas.empty()) grid.lambdas = sim_lambdas;
            if (sim_n) grid.base.n = *sim_n;
            if (sim_n0) grid.base.n0 = *sim_n0;
            if (sim_reps) grid.base.reps = *sim_reps;
            if (sim_d) grid.base.signal = *sim_d;
            if (!sim_s.empty()) grid.block_sizes = sim_s;
            if (!sim_rho.empty()) grid.rhos = sim_rho;
            if (!sim_methods.empty()) {
                grid.base.methods.clear();
                for (const auto& name : sim_methods) grid.base.methods.push_back(method_from_name(name));
            }
        } catch (const InputError& e) {
            std::cerr << "error: " << config_path << ": " << e.what() << '\n';
            return cli::exit_input_error;
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::exit_parameter_error;
        }
        return cli::cmd_simulate(grid, threads, sink.stream(), std::cerr);
    }

    if (*verify) {
        scope.seed = default_seed;
        return cli::cmd_verify(scope, sink.stream(), std::cerr);
    }

    return cli::cmd_threshold(blocks, sink.stream(), std::cerr);
}
