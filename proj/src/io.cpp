#include "blockmt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string_view>

#include "blockmt/format.hpp"

namespace blockmt {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

std::string optional_number(const std::optional<double>& x) {
    return x ? format_exact(*x) : std::string("NA");
}

} // namespace

InputError::InputError(std::size_t line, const std::string& message)
    : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
      line_(line) {}

LabeledPValues read_pvalue_csv(std::istream& in) {
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    std::map<std::string, std::size_t, std::less<>> block_index;
    std::vector<std::string> block_ids;
    std::vector<std::vector<std::string>> hypothesis_ids;
    std::vector<std::vector<double>> rows;

    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto fields = split(text, ',');
        if (!have_header) {
            if (fields.size() != 3 || fields[0] != "block_id" || fields[1] != "hypothesis_id" ||
                fields[2] != "p_value") {
                throw InputError(number, "expected header 'block_id,hypothesis_id,p_value'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 3) {
            throw InputError(number, "expected 3 fields, found " + std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw InputError(number, "empty block_id");
        const auto p = parse_double(fields[2]);
        if (!p) throw InputError(number, "p_value '" + std::string(fields[2]) + "' is not a number");
        if (*p < 0.0 || *p > 1.0) throw InputError(number, "p_value outside [0, 1]");

        auto [it, inserted] = block_index.try_emplace(std::string(fields[0]), block_ids.size());
        if (inserted) {
            block_ids.emplace_back(fields[0]);
            hypothesis_ids.emplace_back();
            rows.emplace_back();
        }
        hypothesis_ids[it->second].emplace_back(fields[1]);
        rows[it->second].push_back(*p);
    }
    if (!have_header) throw InputError(std::max<std::size_t>(number, 1), "empty input");
    if (rows.empty()) throw InputError(number, "no p-values after the header");

    return LabeledPValues{PValueMatrix::from_rows(rows), std::move(block_ids),
                          std::move(hypothesis_ids)};
}

LabeledPValues read_pvalue_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(0, "cannot open '" + path + "'");
    return read_pvalue_csv(in);
}

nlohmann::json to_json(const AnalysisReport& report, const LabeledPValues& data) {
    using nlohmann::json;
    const auto& layout = data.matrix.layout();
    const auto& outcome = report.outcome;

    json doc;
    doc["method"] = report.method;
    doc["alpha"] = report.alpha;
    doc["lambda"] = report.lambda ? json(*report.lambda) : json(nullptr);
    doc["estimator"] = report.estimator ? json(*report.estimator) : json(nullptr);
    doc["n"] = layout.total();
    doc["b"] = layout.blocks();
    doc["R"] = outcome.rejections();
    doc["B"] = outcome.significant_blocks;
    if (outcome.n0_estimate) {
        doc["n0_hat"] = *outcome.n0_estimate;
        doc["pi0_hat"] = *outcome.n0_estimate / static_cast<double>(layout.total());
    } else {
        doc["n0_hat"] = nullptr;
        doc["pi0_hat"] = nullptr;
    }
    doc["lambda_threshold"] = report.lambda_threshold;

    json rejected = json::array();
    for (const auto& idx : outcome.rejected) rejected.push_back({idx.block, idx.item});
    doc["rejected"] = std::move(rejected);

    json decisions = json::array();
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            const bool hit = std::binary_search(outcome.rejected.begin(), outcome.rejected.end(),
                                                HypothesisIndex{i, j});
            decisions.push_back({{"block_id", data.block_ids[i]},
                                 {"hypothesis_id", data.hypothesis_ids[i][j]},
                                 {"p_value", data.matrix.at(i, j)},
                                 {"rejected", hit}});
        }
    }
    doc["decisions"] = std::move(decisions);
    return doc;
}

TestOutcome outcome_from_json(const nlohmann::json& doc) {
    TestOutcome outcome;
    for (const auto& pair : doc.at("rejected")) {
        outcome.rejected.push_back({pair.at(0).get<std::size_t>(), pair.at(1).get<std::size_t>()});
    }
    outcome.significant_blocks = doc.at("B").get<std::size_t>();
    if (!doc.at("n0_hat").is_null()) outcome.n0_estimate = doc.at("n0_hat").get<double>();
    if (doc.at("R").get<std::size_t>() != outcome.rejected.size()) {
        throw std::invalid_argument("R does not match the rejection list");
    }
    return outcome;
}

std::string to_delimited(const AnalysisReport& report, const LabeledPValues& data, char sep) {
    const auto& layout = data.matrix.layout();
    const auto& outcome = report.outcome;
    std::optional<double> pi0;
    if (outcome.n0_estimate) pi0 = *outcome.n0_estimate / static_cast<double>(layout.total());

    std::string out;
    out += "# method=" + report.method + '\n';
    out += "# alpha=" + format_exact(report.alpha) + '\n';
    out += "# lambda=" + optional_number(report.lambda) + '\n';
    out += "# R=" + std::to_string(outcome.rejections()) + '\n';
    out += "# B=" + std::to_string(outcome.significant_blocks) + '\n';
    out += "# n0_hat=" + optional_number(outcome.n0_estimate) + '\n';
    out += "# pi0_hat=" + optional_number(pi0) + '\n';
    out += "# lambda_threshold=" + format_exact(report.lambda_threshold) + '\n';
    out += fmt::format("block_id{0}hypothesis_id{0}p_value{0}rejected\n", sep);
    for (std::size_t i = 0; i < layout.blocks(); ++i) {
        for (std::size_t j = 0; j < layout.size(i); ++j) {
            const bool hit = std::binary_search(outcome.rejected.begin(), outcome.rejected.end(),
                                                HypothesisIndex{i, j});
            out += fmt::format("{1}{0}{2}{0}{3}{0}{4}\n", sep, data.block_ids[i],
                               data.hypothesis_ids[i][j], format_exact(data.matrix.at(i, j)),
                               hit ? 1 : 0);
        }
    }
    return out;
}

SimGrid read_grid_config(std::istream& in, SimGrid start) {
    SimGrid grid = std::move(start);
    std::string line;
    std::size_t number = 0;

    const auto doubles = [&](std::string_view value) {
        std::vector<double> out;
        for (auto item : split(value, ',')) {
            const auto x = parse_double(item);
            if (!x) throw InputError(number, "'" + std::string(item) + "' is not a number");
            out.push_back(*x);
        }
        return out;
    };
    const auto unsigned_value = [&](std::string_view value) {
        const auto x = parse_unsigned(value);
        if (!x) throw InputError(number, "'" + std::string(value) + "' is not a nonnegative integer");
        return *x;
    };

    while (std::getline(in, line)) {
        ++number;
        auto text = trim(std::string_view(line).substr(0, line.find('#')));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw InputError(number, "expected key=value");
        const auto key = trim(text.substr(0, eq));
        const auto value = trim(text.substr(eq + 1));

        if (key == "preset") {
            try {
                const auto seed = grid.base.seed;
                grid = preset_grid(value);
                grid.base.seed = seed;
            } catch (const std::invalid_argument& e) {
                throw InputError(number, e.what());
            }
        } else if (key == "n") {
            grid.base.n = unsigned_value(value);
        } else if (key == "n0") {
            grid.base.n0 = unsigned_value(value);
        } else if (key == "s") {
            grid.block_sizes.clear();
            for (auto item : split(value, ',')) grid.block_sizes.push_back(unsigned_value(item));
        } else if (key == "lambda") {
            grid.lambdas = doubles(value);
        } else if (key == "rho") {
            grid.rhos = doubles(value);
        } else if (key == "alpha") {
            grid.base.alpha = doubles(value).at(0);
        } else if (key == "d") {
            grid.base.signal = doubles(value).at(0);
        } else if (key == "reps") {
            grid.base.reps = unsigned_value(value);
        } else if (key == "seed") {
            grid.base.seed = unsigned_value(value);
        } else if (key == "methods") {
            grid.base.methods.clear();
            for (auto item : split(value, ',')) {
                try {
                    grid.base.methods.push_back(method_from_name(item));
                } catch (const std::invalid_argument& e) {
                    throw InputError(number, e.what());
                }
            }
        } else {
            throw InputError(number, "unknown key '" + std::string(key) + "'");
        }
    }
    return grid;
}

} // namespace blockmt
