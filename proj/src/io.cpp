#include "frechet/io.hpp"

#include "frechet/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace frechet {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
    }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) {
        throw ConfigError(where + ": missing field '" + key + "'");
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(where + ": field '" + key + "' must be a number");
    }
    return v.get<double>();
}

std::uint64_t get_unsigned(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0.0 && std::floor(x) == x && x < 1.8e19) {
            return static_cast<std::uint64_t>(x);
        }
    }
    throw ConfigError(where + ": field '" + key + "' must be a nonnegative integer");
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw ConfigError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw ConfigError(where + ": expected an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<double> read_sample_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open sample file '" + path.string() + "'");
    }
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        std::replace(token.begin(), token.end(), ',', ' ');
        std::istringstream parts(token);
        std::string piece;
        while (parts >> piece) {
            double x = 0.0;
            const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), x);
            if (ec != std::errc() || ptr != piece.data() + piece.size()) {
                throw ConfigError("sample file '" + path.string() + "': bad number '" + piece + "'");
            }
            out.push_back(x);
        }
    }
    return out;
}

Margin build_margin(const json& spec, const std::filesystem::path& base_dir) {
    if (!spec.is_object() || !spec.contains("family") || !spec.at("family").is_string()) {
        throw ConfigError("margin: expected an object with a string 'family'");
    }
    const auto family = spec.at("family").get<std::string>();
    const std::string where = "margin '" + family + "'";
    auto keys = [&](std::set<std::string> params) {
        params.insert("family");
        params.insert("count");
        require_keys(spec, params, where);
    };
    if (family == "uniform") {
        keys({"a", "b"});
        return Margin::uniform(get_number(spec, "a", where), get_number(spec, "b", where));
    }
    if (family == "normal") {
        keys({"mu", "sigma"});
        return Margin::normal(get_number(spec, "mu", where), get_number(spec, "sigma", where));
    }
    if (family == "pareto") {
        keys({"theta"});
        return Margin::pareto(get_number(spec, "theta", where));
    }
    if (family == "exponential") {
        keys({"lambda"});
        return Margin::exponential(get_number(spec, "lambda", where));
    }
    if (family == "lognormal") {
        keys({"mu", "sigma"});
        return Margin::lognormal(get_number(spec, "mu", where), get_number(spec, "sigma", where));
    }
    if (family == "cauchy") {
        keys({"loc", "scale"});
        return Margin::cauchy(get_number(spec, "loc", where), get_number(spec, "scale", where));
    }
    if (family == "binomial") {
        keys({"m", "p"});
        const double m = get_number(spec, "m", where);
        if (std::floor(m) != m || m < 0 || m > 1e9) {
            throw ConfigError(where + ": 'm' must be a nonnegative integer");
        }
        return Margin::binomial(static_cast<int>(m), get_number(spec, "p", where));
    }
    if (family == "bernoulli") {
        keys({"p"});
        return Margin::bernoulli(get_number(spec, "p", where));
    }
    if (family == "discrete_uniform") {
        keys({"points"});
        if (!spec.contains("points")) {
            throw ConfigError(where + ": missing field 'points'");
        }
        return Margin::discrete_uniform(number_list(spec.at("points"), where + " points"));
    }
    if (family == "empirical") {
        keys({"sample", "sample_file"});
        if (spec.contains("sample") == spec.contains("sample_file")) {
            throw ConfigError(where + ": give exactly one of 'sample' and 'sample_file'");
        }
        if (spec.contains("sample")) {
            return Margin::empirical(number_list(spec.at("sample"), where + " sample"));
        }
        if (!spec.at("sample_file").is_string()) {
            throw ConfigError(where + ": 'sample_file' must be a string");
        }
        std::filesystem::path p = spec.at("sample_file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        return Margin::empirical(read_sample_file(p));
    }
    throw ConfigError("unknown margin family '" + family + "'");
}

}  // namespace

std::vector<Margin> parse_margin_spec(const json& raw, const std::filesystem::path& base_dir) {
    // Parameters may sit at the top level or inside a "params" object.
    json spec = raw;
    if (spec.is_object() && spec.contains("params")) {
        const auto& params = spec.at("params");
        if (!params.is_object()) {
            throw ConfigError("margin: 'params' must be an object");
        }
        for (const auto& [key, value] : params.items()) {
            if (spec.contains(key)) {
                throw ConfigError("margin: parameter '" + key + "' given twice");
            }
            spec[key] = value;
        }
        spec.erase("params");
    }
    std::size_t count = 1;
    if (spec.is_object() && spec.contains("count")) {
        count = get_unsigned(spec, "count", "margin");
        if (count == 0) {
            throw ConfigError("margin: 'count' must be positive");
        }
    }
    try {
        return std::vector<Margin>(count, build_margin(spec, base_dir));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

CostSpec parse_cost_spec(const json& spec) {
    if (spec.is_string()) {
        return parse_cost_spec(json{{"kind", spec}});
    }
    if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string()) {
        throw ConfigError("cost: expected an object with a string 'kind'");
    }
    const auto kind = spec.at("kind").get<std::string>();
    if (kind == "variance") {
        require_keys(spec, {"kind"}, "cost");
        return CostSpec::variance_of_sum();
    }
    if (kind == "product") {
        require_keys(spec, {"kind"}, "cost");
        return CostSpec::product();
    }
    if (kind == "stop_loss") {
        require_keys(spec, {"kind", "strike"}, "cost");
        return CostSpec::stop_loss(get_number(spec, "strike", "cost"));
    }
    if (kind == "power") {
        require_keys(spec, {"kind", "p"}, "cost");
        const double p = get_number(spec, "p", "cost");
        if (!(p >= 1.0)) {
            throw ConfigError("cost: power 'p' must be at least 1 for convexity");
        }
        return CostSpec::convex_of_sum([p](double s) { return std::pow(std::abs(s), p); }, "power");
    }
    throw ConfigError("cost: unknown kind '" + kind + "'");
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    require_keys(doc,
                 {"margins", "n", "grid_mode", "seed", "restarts", "max_sweeps", "tolerance", "threads", "alpha", "k",
                  "cost", "kind", "d"},
                 "config");
    RunConfig c;
    if (doc.contains("margins")) {
        const auto& ms = doc.at("margins");
        if (!ms.is_array()) {
            throw ConfigError("config: 'margins' must be an array");
        }
        for (const auto& spec : ms) {
            auto expanded = parse_margin_spec(spec, base_dir);
            c.margins.insert(c.margins.end(), expanded.begin(), expanded.end());
        }
    }
    if (doc.contains("n")) {
        c.n = get_unsigned(doc, "n", "config");
    }
    if (doc.contains("grid_mode")) {
        if (!doc.at("grid_mode").is_string()) {
            throw ConfigError("config: 'grid_mode' must be a string");
        }
        try {
            c.grid_mode = parse_grid_mode(doc.at("grid_mode").get<std::string>());
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
    if (doc.contains("seed")) {
        c.seed = get_unsigned(doc, "seed", "config");
    }
    if (doc.contains("restarts")) {
        c.restarts = get_unsigned(doc, "restarts", "config");
    }
    if (doc.contains("max_sweeps")) {
        c.max_sweeps = get_unsigned(doc, "max_sweeps", "config");
    }
    if (doc.contains("threads")) {
        c.threads = static_cast<unsigned>(get_unsigned(doc, "threads", "config"));
    }
    if (doc.contains("tolerance")) {
        c.tolerance = get_number(doc, "tolerance", "config");
        if (!(c.tolerance >= 0.0)) {
            throw ConfigError("config: 'tolerance' must be nonnegative");
        }
    }
    if (doc.contains("alpha")) {
        c.alpha = get_number(doc, "alpha", "config");
    }
    if (doc.contains("k")) {
        c.k = get_number(doc, "k", "config");
    }
    if (doc.contains("cost")) {
        c.cost = parse_cost_spec(doc.at("cost"));
    }
    if (doc.contains("kind")) {
        if (!doc.at("kind").is_string()) {
            throw ConfigError("config: 'kind' must be a string");
        }
        c.kind = doc.at("kind").get<std::string>();
    }
    if (doc.contains("d")) {
        c.d = get_unsigned(doc, "d", "config");
    }
    return c;
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_run_config(doc, base_dir);
}

namespace {

std::string format_double(double x) {
    // Shortest representation that round-trips.
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace

void write_matrix_csv(std::ostream& os, const RearrangementMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                os << ',';
            }
            os << format_double(m.at(i, j));
        }
        os << '\n';
    }
}

RearrangementMatrix read_matrix_csv(std::istream& is) {
    std::vector<std::vector<double>> cols;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto end = line.find(',', start);
            const auto field = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
            double x = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                throw InvalidArgument("matrix csv line " + std::to_string(line_no) + ": bad value '" + field + "'");
            }
            row.push_back(x);
            if (end == std::string::npos) {
                break;
            }
            start = end + 1;
        }
        if (cols.empty()) {
            cols.resize(row.size());
        } else if (row.size() != cols.size()) {
            throw InvalidArgument("matrix csv line " + std::to_string(line_no) + ": ragged row");
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            cols[j].push_back(row[j]);
        }
    }
    return RearrangementMatrix(std::move(cols));
}

json matrix_to_json(const RearrangementMatrix& m) {
    return json{{"n", m.rows()}, {"d", m.cols()}, {"columns", m.columns()}};
}

RearrangementMatrix matrix_from_json(const json& j) {
    auto cols = j.at("columns").get<std::vector<std::vector<double>>>();
    auto m = RearrangementMatrix(std::move(cols));
    if (m.rows() != j.at("n").get<std::size_t>() || m.cols() != j.at("d").get<std::size_t>()) {
        throw InvalidArgument("matrix json: n/d disagree with the columns");
    }
    return m;
}

void write_plot_csv(std::ostream& os, const RearrangementMatrix& m) {
    const std::size_t n = m.rows();
    const auto nd = static_cast<double>(n);
    std::vector<std::vector<double>> ranks(m.cols(), std::vector<double>(n));
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const auto col = m.column(j);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
        for (std::size_t r = 0; r < n; ++r) {
            ranks[j][order[r]] = (static_cast<double>(r) + 0.5) / nd;
        }
    }
    os << 'u';
    for (std::size_t j = 0; j < m.cols(); ++j) {
        os << ",f" << (j + 1);
    }
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        os << format_double((static_cast<double>(i) + 0.5) / nd);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            os << ',' << format_double(ranks[j][i]);
        }
        os << '\n';
    }
}

json number_or_null(double x) {
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json covariance_to_json(const CovarianceResult& r) {
    json j{{"feasible", r.feasible}};
    if (r.covariance) {
        j["covariance"] = *r.covariance;
    }
    if (!r.violated.empty()) {
        j["violated"] = r.violated;
    }
    return j;
}

json mix_report_to_json(const MixReport& r) {
    json evidence = json::array();
    for (const auto& t : r.evidence) {
        json e{{"test", t.name}, {"outcome", to_string(t.outcome)}, {"slack", number_or_null(t.slack)}};
        if (!t.note.empty()) {
            e["note"] = t.note;
        }
        evidence.push_back(std::move(e));
    }
    json j{{"verdict", to_string(r.verdict)},
           {"evidence", std::move(evidence)},
           {"residual", number_or_null(r.residual)},
           {"scale", number_or_null(r.scale)}};
    j["center"] = r.center ? number_or_null(*r.center) : json(nullptr);
    if (r.certificate) {
        j["restart_index"] = r.restart_index;
        j["certificate_rows"] = r.certificate->rows();
    }
    return j;
}

json bound_result_to_json(const BoundResult& r) {
    json diag = json::object();
    for (const auto& [k, v] : r.diagnostics) {
        diag[k] = number_or_null(v);
    }
    json j{{"value", number_or_null(r.value)},
           {"side", to_string(r.side)},
           {"method", to_string(r.method)},
           {"grid_n", r.grid_n},
           {"grid_mode", to_string(r.grid_mode)},
           {"statistic", to_string(r.statistic)},
           {"diagnostics", std::move(diag)}};
    if (r.cost) {
        j["cost"] = r.cost->name();
    }
    if (!r.disclaimer.empty()) {
        j["disclaimer"] = r.disclaimer;
    }
    j["has_certificate"] = r.certificate.has_value();
    return j;
}

json pcm_to_json(const PcmExistence& r) {
    json j{{"exists", r.exists},
           {"via", to_string(r.via)},
           {"slack", number_or_null(r.slack)},
           {"above_infimum_sum", number_or_null(r.above_infimum_sum)},
           {"below_supremum_sum", number_or_null(r.below_supremum_sum)},
           {"nondegenerate", r.nondegenerate}};
    if (!r.note.empty()) {
        j["note"] = r.note;
    }
    return j;
}

json sigma_cm_to_json(const SigmaCmResult& r) {
    json j{{"ok", r.ok}};
    if (r.failing_subset) {
        std::vector<std::size_t> one_based;
        for (auto i : *r.failing_subset) {
            one_based.push_back(i + 1);
        }
        j["failing_subset"] = one_based;
    }
    return j;
}

}  // namespace frechet
