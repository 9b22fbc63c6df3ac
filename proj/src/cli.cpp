#include "frechet/cli.hpp"

#include "frechet/bounds.hpp"
#include "frechet/couplings.hpp"
#include "frechet/error.hpp"
#include "frechet/io.hpp"
#include "frechet/mixability.hpp"
#include "frechet/numeric.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

namespace frechet {

using nlohmann::json;

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> restarts;
    std::optional<std::string> grid_mode;
    std::string emit_matrix;
    std::string emit_plot;
};

// Result of one command: JSON to print, an optional matrix to emit, exit code.
struct Outcome {
    json summary;
    std::optional<RearrangementMatrix> matrix;
    int code = kExitOk;
};

RaOptions ra_options(const RunConfig& c) {
    RaOptions o;
    o.restarts = c.restarts;
    o.seed = c.seed;
    o.max_sweeps = c.max_sweeps;
    o.threads = c.threads;
    return o;
}

MixOptions mix_options(const RunConfig& c) {
    MixOptions o;
    o.tolerance = c.tolerance;
    o.restarts = c.restarts;
    o.seed = c.seed;
    o.max_sweeps = c.max_sweeps;
    o.threads = c.threads;
    return o;
}

void require_margins(const RunConfig& c, std::size_t at_least = 1) {
    if (c.margins.size() < at_least) {
        throw ConfigError("config needs at least " + std::to_string(at_least) + " margin(s)");
    }
}

std::vector<QuantileGrid> grids_of(const RunConfig& c, GridMode mode) {
    std::vector<QuantileGrid> grids;
    grids.reserve(c.margins.size());
    for (const auto& m : c.margins) {
        grids.push_back(discretize(m, c.n, mode));
    }
    return grids;
}

json base_summary(const std::string& command, const RunConfig& c) {
    return json{{"command", command}, {"n", c.n}, {"d", c.margins.size()}, {"seed", c.seed}, {"restarts", c.restarts}};
}

void describe_matrix(json& j, const RearrangementMatrix& m) {
    const auto moments = population_moments(m.row_sums());
    j["row_sum_mean"] = moments.mean;
    j["row_sum_variance"] = moments.variance;
    if (m.cols() >= 2 && m.cols() <= 12) {
        j["sigma_countermonotone"] = sigma_cm_to_json(is_sigma_countermonotonic(m));
    }
}

// One column countermonotonic to the comonotone sum of the others.
RearrangementMatrix one_against_rest(std::span<const QuantileGrid> grids, std::size_t lone) {
    auto m = comonotone(grids);
    auto rest = m.row_sums_excluding(lone);
    m.assign_column(lone, oppositely_order(m.column(lone), rest));
    return m;
}

Outcome sigma_cm_coupling(const RunConfig& c, std::span<const QuantileGrid> grids, json& summary) {
    const std::size_t d = grids.size();
    std::vector<std::pair<std::string, RearrangementMatrix>> candidates;
    if (d == 2) {
        candidates.emplace_back("countermonotone", countermonotone(grids[0], grids[1]));
    }
    if (d > 2 && pcm_check(c.margins).exists) {
        try {
            candidates.emplace_back("pairwise-countermonotone", pcm_construct(c.margins, c.n));
        } catch (const Infeasible&) {
            // Grid too coarse for the blocks; other candidates remain.
        }
    }
    auto ra = ra_minimize(RearrangementMatrix::from_grids(grids), CostSpec::variance_of_sum(), ra_options(c));
    candidates.emplace_back("variance-minimizing", std::move(ra.matrix));
    for (std::size_t j = 0; j < d; ++j) {
        candidates.emplace_back("one-against-rest:" + std::to_string(j + 1), one_against_rest(grids, j));
    }
    for (auto& [name, m] : candidates) {
        if (is_sigma_countermonotonic(m).ok) {
            summary["construction"] = name;
            return {summary, std::move(m), kExitOk};
        }
    }
    throw Infeasible("no sigma-countermonotonic arrangement found at this grid resolution");
}

Outcome cmd_couple(const RunConfig& c, const std::string& kind_text) {
    require_margins(c);
    CouplingKind kind{};
    try {
        kind = parse_coupling_kind(kind_text);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    const GridMode mode = c.grid_mode.value_or(GridMode::Midpoint);
    auto summary = base_summary("couple", c);
    summary["kind"] = to_string(kind);
    summary["grid_mode"] = to_string(mode);
    const auto grids = grids_of(c, mode);

    Outcome out;
    switch (kind) {
        case CouplingKind::Comonotone:
            out.matrix = comonotone(grids);
            break;
        case CouplingKind::Countermonotone:
            if (grids.size() != 2) {
                throw Infeasible("countermonotone coupling requires exactly two margins");
            }
            out.matrix = countermonotone(grids[0], grids[1]);
            break;
        case CouplingKind::PairwiseCountermonotone: {
            const auto check = pcm_check(c.margins);
            summary["pcm"] = pcm_to_json(check);
            if (!check.exists) {
                throw Infeasible("margins admit no pairwise countermonotonic coupling");
            }
            out.matrix = pcm_construct(c.margins, c.n);
            break;
        }
        case CouplingKind::JointMix: {
            auto report = analyze_mixability(c.margins, c.n, mode, mix_options(c));
            summary["mixability"] = mix_report_to_json(report);
            if (report.verdict == Verdict::NotMixable) {
                throw Infeasible("margins are not jointly mixable");
            }
            const bool exact = report.certificate && report.residual <= c.tolerance * report.scale;
            out.matrix = std::move(report.certificate);
            out.code = exact ? kExitOk : kExitUndecided;
            break;
        }
        case CouplingKind::SigmaCountermonotone: {
            auto r = sigma_cm_coupling(c, grids, summary);
            summary = std::move(r.summary);
            out.matrix = std::move(r.matrix);
            break;
        }
    }
    if (out.matrix) {
        describe_matrix(summary, *out.matrix);
    }
    out.summary = std::move(summary);
    return out;
}

Outcome cmd_mixcheck(const RunConfig& c) {
    require_margins(c);
    const GridMode mode = c.grid_mode.value_or(GridMode::Midpoint);
    auto report = analyze_mixability(c.margins, c.n, mode, mix_options(c));
    Outcome out;
    out.summary = base_summary("mixcheck", c);
    out.summary["grid_mode"] = to_string(mode);
    out.summary["report"] = mix_report_to_json(report);
    switch (report.verdict) {
        case Verdict::Mixable: out.code = kExitOk; break;
        case Verdict::NotMixable: out.code = kExitNotMixable; break;
        case Verdict::Undecided: out.code = kExitUndecided; break;
    }
    out.matrix = std::move(report.certificate);
    return out;
}

double required(const std::optional<double>& v, const char* name) {
    if (!v) {
        throw ConfigError(std::string("config field '") + name + "' is required for this command");
    }
    return *v;
}

Outcome cmd_bounds(const RunConfig& c, const std::string& sub) {
    Outcome out;
    out.summary = base_summary("bounds", c);
    out.summary["bound"] = sub;
    VarOptions var;
    var.ra = ra_options(c);
    var.tail_mode = c.grid_mode;

    auto take = [&](BoundResult r) {
        out.summary["result"] = bound_result_to_json(r);
        out.matrix = std::move(r.certificate);
    };

    if (sub == "worst-var" || sub == "best-var") {
        const double alpha = required(c.alpha, "alpha");
        require_margins(c);
        take(sub == "worst-var" ? worst_var(c.margins, alpha, c.n, var) : best_var(c.margins, alpha, c.n, var));
    } else if (sub == "tail-prob") {
        const double k = required(c.k, "k");
        require_margins(c);
        take(tail_prob_max(c.margins, k, c.n, var));
    } else if (sub == "spearman") {
        const std::size_t d = c.d.value_or(c.margins.empty() ? 2 : c.margins.size());
        auto r = spearman_range(d, c.n, var.ra);
        out.summary["d"] = d;
        out.summary["rho_min"] = r.rho.min;
        out.summary["rho_max"] = r.rho.max;
        take(std::move(r.min_product));
    } else if (sub == "pearson") {
        if (c.margins.size() != 2) {
            throw ConfigError("pearson needs exactly two margins");
        }
        const auto r = pearson_extremes(c.margins[0], c.margins[1], c.n);
        out.summary["rho_min"] = r.min;
        out.summary["rho_max"] = r.max;
    } else if (sub == "min-product") {
        require_margins(c);
        take(min_product_expectation(grids_of(c, c.grid_mode.value_or(GridMode::Midpoint)), var.ra));
    } else if (sub == "supermodular-max") {
        require_margins(c);
        const CostSpec cost = c.cost.value_or(CostSpec::variance_of_sum());
        take(supermodular_max(grids_of(c, c.grid_mode.value_or(GridMode::Midpoint)), cost));
    } else {
        throw ConfigError("unknown bound '" + sub + "'");
    }
    return out;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(path);
    if (!f) {
        throw ConfigError("cannot open '" + path + "' for writing");
    }
    body(f);
    if (!f) {
        throw ConfigError("failed writing '" + path + "'");
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Extremal dependence and rearrangement toolkit", "frechet"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--config", flags.config_path, "JSON configuration file ('-' or absent: stdin)");
    app.add_option("--n", flags.n, "grid size (overrides config)");
    app.add_option("--seed", flags.seed, "random seed (overrides config)");
    app.add_option("--restarts", flags.restarts, "rearrangement restarts (overrides config)");
    app.add_option("--grid-mode", flags.grid_mode, "lower, upper, midpoint or shifted (overrides config)");
    app.add_option("--emit-matrix", flags.emit_matrix, "write the resulting matrix as CSV");
    app.add_option("--emit-plot", flags.emit_plot, "write rank-scatter plot data as CSV");

    std::string couple_kind;
    auto* couple = app.add_subcommand("couple", "construct a named coupling");
    couple->add_option("kind", couple_kind,
                       "comonotone, countermonotone, pairwise-countermonotone, joint-mix, sigma-countermonotone");
    couple->fallthrough();
    auto* mixcheck = app.add_subcommand("mixcheck", "analytic and numerical joint-mixability check");
    mixcheck->fallthrough();
    std::string bound_name;
    auto* bounds = app.add_subcommand("bounds", "dependence-uncertainty bounds");
    bounds
        ->add_option("which", bound_name,
                     "worst-var, best-var, tail-prob, spearman, pearson, min-product, supermodular-max")
        ->required()
        ->check(CLI::IsMember(
            {"worst-var", "best-var", "tail-prob", "spearman", "pearson", "min-product", "supermodular-max"}));
    bounds->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    RunConfig config;
    try {
        std::string text;
        std::filesystem::path base_dir;
        if (flags.config_path.empty() || flags.config_path == "-") {
            text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        } else {
            std::ifstream f(flags.config_path);
            if (!f) {
                throw ConfigError("cannot open config '" + flags.config_path + "'");
            }
            text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
            base_dir = std::filesystem::path(flags.config_path).parent_path();
        }
        config = parse_run_config_text(text, base_dir);
        if (flags.n) {
            config.n = *flags.n;
        }
        if (flags.seed) {
            config.seed = *flags.seed;
        }
        if (flags.restarts) {
            config.restarts = *flags.restarts;
        }
        if (flags.grid_mode) {
            try {
                config.grid_mode = parse_grid_mode(*flags.grid_mode);
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
        if (config.n == 0) {
            throw ConfigError("n must be positive");
        }
        if (config.restarts == 0) {
            throw ConfigError("restarts must be positive");
        }
        if (couple->parsed() && couple_kind.empty()) {
            if (!config.kind) {
                throw ConfigError("couple needs a kind (argument or config field 'kind')");
            }
            couple_kind = *config.kind;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    Outcome result;
    try {
        if (couple->parsed()) {
            result = cmd_couple(config, couple_kind);
        } else if (mixcheck->parsed()) {
            result = cmd_mixcheck(config);
        } else {
            result = cmd_bounds(config, bound_name);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const InvalidArgument& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    }

    try {
        if (!flags.emit_matrix.empty() || !flags.emit_plot.empty()) {
            if (!result.matrix) {
                throw ConfigError("this command produced no matrix to emit");
            }
            if (!flags.emit_matrix.empty()) {
                write_file(flags.emit_matrix, [&](std::ostream& os) { write_matrix_csv(os, *result.matrix); });
            }
            if (!flags.emit_plot.empty()) {
                write_file(flags.emit_plot, [&](std::ostream& os) { write_plot_csv(os, *result.matrix); });
            }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    out << result.summary.dump(2) << '\n';
    return result.code;
}

}  // namespace frechet
