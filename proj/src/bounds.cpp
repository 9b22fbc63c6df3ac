#include "frechet/bounds.hpp"

#include "frechet/couplings.hpp"
#include "frechet/error.hpp"
#include "frechet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace frechet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_supermodular(const CostSpec& cost) {
    if (cost.kind == CostKind::TailIndicator) {
        throw InvalidArgument("cost '" + cost.name() + "' is not declared supermodular");
    }
}

void require_level(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("level alpha must lie in (0,1)");
    }
}

double min_row_sum(const RearrangementMatrix& m) {
    const auto s = m.row_sums();
    return *std::min_element(s.begin(), s.end());
}

double max_row_sum(const RearrangementMatrix& m) {
    const auto s = m.row_sums();
    return *std::max_element(s.begin(), s.end());
}

// Start for a new block size: each column keeps the rank pattern of the
// cached arrangement, stretched to the new number of rows.
RearrangementMatrix resample_arrangement(const RearrangementMatrix& cached, std::span<const QuantileGrid> grids) {
    const std::size_t m_old = cached.rows();
    const std::size_t m_new = grids.front().size();
    std::vector<std::vector<double>> cols;
    cols.reserve(grids.size());
    for (std::size_t j = 0; j < grids.size(); ++j) {
        const auto old = cached.column(j);
        std::vector<std::size_t> old_order(m_old);
        std::iota(old_order.begin(), old_order.end(), std::size_t{0});
        std::stable_sort(old_order.begin(), old_order.end(),
                         [&](std::size_t a, std::size_t b) { return old[a] < old[b]; });
        std::vector<std::size_t> old_rank(m_old);
        for (std::size_t r = 0; r < m_old; ++r) {
            old_rank[old_order[r]] = r;
        }
        std::vector<std::size_t> idx(m_new);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        auto source_rank = [&](std::size_t i) { return old_rank[i * m_old / m_new]; };
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return source_rank(a) < source_rank(b); });
        std::vector<double> sorted = grids[j].values;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> col(m_new);
        for (std::size_t k = 0; k < m_new; ++k) {
            col[idx[k]] = sorted[k];
        }
        cols.push_back(std::move(col));
    }
    return RearrangementMatrix(std::move(cols));
}

enum class Tail { Upper, Lower };

struct TailRun {
    RaResult ra;
    double value = 0.0;
};

TailRun run_tail(std::span<const Margin> margins, double alpha, std::size_t n, GridMode mode, Tail tail,
                 const RaOptions& ra, const RearrangementMatrix* warm) {
    const double mass = tail == Tail::Upper ? 1.0 - alpha : alpha;
    const std::size_t m = tail_rows(mass, n);
    if (m < 2) {
        throw InvalidArgument("reduced tail block has fewer than 2 rows; choose alpha farther from the boundary or a larger n");
    }
    std::vector<QuantileGrid> grids;
    grids.reserve(margins.size());
    for (const auto& margin : margins) {
        grids.push_back(tail == Tail::Upper ? discretize_interval(margin, m, mode, alpha, 1.0)
                                            : discretize_interval(margin, m, mode, 0.0, alpha));
    }
    TailRun run;
    if (warm != nullptr && warm->cols() == grids.size()) {
        RaOptions warm_opts = ra;
        warm_opts.keep_initial = true;
        warm_opts.restarts = 1;
        run.ra = ra_minimize(resample_arrangement(*warm, grids), CostSpec::variance_of_sum(), warm_opts);
    } else {
        run.ra = ra_minimize(RearrangementMatrix::from_grids(grids), CostSpec::variance_of_sum(), ra);
    }
    run.value = tail == Tail::Upper ? min_row_sum(run.ra.matrix) : max_row_sum(run.ra.matrix);
    return run;
}

BoundResult tail_bound(std::span<const Margin> margins, double alpha, std::size_t n, const VarOptions& opts, Tail tail,
                       const RearrangementMatrix* warm) {
    require_level(alpha);
    if (margins.empty()) {
        throw InvalidArgument("need at least one margin");
    }
    const GridMode primary = opts.tail_mode.value_or(tail == Tail::Upper ? GridMode::Lower : GridMode::Upper);
    auto run = run_tail(margins, alpha, n, primary, tail, opts.ra, warm);

    BoundResult r;
    r.value = run.value;
    r.side = tail == Tail::Upper ? BoundSide::Upper : BoundSide::Lower;
    r.method = BoundMethod::RaReducedTail;
    r.grid_n = n;
    r.grid_mode = primary;
    r.statistic = tail == Tail::Upper ? Statistic::MinRowSum : Statistic::MaxRowSum;
    r.diagnostics["alpha"] = alpha;
    r.diagnostics["tail_rows"] = static_cast<double>(run.ra.matrix.rows());
    r.diagnostics["tail_variance"] = run.ra.objective;
    r.diagnostics["sweeps"] = static_cast<double>(run.ra.sweeps_used);
    r.diagnostics["restart_index"] = static_cast<double>(run.ra.restart_index);
    r.diagnostics[std::string("bracket_") + std::string(to_string(primary))] = run.value;
    if (opts.bracket && warm == nullptr) {
        const GridMode other = primary == GridMode::Lower ? GridMode::Upper : GridMode::Lower;
        if (primary == GridMode::Lower || primary == GridMode::Upper) {
            try {
                const auto alt = run_tail(margins, alpha, n, other, tail, opts.ra, nullptr);
                r.diagnostics[std::string("bracket_") + std::string(to_string(other))] = alt.value;
            } catch (const InvalidArgument&) {
                // Opposite mode reaches an unbounded quantile; no bracket on that side.
            }
        }
    }
    r.certificate = std::move(run.ra.matrix);
    return r;
}

}  // namespace

std::string_view to_string(BoundSide s) {
    return s == BoundSide::Upper ? "upper" : "lower";
}

std::string_view to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::AnalyticComonotone: return "analytic_comonotone";
        case BoundMethod::AnalyticCountermonotone: return "analytic_countermonotone";
        case BoundMethod::RaReducedTail: return "ra_reduced_tail";
        case BoundMethod::RaFull: return "ra_full";
    }
    return "unknown";
}

std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::Objective: return "objective";
        case Statistic::MinRowSum: return "min_row_sum";
        case Statistic::MaxRowSum: return "max_row_sum";
        case Statistic::None: return "none";
    }
    return "unknown";
}

double reevaluate(const BoundResult& result) {
    if (!result.certificate) {
        throw InvalidArgument("reevaluate: result carries no certificate");
    }
    switch (result.statistic) {
        case Statistic::Objective:
            if (!result.cost) {
                throw InvalidArgument("reevaluate: objective statistic without a cost");
            }
            return evaluate(*result.certificate, *result.cost);
        case Statistic::MinRowSum: return min_row_sum(*result.certificate);
        case Statistic::MaxRowSum: return max_row_sum(*result.certificate);
        case Statistic::None: break;
    }
    throw InvalidArgument("reevaluate: value is not a statistic of the certificate");
}

Envelope frechet_envelope(std::span<const Margin> margins, std::span<const double> x) {
    if (margins.size() != x.size() || margins.empty()) {
        throw InvalidArgument("frechet_envelope: need one coordinate per margin");
    }
    ExactSum total;
    double upper = 1.0;
    for (std::size_t j = 0; j < margins.size(); ++j) {
        const double f = margins[j].cdf(x[j]);
        total.add(f);
        upper = std::min(upper, f);
    }
    total.add(-static_cast<double>(margins.size()) + 1.0);
    return {std::max(total.value(), 0.0), upper};
}

BoundResult supermodular_max(std::span<const QuantileGrid> grids, const CostSpec& cost) {
    require_supermodular(cost);
    auto ra = ra_maximize_supermodular(grids, cost);
    BoundResult r;
    r.value = ra.objective;
    r.side = BoundSide::Upper;
    r.method = BoundMethod::AnalyticComonotone;
    r.grid_n = grids.front().size();
    r.grid_mode = grids.front().mode;
    r.statistic = Statistic::Objective;
    r.cost = cost;
    r.certificate = std::move(ra.matrix);
    return r;
}

BoundResult supermodular_min_d2(std::span<const QuantileGrid> grids, const CostSpec& cost) {
    if (grids.size() != 2) {
        throw InvalidArgument("supermodular_min_d2: exactly two margins required; use supermodular_min_ra for d > 2");
    }
    require_supermodular(cost);
    if (cost.kind == CostKind::Product) {
        for (const auto& g : grids) {
            if (std::any_of(g.values.begin(), g.values.end(), [](double v) { return v < 0.0; })) {
                throw InvalidArgument("supermodular_min_d2: product is supermodular only on nonnegative data");
            }
        }
    }
    auto m = countermonotone(grids[0], grids[1]);
    BoundResult r;
    r.value = evaluate(m, cost);
    r.side = BoundSide::Lower;
    r.method = BoundMethod::AnalyticCountermonotone;
    r.grid_n = grids.front().size();
    r.grid_mode = grids.front().mode;
    r.statistic = Statistic::Objective;
    r.cost = cost;
    r.certificate = std::move(m);
    return r;
}

BoundResult supermodular_min_ra(std::span<const QuantileGrid> grids, const CostSpec& cost, const RaOptions& opts) {
    require_supermodular(cost);
    CostSpec minimize = cost;
    minimize.direction = Direction::Minimize;
    auto ra = ra_minimize(RearrangementMatrix::from_grids(grids), minimize, opts);
    BoundResult r;
    r.value = ra.objective;
    r.side = BoundSide::Lower;
    r.method = BoundMethod::RaFull;
    r.grid_n = grids.front().size();
    r.grid_mode = grids.front().mode;
    r.statistic = Statistic::Objective;
    r.cost = minimize;
    r.diagnostics["sweeps"] = static_cast<double>(ra.sweeps_used);
    r.diagnostics["restart_index"] = static_cast<double>(ra.restart_index);
    r.diagnostics["converged"] = ra.converged ? 1.0 : 0.0;
    if (grids.size() > 2) {
        r.disclaimer = "heuristic: rearrangement fixed point, not a certified global minimum for d > 2";
    }
    r.certificate = std::move(ra.matrix);
    return r;
}

std::size_t tail_rows(double mass, std::size_t n) {
    const double exact = mass * static_cast<double>(n);
    // Absorb representation error in (1 - alpha) * n before rounding up.
    return static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
}

BoundResult worst_var(std::span<const Margin> margins, double alpha, std::size_t n, const VarOptions& opts) {
    return tail_bound(margins, alpha, n, opts, Tail::Upper, nullptr);
}

BoundResult best_var(std::span<const Margin> margins, double alpha, std::size_t n, const VarOptions& opts) {
    return tail_bound(margins, alpha, n, opts, Tail::Lower, nullptr);
}

BoundResult tail_prob_max(std::span<const Margin> margins, double k, std::size_t n, const VarOptions& opts) {
    if (margins.empty()) {
        throw InvalidArgument("tail_prob_max: need at least one margin");
    }
    if (n < 2) {
        throw InvalidArgument("tail_prob_max: n must be at least 2");
    }
    ExactSum lowest;
    ExactSum highest;
    for (const auto& m : margins) {
        const auto s = m.summary();
        lowest.add(s.lower);
        highest.add(s.upper);
    }
    BoundResult r;
    r.side = BoundSide::Upper;
    r.method = BoundMethod::RaReducedTail;
    r.grid_n = n;
    r.grid_mode = opts.tail_mode.value_or(GridMode::Lower);
    r.statistic = Statistic::None;
    r.diagnostics["k"] = k;
    if (k <= lowest.value()) {
        r.value = 1.0;
        r.diagnostics["alpha"] = 0.0;
        return r;
    }
    if (k > highest.value()) {
        r.value = 0.0;
        r.diagnostics["alpha"] = 1.0;
        return r;
    }

    VarOptions inner = opts;
    inner.bracket = false;
    std::map<double, RearrangementMatrix> cache;
    auto reaches = [&](double alpha) {
        const RearrangementMatrix* warm = nullptr;
        if (!cache.empty()) {
            auto it = cache.lower_bound(alpha);
            if (it == cache.end() || (it != cache.begin() && alpha - std::prev(it)->first < it->first - alpha)) {
                --it;
            }
            warm = &it->second;
        }
        auto bound = tail_bound(margins, alpha, n, inner, Tail::Upper, warm);
        const bool hit = bound.value >= k;
        cache.emplace(alpha, std::move(*bound.certificate));
        return std::pair{hit, bound.value};
    };

    // worst_var is nondecreasing in alpha; locate the smallest level reaching k.
    double lo = 0.0;
    double hi = 1.0 - 2.0 / static_cast<double>(n);
    auto [top_hit, top_value] = reaches(hi);
    double value_at_hi = top_value;
    if (!top_hit) {
        r.value = 1.0 - hi;
        r.diagnostics["alpha"] = hi;
        r.diagnostics["worst_var_at_alpha"] = top_value;
        r.diagnostics["below_grid_resolution"] = 1.0;
        return r;
    }
    for (int step = 0; step < 40; ++step) {
        const double mid = 0.5 * (lo + hi);
        const auto [hit, value] = reaches(mid);
        if (hit) {
            hi = mid;
            value_at_hi = value;
        } else {
            lo = mid;
        }
    }
    r.value = 1.0 - hi;
    r.diagnostics["alpha"] = hi;
    r.diagnostics["worst_var_at_alpha"] = value_at_hi;
    return r;
}

BoundResult min_product_expectation(std::span<const QuantileGrid> grids, const RaOptions& opts) {
    if (grids.empty()) {
        throw InvalidArgument("min_product_expectation: need at least one grid");
    }
    for (const auto& g : grids) {
        if (std::any_of(g.values.begin(), g.values.end(), [](double v) { return !(v > 0.0); })) {
            throw InvalidArgument("min_product_expectation: grids must be strictly positive");
        }
    }
    auto ra = ra_minimize(RearrangementMatrix::from_grids(grids), CostSpec::product(), opts);
    BoundResult r;
    r.value = ra.objective;
    r.side = BoundSide::Lower;
    r.method = BoundMethod::RaFull;
    r.grid_n = grids.front().size();
    r.grid_mode = grids.front().mode;
    r.statistic = Statistic::Objective;
    r.cost = CostSpec::product();
    r.diagnostics["sweeps"] = static_cast<double>(ra.sweeps_used);
    r.diagnostics["restart_index"] = static_cast<double>(ra.restart_index);
    if (grids.size() > 2) {
        r.disclaimer = "heuristic: rearrangement fixed point, not a certified global minimum for d > 2";
    }
    r.certificate = std::move(ra.matrix);
    return r;
}

CorrelationRange spearman_extremes(std::size_t d, double min_product_value) {
    if (d < 2) {
        throw InvalidArgument("spearman_extremes: d must be at least 2");
    }
    const double dd = static_cast<double>(d);
    const double base = std::ldexp(1.0, -static_cast<int>(d));
    const double factor = (dd + 1.0) / (1.0 - (dd + 1.0) * base);
    return {factor * (min_product_value - base), 1.0};
}

SpearmanResult spearman_range(std::size_t d, std::size_t n, const RaOptions& opts) {
    if (d < 2) {
        throw InvalidArgument("spearman_range: d must be at least 2");
    }
    const auto u = discretize(Margin::uniform(0.0, 1.0), n, GridMode::Midpoint);
    const std::vector<QuantileGrid> grids(d, u);
    SpearmanResult out;
    out.min_product = min_product_expectation(grids, opts);
    out.rho = spearman_extremes(d, out.min_product.value);
    return out;
}

CorrelationRange pearson_extremes(const Margin& first, const Margin& second, std::size_t n) {
    for (const Margin* m : {&first, &second}) {
        const auto s = m->summary();
        if (!s.sd || !std::isfinite(*s.sd) || *s.sd == 0.0) {
            throw InvalidArgument("pearson_extremes: " + m->describe() + " needs finite nonzero variance");
        }
    }
    const auto g1 = discretize(first, n, GridMode::Midpoint);
    const auto g2 = discretize(second, n, GridMode::Midpoint);
    const auto m1 = population_moments(g1.values);
    const auto m2 = population_moments(g2.values);
    if (m1.variance == 0.0 || m2.variance == 0.0) {
        throw InvalidArgument("pearson_extremes: grid has zero variance; increase n");
    }
    auto correlation = [&](const RearrangementMatrix& m) {
        ExactSum cov;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            cov.add((m.at(i, 0) - m1.mean) * (m.at(i, 1) - m2.mean));
        }
        return cov.value() / static_cast<double>(m.rows()) / std::sqrt(m1.variance * m2.variance);
    };
    const std::vector<QuantileGrid> pair{g1, g2};
    return {correlation(countermonotone(g1, g2)), correlation(comonotone(pair))};
}

}  // namespace frechet
