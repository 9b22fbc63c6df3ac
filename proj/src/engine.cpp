#include "frechet/engine.hpp"

#include "frechet/error.hpp"
#include "frechet/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace frechet {

namespace {

std::vector<std::vector<double>> sorted_copy(const std::vector<std::vector<double>>& columns) {
    auto out = columns;
    for (auto& c : out) {
        std::sort(c.begin(), c.end());
    }
    return out;
}

bool same_multiset(std::span<const double> values, std::span<const double> sorted_reference) {
    if (values.size() != sorted_reference.size()) {
        return false;
    }
    std::vector<double> tmp(values.begin(), values.end());
    std::sort(tmp.begin(), tmp.end());
    return std::equal(tmp.begin(), tmp.end(), sorted_reference.begin());
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw InvalidArgument(std::string(what) + ": length mismatch");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// RearrangementMatrix
// ---------------------------------------------------------------------------

RearrangementMatrix::RearrangementMatrix(std::vector<std::vector<double>> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) {
        throw InvalidArgument("rearrangement matrix needs at least one column");
    }
    rows_ = columns_.front().size();
    if (rows_ == 0) {
        throw InvalidArgument("rearrangement matrix needs at least one row");
    }
    for (const auto& c : columns_) {
        if (c.size() != rows_) {
            throw InvalidArgument("rearrangement matrix columns must share n");
        }
        for (double v : c) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("rearrangement matrix entries must be finite");
            }
        }
    }
    provenance_ = std::make_shared<const std::vector<std::vector<double>>>(sorted_copy(columns_));
}

RearrangementMatrix RearrangementMatrix::from_grids(std::span<const QuantileGrid> grids) {
    std::vector<std::vector<double>> cols;
    cols.reserve(grids.size());
    for (const auto& g : grids) {
        cols.push_back(g.values);
    }
    return RearrangementMatrix(std::move(cols));
}

std::vector<double> RearrangementMatrix::row_sums() const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        ExactSum acc;
        for (const auto& c : columns_) {
            acc.add(c[i]);
        }
        out[i] = acc.value();
    }
    return out;
}

std::vector<double> RearrangementMatrix::row_sums_excluding(std::size_t skip) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        ExactSum acc;
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (j != skip) {
                acc.add(columns_[j][i]);
            }
        }
        out[i] = acc.value();
    }
    return out;
}

std::vector<double> RearrangementMatrix::row_sums_over(std::span<const std::size_t> subset) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        ExactSum acc;
        for (std::size_t j : subset) {
            acc.add(columns_.at(j)[i]);
        }
        out[i] = acc.value();
    }
    return out;
}

void RearrangementMatrix::assign_column(std::size_t j, std::vector<double> values) {
    assert(same_multiset(values, provenance_->at(j)));
    if (values.size() != rows_) {
        throw InvalidArgument("assign_column: length mismatch");
    }
    columns_.at(j) = std::move(values);
}

void RearrangementMatrix::permute_column(std::size_t j, std::span<const std::size_t> order) {
    if (order.size() != rows_) {
        throw InvalidArgument("permute_column: length mismatch");
    }
    const auto& old = columns_.at(j);
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        out[i] = old.at(order[i]);
    }
    columns_[j] = std::move(out);
}

bool RearrangementMatrix::preserves_provenance() const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (!same_multiset(columns_[j], provenance_->at(j))) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

CostSpec CostSpec::variance_of_sum(Direction d) {
    CostSpec c;
    c.kind = CostKind::VarianceOfSum;
    c.direction = d;
    c.label = "variance";
    return c;
}

CostSpec CostSpec::convex_of_sum(std::function<double(double)> f, std::string label, Direction d) {
    if (!f) {
        throw InvalidArgument("convex_of_sum: empty function handle");
    }
    CostSpec c;
    c.kind = CostKind::ConvexOfSum;
    c.direction = d;
    c.convex = std::move(f);
    c.label = std::move(label);
    return c;
}

CostSpec CostSpec::stop_loss(double strike, Direction d) {
    auto c = convex_of_sum([strike](double s) { return std::max(s - strike, 0.0); }, "stop-loss", d);
    c.threshold = strike;
    return c;
}

CostSpec CostSpec::product(Direction d) {
    CostSpec c;
    c.kind = CostKind::Product;
    c.direction = d;
    c.label = "product";
    return c;
}

CostSpec CostSpec::tail_indicator(double k, Direction d) {
    CostSpec c;
    c.kind = CostKind::TailIndicator;
    c.direction = d;
    c.threshold = k;
    c.label = "tail-indicator";
    return c;
}

std::string CostSpec::name() const {
    return label.empty() ? "cost" : label;
}

double evaluate(const RearrangementMatrix& matrix, const CostSpec& cost) {
    const auto n = static_cast<double>(matrix.rows());
    switch (cost.kind) {
        case CostKind::VarianceOfSum:
            return population_moments(matrix.row_sums()).variance;
        case CostKind::ConvexOfSum: {
            ExactSum acc;
            for (double s : matrix.row_sums()) {
                acc.add(cost.convex(s));
            }
            return acc.value() / n;
        }
        case CostKind::Product: {
            ExactSum acc;
            for (std::size_t i = 0; i < matrix.rows(); ++i) {
                double p = 1.0;
                for (std::size_t j = 0; j < matrix.cols(); ++j) {
                    p *= matrix.at(i, j);
                }
                acc.add(p);
            }
            return acc.value() / n;
        }
        case CostKind::TailIndicator: {
            const auto sums = matrix.row_sums();
            const auto hits = std::count_if(sums.begin(), sums.end(), [&](double s) { return s >= cost.threshold; });
            return static_cast<double>(hits) / n;
        }
    }
    throw InvalidArgument("evaluate: unknown cost");
}

bool spot_check_convexity(const CostSpec& cost, double lo, double hi, std::uint64_t seed, std::size_t samples) {
    if (cost.kind != CostKind::ConvexOfSum) {
        return true;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pick(lo, hi);
    for (std::size_t k = 0; k < samples; ++k) {
        const double a = pick(rng);
        const double b = pick(rng);
        const double fa = cost.convex(a);
        const double fb = cost.convex(b);
        const double fm = cost.convex(0.5 * (a + b));
        const double scale = std::max({1.0, std::fabs(fa), std::fabs(fb)});
        if (fm > 0.5 * (fa + fb) + 1e-12 * scale) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Ordering primitives
// ---------------------------------------------------------------------------

std::vector<double> oppositely_order(std::span<const double> column, std::span<const double> anchor) {
    require_same_length(column.size(), anchor.size(), "oppositely_order");
    const std::size_t n = column.size();
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (anchor[a] != anchor[b]) {
            return anchor[a] < anchor[b];
        }
        return a > b;
    });
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[idx[k]] = sorted[n - 1 - k];
    }
    return out;
}

bool is_countermonotonic(std::span<const double> x, std::span<const double> y, double tolerance) {
    require_same_length(x.size(), y.size(), "is_countermonotonic");
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    // For each point, every point with clearly smaller x must have y not
    // clearly smaller; track the running minimum of y over that prefix.
    double min_y = std::numeric_limits<double>::infinity();
    std::size_t p = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = idx[k];
        while (p < k && x[idx[p]] < x[j] - tolerance) {
            min_y = std::min(min_y, y[idx[p]]);
            ++p;
        }
        if (y[j] - min_y > tolerance) {
            return false;
        }
    }
    return true;
}

SigmaCmResult is_sigma_countermonotonic(const RearrangementMatrix& matrix, double relative_tolerance) {
    const std::size_t d = matrix.cols();
    if (d > 20) {
        throw InvalidArgument("is_sigma_countermonotonic: d > 20 is not supported");
    }
    SigmaCmResult result;
    if (d < 2) {
        return result;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            row += std::fabs(matrix.at(i, j));
        }
        scale = std::max(scale, row);
    }
    const double tol = relative_tolerance * scale;
    // Splits whose representative omits the last column cover every {I, I^c} once.
    const std::uint32_t limit = 1U << (d - 1);
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
        std::vector<std::size_t> in;
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < d; ++j) {
            ((mask >> j) & 1U ? in : out).push_back(j);
        }
        const auto a = matrix.row_sums_over(in);
        const auto b = matrix.row_sums_over(out);
        if (!is_countermonotonic(a, b, tol)) {
            result.ok = false;
            result.failing_subset = std::move(in);
            return result;
        }
    }
    return result;
}

ConvexOrder convex_order_leq(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size(), "convex_order_leq");
    const std::size_t n = a.size();
    if (n == 0) {
        return ConvexOrder::LessOrEqual;
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    double abs_a = 0.0;
    double abs_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        abs_a += std::fabs(sa[i]);
        abs_b += std::fabs(sb[i]);
    }
    const double scale = std::max({abs_a, abs_b, std::numeric_limits<double>::min()});
    const double tol = 1e-9 * scale;
    if (std::fabs(exact_sum(sa) - exact_sum(sb)) > tol) {
        return ConvexOrder::NotLessOrEqual;
    }

    // suffix[i] = sum of sorted[i..n)
    auto suffix_sums = [n](const std::vector<double>& s) {
        std::vector<double> out(n + 1, 0.0);
        ExactSum acc;
        for (std::size_t i = n; i-- > 0;) {
            acc.add(s[i]);
            out[i] = acc.value();
        }
        return out;
    };
    const auto suf_a = suffix_sums(sa);
    const auto suf_b = suffix_sums(sb);
    auto stop_loss = [n](const std::vector<double>& s, const std::vector<double>& suf, double t) {
        const auto first = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), t) - s.begin());
        return suf[first] - static_cast<double>(n - first) * t;
    };

    std::vector<double> thresholds;
    thresholds.reserve(2 * n);
    std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    for (double t : thresholds) {
        if (stop_loss(sa, suf_a, t) > stop_loss(sb, suf_b, t) + tol) {
            return ConvexOrder::NotLessOrEqual;
        }
    }
    return ConvexOrder::LessOrEqual;
}

bool local_opt_check(const RearrangementMatrix& matrix) {
    if (matrix.cols() < 2) {
        return true;
    }
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (!is_countermonotonic(matrix.column(j), matrix.row_sums_excluding(j))) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Rearrangement Algorithm
// ---------------------------------------------------------------------------

namespace {

struct RestartOutcome {
    RearrangementMatrix matrix;
    double objective = 0.0;
    std::size_t sweeps = 0;
    bool converged = false;
    std::vector<double> trace;
};

RestartOutcome run_restart(RearrangementMatrix m, const CostSpec& cost, const RaOptions& opts, std::size_t restart) {
    const std::size_t d = m.cols();
    if (!(opts.keep_initial && restart == 0)) {
        std::mt19937_64 rng(mix_seed(opts.seed, restart));
        // Column 0 stays fixed: only relative arrangements matter.
        for (std::size_t j = 1; j < d; ++j) {
            std::vector<double> col(m.column(j).begin(), m.column(j).end());
            std::shuffle(col.begin(), col.end(), rng);
            m.assign_column(j, std::move(col));
        }
    }
    RestartOutcome out;
    double current = evaluate(m, cost);
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        bool changed = false;
        for (std::size_t j = 0; j < d; ++j) {
            const auto anchor = m.row_sums_excluding(j);
            if (!is_countermonotonic(m.column(j), anchor)) {
                m.assign_column(j, oppositely_order(m.column(j), anchor));
                changed = true;
            }
        }
        ++out.sweeps;
        const double next = evaluate(m, cost);
        const double slack = 1e-12 * std::max(1.0, std::fabs(current));
        if (next > current + slack) {
            throw std::logic_error("rearrangement sweep increased the objective");
        }
        out.trace.push_back(next);
        const double improvement = current - next;
        current = next;
        if (!changed) {
            out.converged = true;
            break;
        }
        if (opts.stall_tolerance > 0.0 && improvement <= opts.stall_tolerance * std::max(1.0, std::fabs(current))) {
            break;
        }
    }
    out.objective = current;
    out.matrix = std::move(m);
    return out;
}

std::vector<RestartOutcome> run_all_restarts(const RearrangementMatrix& start, const CostSpec& cost,
                                             const RaOptions& opts) {
    const std::size_t restarts = opts.restarts;
    std::vector<RestartOutcome> outcomes(restarts);
    unsigned workers = opts.threads == 0 ? default_thread_count() : opts.threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, restarts));
    if (workers <= 1) {
        for (std::size_t r = 0; r < restarts; ++r) {
            outcomes[r] = run_restart(start, cost, opts, r);
        }
        return outcomes;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t r = next++; r < restarts; r = next++) {
                        outcomes[r] = run_restart(start, cost, opts, r);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return outcomes;
}

std::size_t best_index(const std::vector<double>& objectives) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < objectives.size(); ++r) {
        if (objectives[r] < objectives[best]) {
            best = r;
        }
    }
    return best;
}

RaResult to_result(RestartOutcome&& o, std::size_t index) {
    RaResult r;
    r.matrix = std::move(o.matrix);
    r.objective = o.objective;
    r.sweeps_used = o.sweeps;
    r.restart_index = index;
    r.converged = o.converged;
    r.trace = std::move(o.trace);
    return r;
}

// Rebuild a column of `original` values following the ranks of `ranked`,
// a monotone image of the same multiset.
std::vector<double> remap_by_rank(std::span<const double> original, std::span<const double> ranked) {
    const std::size_t n = original.size();
    std::vector<double> sorted(original.begin(), original.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ranked[a] < ranked[b]; });
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[idx[k]] = sorted[k];
    }
    return out;
}

RaResult product_minimize(const RearrangementMatrix& start, const RaOptions& opts) {
    std::vector<std::vector<double>> logs;
    logs.reserve(start.cols());
    for (const auto& col : start.columns()) {
        std::vector<double> l(col.size());
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (!(col[i] > 0.0)) {
                throw InvalidArgument("product minimization needs strictly positive entries");
            }
            l[i] = std::log(col[i]);
        }
        logs.push_back(std::move(l));
    }
    const RearrangementMatrix log_start(std::move(logs));
    const CostSpec truth = CostSpec::product();

    auto back_to_original = [&](const RearrangementMatrix& log_matrix) {
        RearrangementMatrix m = start;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            m.assign_column(j, remap_by_rank(start.column(j), log_matrix.column(j)));
        }
        return m;
    };

    // Variance surrogate and exp-of-sum (the product itself) on the log scale;
    // each restart is scored by the true product on the original values.
    const CostSpec routes[] = {
        CostSpec::variance_of_sum(),
        CostSpec::convex_of_sum([](double s) { return std::exp(s); }, "exp-of-sum"),
    };
    std::optional<RaResult> best;
    for (const auto& route : routes) {
        auto outcomes = run_all_restarts(log_start, route, opts);
        std::vector<double> objectives(outcomes.size());
        std::vector<RearrangementMatrix> mapped;
        mapped.reserve(outcomes.size());
        for (std::size_t r = 0; r < outcomes.size(); ++r) {
            mapped.push_back(back_to_original(outcomes[r].matrix));
            objectives[r] = evaluate(mapped.back(), truth);
        }
        const std::size_t k = best_index(objectives);
        if (!best || objectives[k] < best->objective) {
            RaResult r = to_result(std::move(outcomes[k]), k);
            r.matrix = std::move(mapped[k]);
            r.objective = objectives[k];
            best = std::move(r);
        }
    }
    return std::move(*best);
}

}  // namespace

RaResult ra_minimize(const RearrangementMatrix& start, const CostSpec& cost, const RaOptions& opts) {
    if (opts.restarts == 0 || opts.max_sweeps == 0) {
        throw InvalidArgument("ra_minimize: restarts and max_sweeps must be positive");
    }
    if (cost.direction != Direction::Minimize) {
        throw InvalidArgument("ra_minimize: cost must be a minimization");
    }
    if (cost.kind == CostKind::TailIndicator) {
        throw InvalidArgument("ra_minimize: tail indicators are handled by the bounds module");
    }
    if (start.cols() == 1) {
        RaResult r;
        r.matrix = start;
        r.objective = evaluate(start, cost.kind == CostKind::Product ? CostSpec::product() : cost);
        r.converged = true;
        r.trace = {r.objective};
        return r;
    }
    if (cost.kind == CostKind::Product) {
        return product_minimize(start, opts);
    }
    auto outcomes = run_all_restarts(start, cost, opts);
    std::vector<double> objectives(outcomes.size());
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        objectives[r] = outcomes[r].objective;
    }
    const std::size_t k = best_index(objectives);
    return to_result(std::move(outcomes[k]), k);
}

RaResult ra_maximize_supermodular(const RearrangementMatrix& matrix, const CostSpec& cost) {
    if (cost.kind == CostKind::TailIndicator) {
        throw InvalidArgument("ra_maximize_supermodular: tail indicator is not a declared-supermodular cost");
    }
    if (cost.kind == CostKind::Product) {
        for (const auto& col : matrix.columns()) {
            if (std::any_of(col.begin(), col.end(), [](double v) { return v < 0.0; })) {
                throw InvalidArgument("ra_maximize_supermodular: product is supermodular only on nonnegative data");
            }
        }
    }
    RearrangementMatrix m = matrix;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        std::vector<double> col(m.column(j).begin(), m.column(j).end());
        std::sort(col.begin(), col.end());
        m.assign_column(j, std::move(col));
    }
    RaResult r;
    r.objective = evaluate(m, cost);
    r.matrix = std::move(m);
    r.converged = true;
    r.trace = {r.objective};
    return r;
}

RaResult ra_maximize_supermodular(std::span<const QuantileGrid> grids, const CostSpec& cost) {
    return ra_maximize_supermodular(RearrangementMatrix::from_grids(grids), cost);
}

}  // namespace frechet
