#include "frechet/marginals.hpp"

#include "frechet/error.hpp"
#include "frechet/numeric.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace frechet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_quantile(double u) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, u);
}

double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw InvalidArgument(what);
    }
}

bool finite_positive(double v) {
    return std::isfinite(v) && v > 0.0;
}

// Index (0-based) of the atom hit by level u for N equal atoms: the smallest
// k >= 1 with k/N >= u, minus one.
std::size_t atom_index(double u, std::size_t count) {
    const auto n = static_cast<double>(count);
    auto k = static_cast<std::size_t>(std::ceil(u * n));
    k = std::clamp<std::size_t>(k, 1, count);
    while (k > 1 && static_cast<double>(k - 1) / n >= u) {
        --k;
    }
    while (k < count && static_cast<double>(k) / n < u) {
        ++k;
    }
    return k - 1;
}

}  // namespace

std::string_view to_string(Family f) {
    switch (f) {
        case Family::Uniform: return "uniform";
        case Family::Normal: return "normal";
        case Family::Pareto: return "pareto";
        case Family::Exponential: return "exponential";
        case Family::Lognormal: return "lognormal";
        case Family::Cauchy: return "cauchy";
        case Family::Binomial: return "binomial";
        case Family::DiscreteUniform: return "discrete_uniform";
        case Family::Empirical: return "empirical";
    }
    return "unknown";
}

Margin Margin::uniform(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform: need finite a < b");
    return Margin(Family::Uniform, {a, b});
}

Margin Margin::normal(double mu, double sigma) {
    require(std::isfinite(mu) && finite_positive(sigma), "normal: need finite mu and sigma > 0");
    return Margin(Family::Normal, {mu, sigma});
}

Margin Margin::pareto(double theta) {
    require(finite_positive(theta), "pareto: need theta > 0");
    return Margin(Family::Pareto, {theta});
}

Margin Margin::exponential(double lambda) {
    require(finite_positive(lambda), "exponential: need lambda > 0");
    return Margin(Family::Exponential, {lambda});
}

Margin Margin::lognormal(double mu, double sigma) {
    require(std::isfinite(mu) && finite_positive(sigma), "lognormal: need finite mu and sigma > 0");
    return Margin(Family::Lognormal, {mu, sigma});
}

Margin Margin::cauchy(double loc, double scale) {
    require(std::isfinite(loc) && finite_positive(scale), "cauchy: need finite loc and scale > 0");
    return Margin(Family::Cauchy, {loc, scale});
}

Margin Margin::binomial(int trials, double p) {
    require(trials >= 1, "binomial: need at least one trial");
    require(p >= 0.0 && p <= 1.0, "binomial: need 0 <= p <= 1");
    Margin m(Family::Binomial, {static_cast<double>(trials), p});
    const boost::math::binomial_distribution<double> dist(trials, p);
    std::vector<double> cumulative(static_cast<std::size_t>(trials) + 1);
    ExactSum acc;
    for (int k = 0; k <= trials; ++k) {
        acc.add(boost::math::pdf(dist, k));
        cumulative[static_cast<std::size_t>(k)] = std::min(acc.value(), 1.0);
    }
    cumulative.back() = 1.0;
    m.table_ = std::make_shared<const std::vector<double>>(std::move(cumulative));
    return m;
}

Margin Margin::discrete_uniform(std::vector<double> points) {
    require(!points.empty(), "discrete_uniform: need at least one point");
    require(std::all_of(points.begin(), points.end(), [](double v) { return std::isfinite(v); }),
            "discrete_uniform: points must be finite");
    std::sort(points.begin(), points.end());
    Margin m(Family::DiscreteUniform, {});
    m.table_ = std::make_shared<const std::vector<double>>(std::move(points));
    return m;
}

Margin Margin::empirical(std::vector<double> sample) {
    require(!sample.empty(), "empirical: sample must be nonempty");
    require(std::all_of(sample.begin(), sample.end(), [](double v) { return std::isfinite(v); }),
            "empirical: sample values must be finite");
    std::sort(sample.begin(), sample.end());
    Margin m(Family::Empirical, {});
    m.table_ = std::make_shared<const std::vector<double>>(std::move(sample));
    return m;
}

std::span<const double> Margin::points() const {
    if (family_ != Family::DiscreteUniform && family_ != Family::Empirical) {
        return {};
    }
    return *table_;
}

double Margin::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw InvalidArgument("quantile: probability outside [0,1]");
    }
    switch (family_) {
        case Family::Uniform: {
            const double a = params_[0];
            const double b = params_[1];
            if (u == 1.0) {
                return b;
            }
            return a + u * (b - a);
        }
        case Family::Normal:
            if (u == 0.0) return -kInf;
            if (u == 1.0) return kInf;
            return params_[0] + params_[1] * std_normal_quantile(u);
        case Family::Pareto:
            if (u == 1.0) return kInf;
            return std::expm1(-std::log1p(-u) / params_[0]);
        case Family::Exponential:
            if (u == 1.0) return kInf;
            return -std::log1p(-u) / params_[0];
        case Family::Lognormal:
            if (u == 0.0) return 0.0;
            if (u == 1.0) return kInf;
            return std::exp(params_[0] + params_[1] * std_normal_quantile(u));
        case Family::Cauchy:
            if (u == 0.0) return -kInf;
            if (u == 1.0) return kInf;
            return params_[0] + params_[1] * std::tan(std::numbers::pi * (u - 0.5));
        case Family::Binomial: {
            const auto& cum = *table_;
            if (u == 0.0) {
                const auto it = std::find_if(cum.begin(), cum.end(), [](double c) { return c > 0.0; });
                return static_cast<double>(it - cum.begin());
            }
            const auto it = std::lower_bound(cum.begin(), cum.end(), u);
            return static_cast<double>(std::min<std::ptrdiff_t>(it - cum.begin(),
                                                                static_cast<std::ptrdiff_t>(cum.size()) - 1));
        }
        case Family::DiscreteUniform:
        case Family::Empirical: {
            const auto& pts = *table_;
            if (u == 0.0) {
                return pts.front();
            }
            return pts[atom_index(u, pts.size())];
        }
    }
    throw InvalidArgument("quantile: unknown family");
}

double Margin::cdf(double x) const {
    if (std::isnan(x)) {
        throw InvalidArgument("cdf: NaN argument");
    }
    switch (family_) {
        case Family::Uniform: {
            const double a = params_[0];
            const double b = params_[1];
            if (x <= a) return 0.0;
            if (x >= b) return 1.0;
            return (x - a) / (b - a);
        }
        case Family::Normal:
            return std_normal_cdf((x - params_[0]) / params_[1]);
        case Family::Pareto:
            if (x <= 0.0) return 0.0;
            return -std::expm1(-params_[0] * std::log1p(x));
        case Family::Exponential:
            if (x <= 0.0) return 0.0;
            return -std::expm1(-params_[0] * x);
        case Family::Lognormal:
            if (x <= 0.0) return 0.0;
            return std_normal_cdf((std::log(x) - params_[0]) / params_[1]);
        case Family::Cauchy:
            return 0.5 + std::atan((x - params_[0]) / params_[1]) / std::numbers::pi;
        case Family::Binomial: {
            const auto& cum = *table_;
            if (x < 0.0) return 0.0;
            const double k = std::floor(x);
            if (k >= static_cast<double>(cum.size() - 1)) return 1.0;
            return cum[static_cast<std::size_t>(k)];
        }
        case Family::DiscreteUniform:
        case Family::Empirical: {
            const auto& pts = *table_;
            const auto count = std::upper_bound(pts.begin(), pts.end(), x) - pts.begin();
            return static_cast<double>(count) / static_cast<double>(pts.size());
        }
    }
    throw InvalidArgument("cdf: unknown family");
}

double Margin::cdf_left(double x) const {
    switch (family_) {
        case Family::Binomial: {
            const double k = std::ceil(x) - 1.0;
            return cdf(k);
        }
        case Family::DiscreteUniform:
        case Family::Empirical: {
            const auto& pts = *table_;
            const auto count = std::lower_bound(pts.begin(), pts.end(), x) - pts.begin();
            return static_cast<double>(count) / static_cast<double>(pts.size());
        }
        default:
            if (x == kInf) return 1.0;
            return cdf(x);
    }
}

double Margin::density(double x) const {
    switch (family_) {
        case Family::Uniform: {
            const double a = params_[0];
            const double b = params_[1];
            return (x < a || x > b) ? 0.0 : 1.0 / (b - a);
        }
        case Family::Normal: {
            const double z = (x - params_[0]) / params_[1];
            return std_normal_pdf(z) / params_[1];
        }
        case Family::Pareto:
            if (x < 0.0) return 0.0;
            return params_[0] * std::pow(1.0 + x, -params_[0] - 1.0);
        case Family::Exponential:
            if (x < 0.0) return 0.0;
            return params_[0] * std::exp(-params_[0] * x);
        case Family::Lognormal: {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - params_[0]) / params_[1];
            return std_normal_pdf(z) / (x * params_[1]);
        }
        case Family::Cauchy: {
            const double z = (x - params_[0]) / params_[1];
            return 1.0 / (std::numbers::pi * params_[1] * (1.0 + z * z));
        }
        default:
            throw InvalidArgument("density: discrete margin has no density");
    }
}

bool Margin::is_discrete() const {
    return family_ == Family::Binomial || family_ == Family::DiscreteUniform || family_ == Family::Empirical;
}

bool Margin::is_degenerate() const {
    if (!is_discrete()) {
        return false;
    }
    return quantile(0.0) == quantile(1.0);
}

bool Margin::has_decreasing_density() const {
    return family_ == Family::Exponential || family_ == Family::Pareto || family_ == Family::Uniform;
}

bool Margin::is_symmetric_unimodal() const {
    return family_ == Family::Normal || family_ == Family::Uniform || family_ == Family::Cauchy;
}

double Margin::center() const {
    switch (family_) {
        case Family::Uniform: return 0.5 * (params_[0] + params_[1]);
        case Family::Normal:
        case Family::Cauchy: return params_[0];
        default: throw InvalidArgument("center: margin is not symmetric");
    }
}

SupportSummary Margin::summary() const {
    SupportSummary s;
    s.lower = quantile(0.0);
    s.upper = quantile(1.0);
    s.length = s.upper - s.lower;
    s.zero_mass = 1.0 - cdf(s.lower);
    s.top_left_limit = cdf_left(s.upper);
    if (s.lower == -kInf) {
        s.zero_mass = 1.0;
    }
    switch (family_) {
        case Family::Uniform: {
            const double l = params_[1] - params_[0];
            s.mean = 0.5 * (params_[0] + params_[1]);
            s.abs_dev = 0.25 * l;
            s.sd = l / std::sqrt(12.0);
            break;
        }
        case Family::Normal:
            s.mean = params_[0];
            s.abs_dev = params_[1] * std::sqrt(2.0 / std::numbers::pi);
            s.sd = params_[1];
            break;
        case Family::Pareto: {
            const double theta = params_[0];
            if (theta > 1.0) {
                const double mu = 1.0 / (theta - 1.0);
                s.mean = mu;
                s.abs_dev = 2.0 * std::pow(1.0 + mu, 1.0 - theta) / (theta - 1.0);
            } else {
                s.mean = kInf;
                s.abs_dev = kInf;
            }
            s.sd = theta > 2.0 ? std::sqrt(theta / ((theta - 1.0) * (theta - 1.0) * (theta - 2.0))) : kInf;
            break;
        }
        case Family::Exponential:
            s.mean = 1.0 / params_[0];
            s.abs_dev = 2.0 / (std::numbers::e * params_[0]);
            s.sd = 1.0 / params_[0];
            break;
        case Family::Lognormal: {
            const double sigma = params_[1];
            const double mean = std::exp(params_[0] + 0.5 * sigma * sigma);
            s.mean = mean;
            s.abs_dev = 2.0 * mean * (2.0 * std_normal_cdf(0.5 * sigma) - 1.0);
            s.sd = mean * std::sqrt(std::expm1(sigma * sigma));
            break;
        }
        case Family::Cauchy:
            break;
        case Family::Binomial: {
            const auto& cum = *table_;
            const double trials = params_[0];
            const double p = params_[1];
            const double mu = trials * p;
            ExactSum dev;
            double prev = 0.0;
            for (std::size_t k = 0; k < cum.size(); ++k) {
                dev.add(std::fabs(static_cast<double>(k) - mu) * (cum[k] - prev));
                prev = cum[k];
            }
            s.mean = mu;
            s.abs_dev = dev.value();
            s.sd = std::sqrt(trials * p * (1.0 - p));
            break;
        }
        case Family::DiscreteUniform:
        case Family::Empirical: {
            const auto& pts = *table_;
            const Moments mom = population_moments(pts);
            ExactSum dev;
            for (double v : pts) {
                dev.add(std::fabs(v - mom.mean));
            }
            s.mean = mom.mean;
            s.abs_dev = dev.value() / static_cast<double>(pts.size());
            s.sd = std::sqrt(mom.variance);
            break;
        }
    }
    return s;
}

std::string Margin::describe() const {
    std::ostringstream os;
    os << to_string(family_);
    switch (family_) {
        case Family::Uniform: os << "(a=" << params_[0] << ", b=" << params_[1] << ")"; break;
        case Family::Normal:
        case Family::Lognormal: os << "(mu=" << params_[0] << ", sigma=" << params_[1] << ")"; break;
        case Family::Pareto: os << "(theta=" << params_[0] << ")"; break;
        case Family::Exponential: os << "(lambda=" << params_[0] << ")"; break;
        case Family::Cauchy: os << "(loc=" << params_[0] << ", scale=" << params_[1] << ")"; break;
        case Family::Binomial: os << "(m=" << params_[0] << ", p=" << params_[1] << ")"; break;
        case Family::DiscreteUniform:
        case Family::Empirical: os << "(" << table_->size() << " points)"; break;
    }
    return os.str();
}

double abs_dev_by_quadrature(const Margin& m, double mean) {
    if (m.is_discrete()) {
        throw InvalidArgument("abs_dev_by_quadrature: continuous margins only");
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double split = std::clamp(m.cdf(mean), 0.0, 1.0);
    auto below = [&](double u) { return mean - m.quantile(u); };
    auto above = [&](double u) { return m.quantile(u) - mean; };
    double total = 0.0;
    if (split > 0.0) {
        total += integrator.integrate(below, 0.0, split, 1e-9);
    }
    if (split < 1.0) {
        total += integrator.integrate(above, split, 1.0, 1e-9);
    }
    return total;
}

std::string_view to_string(GridMode mode) {
    switch (mode) {
        case GridMode::Lower: return "lower";
        case GridMode::Upper: return "upper";
        case GridMode::Midpoint: return "midpoint";
        case GridMode::Shifted: return "shifted";
    }
    return "unknown";
}

GridMode parse_grid_mode(std::string_view text) {
    if (text == "lower") return GridMode::Lower;
    if (text == "upper") return GridMode::Upper;
    if (text == "midpoint") return GridMode::Midpoint;
    if (text == "shifted") return GridMode::Shifted;
    throw InvalidArgument("unknown grid mode '" + std::string(text) + "'");
}

double grid_probability(GridMode mode, std::size_t i, std::size_t n) {
    const auto k = static_cast<double>(i);
    const auto total = static_cast<double>(n);
    switch (mode) {
        case GridMode::Lower: return k / total;
        case GridMode::Upper: return (k + 1.0) / total;
        case GridMode::Midpoint: return (k + 0.5) / total;
        case GridMode::Shifted: return (k + 1.0) / (total + 1.0);
    }
    return 0.0;
}

double QuantileGrid::mean() const {
    if (values.empty()) {
        return 0.0;
    }
    return exact_sum(values) / static_cast<double>(values.size());
}

QuantileGrid discretize(const Margin& m, std::size_t n, GridMode mode) {
    if (n == 0) {
        throw InvalidArgument("discretize: n must be positive");
    }
    if (mode == GridMode::Lower && !std::isfinite(m.quantile(0.0))) {
        throw InvalidArgument("discretize: grid mode 'lower' needs a finite essential infimum, " +
                              m.describe() + " is unbounded below");
    }
    if (mode == GridMode::Upper && !std::isfinite(m.quantile(1.0))) {
        throw InvalidArgument("discretize: grid mode 'upper' needs a finite essential supremum, " +
                              m.describe() + " is unbounded above");
    }
    QuantileGrid grid;
    grid.mode = mode;
    grid.source = std::make_shared<const Margin>(m);
    grid.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.values[i] = m.quantile(grid_probability(mode, i, n));
    }
    return grid;
}

QuantileGrid discretize_interval(const Margin& m, std::size_t n, GridMode mode, double u_lo, double u_hi) {
    if (n == 0) {
        throw InvalidArgument("discretize_interval: n must be positive");
    }
    if (!(0.0 <= u_lo && u_lo < u_hi && u_hi <= 1.0)) {
        throw InvalidArgument("discretize_interval: need 0 <= u_lo < u_hi <= 1");
    }
    QuantileGrid grid;
    grid.mode = mode;
    grid.source = std::make_shared<const Margin>(m);
    grid.values.resize(n);
    const double width = u_hi - u_lo;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = grid_probability(mode, i, n);
        const double u = v == 1.0 ? u_hi : std::min(u_lo + width * v, u_hi);
        const double q = m.quantile(u);
        if (!std::isfinite(q)) {
            throw InvalidArgument("discretize_interval: grid mode '" + std::string(to_string(mode)) +
                                  "' reaches an unbounded quantile of " + m.describe());
        }
        grid.values[i] = q;
    }
    return grid;
}

}  // namespace frechet
