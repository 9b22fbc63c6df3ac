#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace frechet {

enum class Family {
    Uniform,
    Normal,
    Pareto,
    Exponential,
    Lognormal,
    Cauchy,
    Binomial,
    DiscreteUniform,
    Empirical,
};

[[nodiscard]] std::string_view to_string(Family f);

/// Location/scale summary of a margin.
///
/// `lower`/`upper` are the essential infimum and supremum (possibly infinite).
/// `mean`, `abs_dev` (E|X - mean|) and `sd` are empty when undefined (Cauchy)
/// and +inf when the corresponding integral diverges.
/// `zero_mass` is 1 - F(F^{-1}(0)), the mass strictly above the infimum;
/// `top_left_limit` is F(F^{-1}(1)-), the mass strictly below the supremum.
struct SupportSummary {
    double lower = 0.0;
    double upper = 0.0;
    double length = 0.0;
    std::optional<double> mean;
    std::optional<double> abs_dev;
    std::optional<double> sd;
    double zero_mass = 0.0;
    double top_left_limit = 0.0;
};

/// A univariate distribution with quantile, cdf and moment access.
///
/// Margins are immutable values. Invalid parameters throw InvalidArgument at
/// construction; nothing is clamped.
class Margin {
public:
    static Margin uniform(double a, double b);
    static Margin normal(double mu, double sigma);
    /// Pareto with cdf 1 - (1 + x)^(-theta) on x >= 0.
    static Margin pareto(double theta);
    static Margin exponential(double lambda);
    static Margin lognormal(double mu, double sigma);
    static Margin cauchy(double loc, double scale);
    static Margin binomial(int trials, double p);
    static Margin bernoulli(double p) { return binomial(1, p); }
    /// Equal mass on each listed point; duplicates accumulate mass.
    static Margin discrete_uniform(std::vector<double> points);
    static Margin empirical(std::vector<double> sample);

    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] std::span<const double> params() const { return params_; }
    /// Sorted support points of a DiscreteUniform/Empirical margin.
    [[nodiscard]] std::span<const double> points() const;

    /// Left-continuous quasi-inverse inf{x : F(x) >= u}; u = 0 gives inf{x : F(x) > 0}.
    [[nodiscard]] double quantile(double u) const;
    /// Right-continuous distribution function P(X <= x).
    [[nodiscard]] double cdf(double x) const;
    /// Left limit P(X < x).
    [[nodiscard]] double cdf_left(double x) const;
    /// Lebesgue density; only for continuous families.
    [[nodiscard]] double density(double x) const;
    [[nodiscard]] SupportSummary summary() const;

    [[nodiscard]] bool is_discrete() const;
    [[nodiscard]] bool is_degenerate() const;
    /// Density nonincreasing on its support (uniform counts as weakly decreasing).
    [[nodiscard]] bool has_decreasing_density() const;
    /// Unimodal density symmetric about center().
    [[nodiscard]] bool is_symmetric_unimodal() const;
    [[nodiscard]] double center() const;

    [[nodiscard]] std::string describe() const;

private:
    Margin(Family f, std::vector<double> params) : family_(f), params_(std::move(params)) {}

    Family family_;
    std::vector<double> params_;
    // Sorted atoms for DiscreteUniform/Empirical, cumulative pmf for Binomial.
    std::shared_ptr<const std::vector<double>> table_;
};

/// E|X - mean| by adaptive quadrature of |F^{-1}(u) - mean| over (0,1).
/// Cross-check for the closed forms in Margin::summary().
[[nodiscard]] double abs_dev_by_quadrature(const Margin& m, double mean);

enum class GridMode { Lower, Upper, Midpoint, Shifted };

[[nodiscard]] std::string_view to_string(GridMode mode);
[[nodiscard]] GridMode parse_grid_mode(std::string_view text);

/// Probability level of the i-th (0-based) point of an n-point grid.
[[nodiscard]] double grid_probability(GridMode mode, std::size_t i, std::size_t n);

/// Equal-weight discretization of a margin: values[i] = quantile(u_i).
struct QuantileGrid {
    std::vector<double> values;
    GridMode mode = GridMode::Midpoint;
    std::shared_ptr<const Margin> source;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] double mean() const;
    [[nodiscard]] double range() const { return values.empty() ? 0.0 : values.back() - values.front(); }
};

/// n-point grid over the whole probability range.
[[nodiscard]] QuantileGrid discretize(const Margin& m, std::size_t n, GridMode mode = GridMode::Midpoint);

/// n-point grid of the conditional law on probability levels [u_lo, u_hi]:
/// u_i = u_lo + (u_hi - u_lo) * v_i with v_i taken from `mode`.
[[nodiscard]] QuantileGrid discretize_interval(const Margin& m, std::size_t n, GridMode mode, double u_lo,
                                               double u_hi);

}  // namespace frechet
