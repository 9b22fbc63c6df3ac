#pragma once

#include "frechet/engine.hpp"
#include "frechet/marginals.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace frechet {

enum class BoundSide { Upper, Lower };
enum class BoundMethod { AnalyticComonotone, AnalyticCountermonotone, RaReducedTail, RaFull };

/// How `value` is read off the certificate.
enum class Statistic { Objective, MinRowSum, MaxRowSum, None };

[[nodiscard]] std::string_view to_string(BoundSide s);
[[nodiscard]] std::string_view to_string(BoundMethod m);
[[nodiscard]] std::string_view to_string(Statistic s);

struct BoundResult {
    double value = 0.0;
    BoundSide side = BoundSide::Upper;
    BoundMethod method = BoundMethod::AnalyticComonotone;
    std::optional<RearrangementMatrix> certificate;
    std::size_t grid_n = 0;
    GridMode grid_mode = GridMode::Midpoint;
    Statistic statistic = Statistic::None;
    std::optional<CostSpec> cost;
    std::map<std::string, double> diagnostics;
    /// Set for heuristic (non-certified) optima.
    std::string disclaimer;
};

/// Recompute `value` from the certificate. Throws when there is none.
[[nodiscard]] double reevaluate(const BoundResult& result);

struct Envelope {
    double lower = 0.0;
    double upper = 0.0;
};

/// Lower and upper Frechet-Hoeffding bounds of the joint df at x.
[[nodiscard]] Envelope frechet_envelope(std::span<const Margin> margins, std::span<const double> x);

/// Exact maximum of a declared-supermodular cost (comonotone arrangement).
[[nodiscard]] BoundResult supermodular_max(std::span<const QuantileGrid> grids, const CostSpec& cost);

/// Exact minimum of a declared-supermodular cost for two margins (countermonotone arrangement).
[[nodiscard]] BoundResult supermodular_min_d2(std::span<const QuantileGrid> grids, const CostSpec& cost);

/// Heuristic minimum for any d via the rearrangement algorithm.
[[nodiscard]] BoundResult supermodular_min_ra(std::span<const QuantileGrid> grids, const CostSpec& cost,
                                              const RaOptions& opts);

struct VarOptions {
    RaOptions ra;
    /// Grid mode on the conditional tail. Defaults: lower for worst_var, upper for best_var.
    std::optional<GridMode> tail_mode;
    /// Also run the opposite tail mode and report both in diagnostics when finite.
    bool bracket = true;
};

/// Rows of the reduced tail block for level alpha and n.
[[nodiscard]] std::size_t tail_rows(double mass, std::size_t n);

/// Largest alpha-quantile of the sum over all couplings: variance-flattened
/// upper tail block beyond alpha; value is its minimum row sum.
[[nodiscard]] BoundResult worst_var(std::span<const Margin> margins, double alpha, std::size_t n,
                                    const VarOptions& opts);

/// Smallest alpha-quantile of the sum: variance-flattened lower block below
/// alpha; value is its maximum row sum.
[[nodiscard]] BoundResult best_var(std::span<const Margin> margins, double alpha, std::size_t n,
                                   const VarOptions& opts);

/// Largest P(S >= k): one minus the smallest alpha whose worst_var reaches k,
/// found by 40 bisection steps with warm-started rearrangements.
[[nodiscard]] BoundResult tail_prob_max(std::span<const Margin> margins, double k, std::size_t n,
                                        const VarOptions& opts);

/// Minimum of E[X_1 ... X_d] over couplings of strictly positive grids.
[[nodiscard]] BoundResult min_product_expectation(std::span<const QuantileGrid> grids, const RaOptions& opts);

struct CorrelationRange {
    double min = 0.0;
    double max = 0.0;
};

/// Range of multivariate Spearman's rho given the minimal E[U_1 ... U_d].
[[nodiscard]] CorrelationRange spearman_extremes(std::size_t d, double min_product_value);

struct SpearmanResult {
    CorrelationRange rho;
    BoundResult min_product;
};

/// Spearman range for d uniforms on n-point midpoint grids (runs min_product_expectation).
[[nodiscard]] SpearmanResult spearman_range(std::size_t d, std::size_t n, const RaOptions& opts);

/// Pearson correlation range of two margins from comonotone and countermonotone
/// n-point midpoint grids.
[[nodiscard]] CorrelationRange pearson_extremes(const Margin& first, const Margin& second, std::size_t n);

}  // namespace frechet
