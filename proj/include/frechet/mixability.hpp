#pragma once

#include "frechet/engine.hpp"
#include "frechet/marginals.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frechet {

enum class TestOutcome { Pass, Fail, NotApplicable };
enum class Verdict { Mixable, NotMixable, Undecided };
enum class NormKind { L1, L2, Range };

[[nodiscard]] std::string_view to_string(TestOutcome o);
[[nodiscard]] std::string_view to_string(Verdict v);
[[nodiscard]] std::string_view to_string(NormKind k);

/// One analytic test: outcome plus the signed margin by which it held (or failed).
struct TestResult {
    std::string name;
    TestOutcome outcome = TestOutcome::NotApplicable;
    double slack = 0.0;
    std::string note;
};

struct MixReport {
    Verdict verdict = Verdict::Undecided;
    std::vector<TestResult> evidence;
    std::optional<double> center;
    std::optional<RearrangementMatrix> certificate;
    /// Max minus min row sum of the certificate (+inf when no numeric run happened).
    double residual = 0.0;
    /// Sum of the grid ranges; the numeric tolerance scales with it.
    double scale = 0.0;
    std::size_t restart_index = 0;
};

// Necessary conditions ----------------------------------------------------

/// Sum of infima plus the longest support is at most the sum of means, which is
/// at most the sum of suprema minus the longest support.
[[nodiscard]] TestResult mean_inequality(std::span<const Margin> margins);

/// Sum of centered norms is at least twice the largest one.
[[nodiscard]] TestResult norm_inequality(std::span<const Margin> margins, NormKind norm);

/// All infima finite with some supremum infinite, or the mirror image.
[[nodiscard]] TestResult one_sided_rule(std::span<const Margin> margins);

// Sufficient conditions ---------------------------------------------------

/// Decreasing densities: jointly mixable iff the mean inequality holds.
[[nodiscard]] TestResult sufficient_decreasing_density(std::span<const Margin> margins);

/// Normal margins (marginals of a Gaussian vector): mixable iff the sd norm inequality holds.
[[nodiscard]] TestResult sufficient_normal(std::span<const Margin> margins);

/// Unimodal-symmetric densities: checks sum_j G_j^{-1}(a) >= 2 max_j G_j^{-1}(a)
/// on a log-spaced grid of a in (0, 1/2), with G_j(x) = F_j(c+x) - x f_j(c+x) - 1/2.
/// Pass means mixable; Fail only means the sufficient check did not apply.
/// Throws InvalidArgument for a non-symmetric margin.
[[nodiscard]] TestResult sufficient_unimodal_symmetric(std::span<const Margin> margins);

/// Inverse of G on [0, half-width) by bisection to 1e-10 absolute.
[[nodiscard]] double g_inverse(const Margin& m, double a);

/// Complete-mixability rules for one margin repeated d times. On a match the
/// note names the rule: "discrete-uniform", "binomial", "cauchy",
/// "density-lower-bound" or "concave-density".
[[nodiscard]] TestResult complete_mixability_rules(const Margin& margin, std::size_t d);

// Numerical detection -----------------------------------------------------

struct MixOptions {
    /// Relative to the sum of grid ranges.
    double tolerance = 1e-9;
    std::size_t restarts = 20;
    std::uint64_t seed = 0;
    std::size_t max_sweeps = 1000;
    unsigned threads = 0;
};

/// Variance-minimizing rearrangement from seeded random starts; mixable when the
/// best row-sum spread is within tolerance, otherwise undecided.
[[nodiscard]] MixReport detect_mixability(std::span<const QuantileGrid> grids, const MixOptions& opts);

/// Necessary tests, then analytic sufficient tests, then numerical detection on
/// n-point grids (skipped when a necessary test fails).
[[nodiscard]] MixReport analyze_mixability(std::span<const Margin> margins, std::size_t n, GridMode mode,
                                           const MixOptions& opts);

}  // namespace frechet
