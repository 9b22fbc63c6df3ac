#include "frechet/mixability.hpp"

#include "frechet/error.hpp"
#include "frechet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace frechet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TestResult make(std::string name, TestOutcome outcome, double slack, std::string note = {}) {
    return TestResult{std::move(name), outcome, slack, std::move(note)};
}

bool same_law(const Margin& a, const Margin& b) {
    if (a.family() != b.family()) {
        return false;
    }
    const auto pa = a.params();
    const auto pb = b.params();
    const auto xa = a.points();
    const auto xb = b.points();
    return std::equal(pa.begin(), pa.end(), pb.begin(), pb.end()) &&
           std::equal(xa.begin(), xa.end(), xb.begin(), xb.end());
}

double characteristic_scale(const Margin& m) {
    const auto p = m.params();
    switch (m.family()) {
        case Family::Uniform: return 0.5 * (p[1] - p[0]);
        case Family::Normal:
        case Family::Cauchy: return p[1];
        default: throw InvalidArgument(m.describe() + " is not unimodal-symmetric");
    }
}

}  // namespace

std::string_view to_string(TestOutcome o) {
    switch (o) {
        case TestOutcome::Pass: return "pass";
        case TestOutcome::Fail: return "fail";
        case TestOutcome::NotApplicable: return "na";
    }
    return "unknown";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Mixable: return "mixable";
        case Verdict::NotMixable: return "not_mixable";
        case Verdict::Undecided: return "undecided";
    }
    return "unknown";
}

std::string_view to_string(NormKind k) {
    switch (k) {
        case NormKind::L1: return "L1";
        case NormKind::L2: return "L2";
        case NormKind::Range: return "range";
    }
    return "unknown";
}

TestResult mean_inequality(std::span<const Margin> margins) {
    ExactSum lower;
    ExactSum upper;
    ExactSum means;
    double longest = 0.0;
    bool upper_finite = true;
    for (const auto& m : margins) {
        const auto s = m.summary();
        if (!s.mean || !std::isfinite(*s.mean)) {
            return make("mean-inequality", TestOutcome::NotApplicable, 0.0, m.describe() + " has no finite mean");
        }
        if (!std::isfinite(s.lower)) {
            return make("mean-inequality", TestOutcome::NotApplicable, 0.0, m.describe() + " is unbounded below");
        }
        lower.add(s.lower);
        means.add(*s.mean);
        if (std::isfinite(s.upper)) {
            upper.add(s.upper);
        } else {
            upper_finite = false;
        }
        longest = std::max(longest, s.length);
    }
    if (!upper_finite) {
        // The left inequality reads +inf <= sum of means.
        return make("mean-inequality", TestOutcome::Fail, -kInf, "unbounded support length on a one-sided margin");
    }
    const double mu = means.value();
    const double left = lower.value() + longest;
    const double right = upper.value() - longest;
    const double slack = std::min(mu - left, right - mu);
    const double tol = 1e-12 * std::max({1.0, std::fabs(left), std::fabs(right)});
    return make("mean-inequality", slack >= -tol ? TestOutcome::Pass : TestOutcome::Fail, slack);
}

TestResult norm_inequality(std::span<const Margin> margins, NormKind norm) {
    const std::string name = "norm-inequality-" + std::string(to_string(norm));
    std::vector<double> values;
    for (const auto& m : margins) {
        const auto s = m.summary();
        std::optional<double> v;
        switch (norm) {
            case NormKind::L1: v = s.abs_dev; break;
            case NormKind::L2: v = s.sd; break;
            case NormKind::Range: v = s.length; break;
        }
        if (!v) {
            return make(name, TestOutcome::NotApplicable, 0.0, m.describe() + ": norm undefined");
        }
        if (!std::isfinite(*v)) {
            return make(name, TestOutcome::NotApplicable, 0.0, m.describe() + ": norm infinite");
        }
        values.push_back(*v);
    }
    const double total = exact_sum(values);
    const double largest = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    const double slack = total - 2.0 * largest;
    const double tol = 1e-12 * std::max(1.0, total);
    return make(name, slack >= -tol ? TestOutcome::Pass : TestOutcome::Fail, slack);
}

TestResult one_sided_rule(std::span<const Margin> margins) {
    bool all_lower_finite = true;
    bool all_upper_finite = true;
    bool some_upper_infinite = false;
    bool some_lower_infinite = false;
    for (const auto& m : margins) {
        const auto s = m.summary();
        all_lower_finite = all_lower_finite && std::isfinite(s.lower);
        all_upper_finite = all_upper_finite && std::isfinite(s.upper);
        some_upper_infinite = some_upper_infinite || !std::isfinite(s.upper);
        some_lower_infinite = some_lower_infinite || !std::isfinite(s.lower);
    }
    if (all_lower_finite && some_upper_infinite) {
        return make("one-sided", TestOutcome::Fail, -kInf, "all margins bounded below, some unbounded above");
    }
    if (all_upper_finite && some_lower_infinite) {
        return make("one-sided", TestOutcome::Fail, -kInf, "all margins bounded above, some unbounded below");
    }
    return make("one-sided", TestOutcome::Pass, 0.0);
}

TestResult sufficient_decreasing_density(std::span<const Margin> margins) {
    const std::string name = "decreasing-density";
    for (const auto& m : margins) {
        if (!m.has_decreasing_density()) {
            return make(name, TestOutcome::NotApplicable, 0.0, m.describe() + " has no decreasing density");
        }
    }
    const auto sided = one_sided_rule(margins);
    if (sided.outcome == TestOutcome::Fail) {
        return make(name, TestOutcome::Fail, sided.slack, sided.note);
    }
    auto mean = mean_inequality(margins);
    return make(name, mean.outcome, mean.slack, "iff mean inequality");
}

TestResult sufficient_normal(std::span<const Margin> margins) {
    const std::string name = "normal";
    for (const auto& m : margins) {
        if (m.family() != Family::Normal) {
            return make(name, TestOutcome::NotApplicable, 0.0, m.describe() + " is not normal");
        }
    }
    auto norm = norm_inequality(margins, NormKind::L2);
    return make(name, norm.outcome, norm.slack, "iff sd norm inequality");
}

double g_inverse(const Margin& m, double a) {
    if (!m.is_symmetric_unimodal()) {
        throw InvalidArgument(m.describe() + " is not unimodal-symmetric");
    }
    if (!(a > 0.0 && a < 0.5)) {
        throw InvalidArgument("g_inverse: level must lie in (0, 1/2)");
    }
    const double c = m.center();
    auto g = [&](double x) { return m.cdf(c + x) - x * m.density(c + x) - 0.5; };
    double lo = 0.0;
    double hi = characteristic_scale(m);
    while (g(hi) < a) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) {
            throw InvalidArgument("g_inverse: bracket diverged");
        }
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (g(mid) >= a ? hi : lo) = mid;
    }
    return hi;
}

TestResult sufficient_unimodal_symmetric(std::span<const Margin> margins) {
    const std::string name = "unimodal-symmetric";
    for (const auto& m : margins) {
        if (!m.is_symmetric_unimodal()) {
            throw InvalidArgument("sufficient_unimodal_symmetric: " + m.describe() + " is not unimodal-symmetric");
        }
    }
    constexpr int kPoints = 512;
    const double lo = std::log(1e-6);
    const double hi = std::log(0.5 - 1e-6);
    const double tol = 4e-10 * static_cast<double>(margins.size());
    double worst = kInf;
    double worst_level = 0.0;
    for (int k = 0; k < kPoints; ++k) {
        const double a = std::exp(lo + (hi - lo) * k / (kPoints - 1));
        double total = 0.0;
        double largest = 0.0;
        for (const auto& m : margins) {
            const double v = g_inverse(m, a);
            total += v;
            largest = std::max(largest, v);
        }
        const double slack = total - 2.0 * largest;
        if (slack < worst) {
            worst = slack;
            worst_level = a;
        }
    }
    if (worst >= -tol) {
        return make(name, TestOutcome::Pass, worst);
    }
    std::ostringstream os;
    os << "sufficient check fails at a = " << worst_level;
    return make(name, TestOutcome::NotApplicable, worst, os.str());
}

TestResult complete_mixability_rules(const Margin& margin, std::size_t d) {
    const std::string name = "complete-mixability";
    if (d < 2) {
        throw InvalidArgument("complete_mixability_rules: d must be at least 2");
    }
    const auto dd = static_cast<double>(d);
    if (margin.is_degenerate()) {
        return make(name, TestOutcome::Pass, 0.0, "degenerate");
    }
    if ((margin.family() == Family::DiscreteUniform || margin.family() == Family::Empirical) &&
        margin.points().size() == d) {
        return make(name, TestOutcome::Pass, 0.0, "discrete-uniform");
    }
    if (margin.family() == Family::Binomial) {
        const double scaled = margin.params()[1] * dd;
        if (std::fabs(scaled - std::round(scaled)) <= 1e-12 * dd) {
            return make(name, TestOutcome::Pass, 0.0, "binomial");
        }
    }
    if (margin.family() == Family::Cauchy) {
        return make(name, TestOutcome::Pass, 0.0, "cauchy");
    }
    if (margin.family() == Family::Uniform) {
        const auto p = margin.params();
        const double width = p[1] - p[0];
        const double min_density = margin.density(0.5 * (p[0] + p[1]));
        const double slack = dd * width * min_density - 3.0;
        if (slack >= -1e-12) {
            return make(name, TestOutcome::Pass, slack, "density-lower-bound");
        }
        if (d >= 3) {
            return make(name, TestOutcome::Pass, 0.0, "concave-density");
        }
    }
    return make(name, TestOutcome::NotApplicable, 0.0);
}

MixReport detect_mixability(std::span<const QuantileGrid> grids, const MixOptions& opts) {
    if (grids.empty()) {
        throw InvalidArgument("detect_mixability: need at least one grid");
    }
    for (const auto& g : grids) {
        if (g.size() != grids.front().size()) {
            throw InvalidArgument("detect_mixability: grids must share n");
        }
    }
    RaOptions ra;
    ra.restarts = opts.restarts;
    ra.seed = opts.seed;
    ra.max_sweeps = opts.max_sweeps;
    ra.threads = opts.threads;
    auto result = ra_minimize(RearrangementMatrix::from_grids(grids), CostSpec::variance_of_sum(), ra);

    MixReport report;
    const auto sums = result.matrix.row_sums();
    const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
    report.residual = *hi - *lo;
    for (const auto& g : grids) {
        report.scale += g.range();
    }
    report.center = report.residual == 0.0 ? *lo : population_moments(sums).mean;
    report.restart_index = result.restart_index;
    const double allowed = opts.tolerance * report.scale;
    report.verdict = report.residual <= allowed ? Verdict::Mixable : Verdict::Undecided;
    report.evidence.push_back(make("numerical-detection",
                                   report.verdict == Verdict::Mixable ? TestOutcome::Pass : TestOutcome::NotApplicable,
                                   allowed - report.residual));
    report.certificate = std::move(result.matrix);
    return report;
}

MixReport analyze_mixability(std::span<const Margin> margins, std::size_t n, GridMode mode, const MixOptions& opts) {
    if (margins.empty()) {
        throw InvalidArgument("analyze_mixability: need at least one margin");
    }
    MixReport report;
    report.residual = kInf;

    std::vector<TestResult> necessary = {
        one_sided_rule(margins),
        mean_inequality(margins),
        norm_inequality(margins, NormKind::L1),
        norm_inequality(margins, NormKind::L2),
        norm_inequality(margins, NormKind::Range),
    };
    bool failed = false;
    for (auto& t : necessary) {
        failed = failed || t.outcome == TestOutcome::Fail;
        report.evidence.push_back(std::move(t));
    }
    if (failed) {
        report.verdict = Verdict::NotMixable;
        return report;
    }

    bool analytic = false;
    auto record = [&](TestResult t) {
        if (t.outcome == TestOutcome::Pass) {
            analytic = true;
        } else if (t.outcome == TestOutcome::Fail) {
            failed = true;
        }
        report.evidence.push_back(std::move(t));
    };
    record(sufficient_decreasing_density(margins));
    record(sufficient_normal(margins));
    if (std::all_of(margins.begin(), margins.end(), [](const Margin& m) { return m.is_symmetric_unimodal(); })) {
        record(sufficient_unimodal_symmetric(margins));
    }
    if (margins.size() >= 2 &&
        std::all_of(margins.begin(), margins.end(), [&](const Margin& m) { return same_law(m, margins.front()); })) {
        record(complete_mixability_rules(margins.front(), margins.size()));
    }
    if (failed) {
        report.verdict = Verdict::NotMixable;
        return report;
    }

    std::vector<QuantileGrid> grids;
    grids.reserve(margins.size());
    for (const auto& m : margins) {
        grids.push_back(discretize(m, n, mode));
    }
    auto numeric = detect_mixability(grids, opts);
    for (auto& t : numeric.evidence) {
        report.evidence.push_back(std::move(t));
    }
    report.center = numeric.center;
    report.certificate = std::move(numeric.certificate);
    report.residual = numeric.residual;
    report.scale = numeric.scale;
    report.restart_index = numeric.restart_index;
    report.verdict = analytic ? Verdict::Mixable : numeric.verdict;
    return report;
}

}  // namespace frechet
