// Acceptance checks: one PASS/FAIL line per criterion. Tolerances are pinned here.
#include "frechet/bounds.hpp"
#include "frechet/couplings.hpp"
#include "frechet/engine.hpp"
#include "frechet/marginals.hpp"
#include "frechet/mixability.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace frechet;

namespace {

constexpr double kWorstVarLo = 45.5;
constexpr double kWorstVarHi = 46.5;
constexpr double kWorstVarSeconds = 60.0;
constexpr double kUniformMixSeconds = 1.0;
constexpr double kEnumerationSeconds = 30.0;
constexpr double kSpearmanTolerance = 2e-3;
constexpr double kPropertySeconds = 120.0;
constexpr std::size_t kPropertyCases = 10000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.2fs) %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<QuantileGrid> grids_of(const std::vector<Margin>& ms, std::size_t n, GridMode mode) {
    std::vector<QuantileGrid> g;
    for (const auto& m : ms) {
        g.push_back(discretize(m, n, mode));
    }
    return g;
}

std::vector<double> one_to_nine() {
    return {1, 2, 3, 4, 5, 6, 7, 8, 9};
}

Outcome worst_var_pareto() {
    const std::vector<Margin> ms(3, Margin::pareto(2.0));
    VarOptions opts;
    opts.ra.restarts = 20;
    opts.ra.threads = 1;  // the time budget is for a single core
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = worst_var(ms, 0.99, 100000, opts);
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "value=%.6f wanted [%.1f, %.1f], %.2fs single-threaded", r.value, kWorstVarLo,
                  kWorstVarHi, secs);
    return {r.value >= kWorstVarLo && r.value <= kWorstVarHi && secs < kWorstVarSeconds, buf};
}

Outcome uniform_joint_mix() {
    const std::vector<Margin> ms(3, Margin::uniform(0.0, 1.0));
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = detect_mixability(grids_of(ms, 9, GridMode::Shifted), MixOptions{});
    const double secs = seconds_since(t0);
    const bool ok = report.residual == 0.0 && report.center.has_value() && *report.center == 1.5 &&
                    report.verdict == Verdict::Mixable && secs < kUniformMixSeconds;
    char buf[160];
    std::snprintf(buf, sizeof buf, "residual=%g center=%g", report.residual, report.center.value_or(NAN));
    return {ok, buf};
}

Outcome normal_threshold() {
    const std::vector<Margin> at{Margin::normal(0, 2), Margin::normal(0, 1), Margin::normal(0, 1)};
    const auto sufficient = sufficient_normal(at);
    const std::vector<double> sig{2, 1, 1};
    const auto cov = normal_joint_mix_cov(sig);
    const bool psd = cov.feasible && cov.covariance && min_eigenvalue(*cov.covariance) >= -1e-12;
    const auto at_report = analyze_mixability(at, 64, GridMode::Midpoint, MixOptions{});

    const std::vector<Margin> over{Margin::normal(0, 3), Margin::normal(0, 1), Margin::normal(0, 1)};
    const auto over_report = analyze_mixability(over, 64, GridMode::Midpoint, MixOptions{});
    bool l2_fails = false;
    for (const auto& e : over_report.evidence) {
        l2_fails = l2_fails || (e.name == "norm-inequality-L2" && e.outcome == TestOutcome::Fail);
    }
    const bool ok = sufficient.outcome == TestOutcome::Pass && sufficient.slack == 0.0 && psd &&
                    at_report.verdict == Verdict::Mixable && over_report.verdict == Verdict::NotMixable && l2_fails;
    char buf[200];
    std::snprintf(buf, sizeof buf, "(2,1,1): %s slack=%g psd=%d; (3,1,1): %s l2_fail=%d",
                  std::string(to_string(at_report.verdict)).c_str(), sufficient.slack, psd,
                  std::string(to_string(over_report.verdict)).c_str(), l2_fails);
    return {ok, buf};
}

Outcome d2_enumeration() {
    gen::Rng rng(7);
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0;
    std::string first;
    for (int c = 0; c < 100; ++c) {
        const auto a = discretize(gen::margin(rng), 7, GridMode::Midpoint);
        const auto b = discretize(gen::margin(rng), 7, GridMode::Midpoint);
        const std::vector<std::vector<double>> cols{a.values, b.values};
        const auto best = oracle::brute_force_min_variance(cols);
        const double exact = evaluate(RearrangementMatrix(best.columns), CostSpec::variance_of_sum());
        const auto ra = ra_minimize(RearrangementMatrix(cols), CostSpec::variance_of_sum(), RaOptions{});
        if (ra.objective != exact) {
            if (mismatches == 0) {
                first = "case " + std::to_string(c) + ": ra=" + std::to_string(ra.objective) +
                        " enum=" + std::to_string(exact);
            }
            ++mismatches;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < kEnumerationSeconds,
            "100 pairs, mismatches=" + std::to_string(mismatches) + (first.empty() ? "" : " " + first)};
}

Outcome sigma_cm_suite() {
    std::vector<double> u(9);
    std::vector<double> flipped(9);
    std::vector<double> one_plus_u(9);
    for (std::size_t i = 0; i < 9; ++i) {
        u[i] = (static_cast<double>(i) + 0.5) / 9.0;
        flipped[i] = 1.0 - u[i];
    }
    const RearrangementMatrix m({u, u, flipped});
    const bool passes = is_sigma_countermonotonic(m).ok;
    const auto sums = m.row_sums();
    for (std::size_t i = 0; i < 9; ++i) {
        one_plus_u[i] = 1.0 + u[i];
    }
    const bool sums_are_one_plus_u = std::equal(sums.begin(), sums.end(), one_plus_u.begin(),
                                                [](double a, double b) { return std::abs(a - b) <= 1e-15; });
    const std::vector<Margin> ms(3, Margin::uniform(0.0, 1.0));
    const auto mix = detect_mixability(grids_of(ms, 9, GridMode::Shifted), MixOptions{});
    const auto mix_sums = mix.certificate->row_sums();
    const bool dominated = convex_order_leq(mix_sums, sums) == ConvexOrder::LessOrEqual;
    const auto como = is_sigma_countermonotonic(RearrangementMatrix({one_to_nine(), one_to_nine(), one_to_nine()}));
    const bool fails_first = !como.ok && como.failing_subset && *como.failing_subset == std::vector<std::size_t>{0};
    return {passes && sums_are_one_plus_u && dominated && fails_first,
            "sigma-cm=" + std::to_string(passes) + " cx-dominated=" + std::to_string(dominated) +
                " comonotone fails at I={1}: " + std::to_string(fails_first)};
}

Outcome supermodular_extremes() {
    const std::vector<Margin> ms(2, Margin::discrete_uniform(one_to_nine()));
    const auto grids = grids_of(ms, 9, GridMode::Midpoint);
    const auto var_max = supermodular_max(grids, CostSpec::variance_of_sum());
    const auto var_min = supermodular_min_d2(grids, CostSpec::variance_of_sum());
    const auto prod_max = supermodular_max(grids, CostSpec::product());
    const auto prod_min = supermodular_min_d2(grids, CostSpec::product());
    // Independent values: closed forms and a full enumeration of the product minimum.
    long double sq = 0;
    long double opposite = 0;
    for (int i = 1; i <= 9; ++i) {
        sq += static_cast<long double>(i) * i;
        opposite += static_cast<long double>(i) * (10 - i);
    }
    const double prod_max_ref = static_cast<double>(sq / 9);
    const double prod_min_ref = static_cast<double>(opposite / 9);
    const double enumerated = static_cast<double>(oracle::brute_force_min_product({one_to_nine(), one_to_nine()}));
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    const bool ok = close(var_max.value, 80.0 / 3.0) && var_min.value == 0.0 && close(prod_max.value, prod_max_ref) &&
                    close(prod_min.value, prod_min_ref) && close(prod_min_ref, enumerated);
    char buf[240];
    std::snprintf(buf, sizeof buf, "var %.12g vs %.12g; product %.12g vs %.12g (sum i(10-i)/9 = %.12g)", var_max.value,
                  var_min.value, prod_max.value, prod_min.value, prod_min_ref);
    return {ok, buf};
}

Outcome spearman_d2() {
    const auto ext = spearman_extremes(2, 1.0 / 6.0);
    const auto r = spearman_range(2, 200, RaOptions{});
    const double gap = std::abs(r.min_product.value - 1.0 / 6.0);
    const bool ok = std::abs(ext.min + 1.0) <= 1e-12 && ext.max == 1.0 && gap <= kSpearmanTolerance;
    char buf[160];
    std::snprintf(buf, sizeof buf, "extremes (%.15g, %g); min-product at n=200 = %.8f (gap %.2e)", ext.min, ext.max,
                  r.min_product.value, gap);
    return {ok, buf};
}

Outcome pcm_existence() {
    const std::vector<Margin> bern(3, Margin::bernoulli(1.0 / 3.0));
    const auto check = pcm_check(bern);
    const auto m = pcm_construct(bern, 9);
    bool pairs = true;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            pairs = pairs && oracle::countermonotone_pairwise(m.column(a), m.column(b));
        }
    }
    bool sparse_rows = true;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        int nonzero = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            nonzero += m.at(i, j) != 0.0 ? 1 : 0;
        }
        sparse_rows = sparse_rows && nonzero <= 1;
    }
    const std::vector<Margin> unif(3, Margin::uniform(0.0, 1.0));
    const bool uniform_absent = !pcm_check(unif).exists;
    return {check.exists && pairs && sparse_rows && uniform_absent,
            "bernoulli exists=" + std::to_string(check.exists) + " pairwise-cm=" + std::to_string(pairs) +
                " <=1 nonzero per row=" + std::to_string(sparse_rows) + "; uniforms exist=" +
                std::to_string(!uniform_absent)};
}

Outcome property_suites() {
    const auto t0 = std::chrono::steady_clock::now();
    props::Tally total;
    total += props::column_multiset_preservation(11, 1500);
    total += props::ra_sweep_monotonicity(12, 1500);
    total += props::fixed_point_local_optimality(13, 1500);
    total += props::envelope_containment(14, 1500);
    total += props::galois_property(15, 4000);
    const double secs = seconds_since(t0);
    return {total.failures == 0 && total.cases >= kPropertyCases && secs < kPropertySeconds,
            std::to_string(total.cases) + " cases, " + std::to_string(total.failures) + " failures" +
                (total.note.empty() ? "" : " first: " + total.note)};
}

}  // namespace

int main() {
    criterion(1, "worst-VaR Pareto(2)x3 alpha=0.99 n=1e5", worst_var_pareto);
    criterion(2, "uniform joint mix on a shifted 9-point grid", uniform_joint_mix);
    criterion(3, "normal mixability threshold", normal_threshold);
    criterion(4, "d=2 RA equals 7! enumeration", d2_enumeration);
    criterion(5, "sigma-countermonotonicity and convex order", sigma_cm_suite);
    criterion(6, "supermodular extremes on {1..9}x2", supermodular_extremes);
    criterion(7, "Spearman range for d=2", spearman_d2);
    criterion(8, "pairwise countermonotone existence", pcm_existence);
    criterion(9, "randomized property suites", property_suites);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
