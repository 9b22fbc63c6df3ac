#include "support/generators.hpp"
#include "support/oracles.hpp"

#include "frechet/couplings.hpp"
#include "frechet/error.hpp"
#include "frechet/numeric.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace frechet;
using doctest::Approx;

namespace {

QuantileGrid grid_of(std::vector<double> v) {
    QuantileGrid g;
    std::sort(v.begin(), v.end());
    g.values = std::move(v);
    return g;
}

QuantileGrid one_to_nine() {
    std::vector<double> v(9);
    std::iota(v.begin(), v.end(), 1.0);
    return grid_of(v);
}

long double sum_of_squares(const RearrangementMatrix& m) {
    long double acc = 0;
    for (double s : m.row_sums()) {
        acc += static_cast<long double>(s) * s;
    }
    return acc;
}

}  // namespace

TEST_CASE("coupling kind names round trip") {
    for (auto k : {CouplingKind::Comonotone, CouplingKind::Countermonotone, CouplingKind::PairwiseCountermonotone,
                   CouplingKind::JointMix, CouplingKind::SigmaCountermonotone}) {
        CHECK(parse_coupling_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_coupling_kind("independent"), InvalidArgument);
}

TEST_CASE("comonotone examples") {
    const std::vector<QuantileGrid> two{one_to_nine(), one_to_nine()};
    const auto m = comonotone(two);
    const auto sums = m.row_sums();
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m.at(i, 0) == m.at(i, 1));
        CHECK(sums[i] == 2.0 * static_cast<double>(i + 1));
    }
    const std::vector<QuantileGrid> single{grid_of({3, 1, 2})};
    CHECK(comonotone(single).columns()[0] == std::vector<double>{1, 2, 3});
    const std::vector<QuantileGrid> scaled{one_to_nine(), grid_of({10, 20, 30, 40, 50, 60, 70, 80, 90})};
    const auto s = comonotone(scaled);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(s.at(i, 1) == 10.0 * s.at(i, 0));
    }
    const std::vector<QuantileGrid> mismatched{one_to_nine(), grid_of({1, 2})};
    CHECK_THROWS_AS((void)comonotone(mismatched), InvalidArgument);
}

TEST_CASE("countermonotone examples") {
    const auto m = countermonotone(one_to_nine(), one_to_nine());
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m.at(i, 0) + m.at(i, 1) == 10.0);
    }
    const auto u = discretize(Margin::uniform(0, 1), 4, GridMode::Midpoint);
    const auto w = countermonotone(u, u);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(w.at(i, 1) == 1.0 - w.at(i, 0));
    }
    const auto flat = countermonotone(grid_of({2, 2, 2}), grid_of({1, 5, 3}));
    CHECK(is_countermonotonic(flat.column(0), flat.column(1)));
    CHECK_THROWS_AS((void)countermonotone(one_to_nine(), grid_of({1})), InvalidArgument);
}

TEST_CASE("comonotone maximizes and countermonotone minimizes the sum of squared row sums") {
    gen::Rng rng(17);
    for (int c = 0; c < 10; ++c) {
        const auto n = static_cast<std::size_t>(gen::integer(rng, 2, 6));
        const std::vector<QuantileGrid> grids{grid_of(gen::column(rng, n)), grid_of(gen::column(rng, n))};
        const auto como = sum_of_squares(comonotone(grids));
        const auto counter = sum_of_squares(countermonotone(grids[0], grids[1]));
        auto perm = grids[1].values;
        do {
            const auto s = sum_of_squares(RearrangementMatrix({grids[0].values, perm}));
            CHECK(s <= como + 1e-9L);
            CHECK(s >= counter - 1e-9L);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    // Random shuffles for larger n.
    for (int c = 0; c < 50; ++c) {
        std::vector<QuantileGrid> grids;
        for (int j = 0; j < 3; ++j) {
            grids.push_back(grid_of(gen::column(rng, 30)));
        }
        const auto como = sum_of_squares(comonotone(grids));
        for (int k = 0; k < 200; ++k) {
            std::vector<std::vector<double>> cols;
            for (const auto& g : grids) {
                auto v = g.values;
                std::shuffle(v.begin(), v.end(), rng);
                cols.push_back(v);
            }
            CHECK(sum_of_squares(RearrangementMatrix(cols)) <= como + 1e-9L);
        }
    }
}

TEST_CASE("comonotone and countermonotone attain the Frechet bounds at grid points") {
    const auto g1 = discretize(Margin::normal(0, 1), 12, GridMode::Midpoint);
    const auto g2 = discretize(Margin::exponential(2), 12, GridMode::Midpoint);
    const std::vector<QuantileGrid> grids{g1, g2};
    const auto up = comonotone(grids);
    const auto down = countermonotone(g1, g2);
    for (std::size_t a = 0; a < 12; ++a) {
        for (std::size_t b = 0; b < 12; ++b) {
            const std::vector<double> x{g1.values[a], g2.values[b]};
            const double f1 = static_cast<double>(a + 1) / 12.0;
            const double f2 = static_cast<double>(b + 1) / 12.0;
            CHECK(oracle::empirical_joint_df(up, x) == Approx(std::min(f1, f2)));
            CHECK(oracle::empirical_joint_df(down, x) == Approx(std::max(f1 + f2 - 1.0, 0.0)));
        }
    }
}

TEST_CASE("pcm_check examples") {
    const std::vector<Margin> light(3, Margin::bernoulli(0.3));
    const auto a = pcm_check(light);
    CHECK(a.exists);
    CHECK(a.via == PcmRoute::AboveInfimum);
    CHECK(a.slack == Approx(0.1));

    const std::vector<Margin> uniforms(3, Margin::uniform(0, 1));
    CHECK_FALSE(pcm_check(uniforms).exists);
    CHECK(pcm_check(uniforms).via == PcmRoute::None);

    const std::vector<Margin> mixed{Margin::bernoulli(0.5), Margin::bernoulli(0.4), Margin::bernoulli(0.2)};
    const auto b = pcm_check(mixed);
    CHECK_FALSE(b.exists);
    CHECK(b.above_infimum_sum == Approx(1.1));
    CHECK(b.below_supremum_sum == Approx(1.9));

    const std::vector<Margin> heavy(3, Margin::bernoulli(0.8));
    const auto c = pcm_check(heavy);
    CHECK(c.exists);
    CHECK(c.via == PcmRoute::BelowSupremum);
    CHECK(c.slack == Approx(0.4));

    const std::vector<Margin> pair{Margin::uniform(0, 1), Margin::normal(0, 1)};
    CHECK(pcm_check(pair).via == PcmRoute::Pair);
    CHECK_FALSE(pcm_check(pair).note.empty());
}

TEST_CASE("pcm_construct block structure") {
    const std::vector<Margin> thirds(3, Margin::bernoulli(1.0 / 3.0));
    const auto m = pcm_construct(thirds, 9);
    for (std::size_t i = 0; i < 9; ++i) {
        int ones = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            ones += m.at(i, j) == 1.0 ? 1 : 0;
        }
        CHECK(ones == 1);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::count(m.column(j).begin(), m.column(j).end(), 1.0) == 3);
        for (std::size_t k = j + 1; k < 3; ++k) {
            CHECK(is_countermonotonic(m.column(j), m.column(k)));
        }
    }
    CHECK(is_sigma_countermonotonic(m).ok);

    const double masses[] = {0.2, 0.3, 0.5};
    CHECK(pcm_block_sizes(masses, 10) == std::vector<std::size_t>{2, 3, 5});
    const std::vector<Margin> split{Margin::bernoulli(0.2), Margin::bernoulli(0.3), Margin::bernoulli(0.5)};
    const auto s = pcm_construct(split, 10);
    CHECK(std::count(s.column(2).begin(), s.column(2).end(), 1.0) == 5);

    const std::vector<Margin> with_constant{Margin::bernoulli(0.4), Margin::discrete_uniform({2.0}),
                                            Margin::bernoulli(0.5)};
    const auto k = pcm_construct(with_constant, 10);
    CHECK(std::all_of(k.column(1).begin(), k.column(1).end(), [](double v) { return v == 2.0; }));
    CHECK(is_countermonotonic(k.column(0), k.column(2)));

    const std::vector<Margin> uniforms(3, Margin::uniform(0, 1));
    CHECK_THROWS_AS((void)pcm_construct(uniforms, 9), Infeasible);
    const std::vector<Margin> tiny{Margin::bernoulli(0.01), Margin::bernoulli(0.01), Margin::bernoulli(0.01)};
    CHECK_THROWS_AS((void)pcm_construct(tiny, 10), Infeasible);
}

TEST_CASE("pcm_construct by reflection at the suprema") {
    const std::vector<Margin> heavy(3, Margin::bernoulli(0.8));
    const auto m = pcm_construct(heavy, 10);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::count(m.column(j).begin(), m.column(j).end(), 0.0) == 2);
        for (std::size_t k = j + 1; k < 3; ++k) {
            CHECK(is_countermonotonic(m.column(j), m.column(k)));
        }
    }
    for (std::size_t i = 0; i < 10; ++i) {
        int zeros = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            zeros += m.at(i, j) == 0.0 ? 1 : 0;
        }
        CHECK(zeros <= 1);
    }
}

TEST_CASE("pcm_construct output is pairwise and sigma countermonotonic on random feasible inputs") {
    gen::Rng rng(41);
    int built = 0;
    for (int c = 0; c < 300; ++c) {
        const auto d = static_cast<std::size_t>(gen::integer(rng, 3, 5));
        std::vector<Margin> margins;
        for (std::size_t j = 0; j < d; ++j) {
            const double p = gen::uniform(rng, 0.0, 1.0);
            margins.push_back(c % 2 == 0 ? Margin::bernoulli(p / static_cast<double>(d))
                                         : Margin::binomial(gen::integer(rng, 1, 4), 1.0 - p / (4.0 * static_cast<double>(d))));
        }
        if (!pcm_check(margins).exists) {
            continue;
        }
        RearrangementMatrix m;
        try {
            m = pcm_construct(margins, 200);
        } catch (const Infeasible&) {
            continue;
        }
        ++built;
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = j + 1; k < d; ++k) {
                CHECK(is_countermonotonic(m.column(j), m.column(k)));
            }
        }
        CHECK(is_sigma_countermonotonic(m).ok);
    }
    CHECK(built > 100);
}

TEST_CASE("normal joint mix covariance") {
    const double ones[] = {1, 1, 1};
    const auto a = normal_joint_mix_cov(ones);
    REQUIRE(a.feasible);
    CHECK((*a.covariance)[0][1] == -0.5);
    CHECK((*a.covariance)[1][2] == -0.5);

    const double wide[] = {3, 1, 1};
    const auto b = normal_joint_mix_cov(wide);
    CHECK_FALSE(b.feasible);
    CHECK(b.violated.find('6') != std::string::npos);

    const double edge[] = {2, 1, 1};
    const auto c = normal_joint_mix_cov(edge);
    REQUIRE(c.feasible);
    CHECK(std::abs(min_eigenvalue(*c.covariance)) <= 1e-12);

    const double bad[] = {1, 0, 1};
    CHECK_THROWS_AS((void)normal_joint_mix_cov(bad), InvalidArgument);
}

TEST_CASE("feasible normal joint mixes are PSD with zero-variance sums") {
    gen::Rng rng(4);
    int feasible = 0;
    for (int c = 0; c < 2000; ++c) {
        const double s[] = {gen::uniform(rng, 0.1, 3), gen::uniform(rng, 0.1, 3), gen::uniform(rng, 0.1, 3)};
        const auto r = normal_joint_mix_cov(s);
        if (!r.feasible) {
            CHECK(2 * std::max({s[0], s[1], s[2]}) > s[0] + s[1] + s[2]);
            continue;
        }
        ++feasible;
        const auto& cov = *r.covariance;
        CHECK(min_eigenvalue(cov) >= -1e-10);
        const double scale = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(cov[i][0] + cov[i][1] + cov[i][2]) <= 1e-12 * scale);
            for (int j = 0; j < 3; ++j) {
                CHECK(cov[i][j] == cov[j][i]);
            }
        }
    }
    CHECK(feasible > 500);
}

TEST_CASE("sigma-countermonotone normal solutions") {
    const double ones[] = {1, 1, 1};
    CHECK(sigma_cm_normal_solutions(ones).size() == 2);
    const double wide[] = {3, 1, 1};
    const auto only = sigma_cm_normal_solutions(wide);
    REQUIRE(only.size() == 1);
    CHECK(only[0][0][1] == -3.0);
    CHECK(only[0][1][2] == 1.0);
    CHECK(min_eigenvalue(only[0]) >= -1e-10);
    const double edge[] = {2, 1, 1};
    const auto both = sigma_cm_normal_solutions(edge);
    REQUIRE(both.size() == 2);
    CHECK(std::abs(min_eigenvalue(both[1])) <= 1e-12);
    const double unsorted[] = {1, 2, 1};
    CHECK_THROWS_AS((void)sigma_cm_normal_solutions(unsorted), InvalidArgument);
}
