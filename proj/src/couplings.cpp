#include "frechet/couplings.hpp"

#include "frechet/error.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace frechet {

std::string_view to_string(CouplingKind kind) {
    switch (kind) {
        case CouplingKind::Comonotone: return "comonotone";
        case CouplingKind::Countermonotone: return "countermonotone";
        case CouplingKind::PairwiseCountermonotone: return "pairwise-countermonotone";
        case CouplingKind::JointMix: return "joint-mix";
        case CouplingKind::SigmaCountermonotone: return "sigma-countermonotone";
    }
    return "unknown";
}

CouplingKind parse_coupling_kind(std::string_view text) {
    for (auto k : {CouplingKind::Comonotone, CouplingKind::Countermonotone, CouplingKind::PairwiseCountermonotone,
                   CouplingKind::JointMix, CouplingKind::SigmaCountermonotone}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    throw InvalidArgument("unknown coupling kind '" + std::string(text) + "'");
}

std::string_view to_string(PcmRoute route) {
    switch (route) {
        case PcmRoute::None: return "none";
        case PcmRoute::AboveInfimum: return "above-infimum";
        case PcmRoute::BelowSupremum: return "below-supremum";
        case PcmRoute::Pair: return "pair";
    }
    return "unknown";
}

RearrangementMatrix comonotone(std::span<const QuantileGrid> grids) {
    if (grids.empty()) {
        throw InvalidArgument("comonotone: need at least one grid");
    }
    std::vector<std::vector<double>> cols;
    for (const auto& g : grids) {
        if (g.size() != grids.front().size()) {
            throw InvalidArgument("comonotone: grids must share n");
        }
        auto c = g.values;
        std::sort(c.begin(), c.end());
        cols.push_back(std::move(c));
    }
    return RearrangementMatrix(std::move(cols));
}

RearrangementMatrix countermonotone(const QuantileGrid& first, const QuantileGrid& second) {
    if (first.size() != second.size()) {
        throw InvalidArgument("countermonotone: grids must share n");
    }
    auto up = first.values;
    auto down = second.values;
    std::sort(up.begin(), up.end());
    std::sort(down.begin(), down.end(), std::greater<>());
    return RearrangementMatrix({std::move(up), std::move(down)});
}

PcmExistence pcm_check(std::span<const Margin> margins) {
    PcmExistence r;
    for (const auto& m : margins) {
        const auto s = m.summary();
        r.above_infimum_sum += m.is_degenerate() ? 0.0 : s.zero_mass;
        r.below_supremum_sum += m.is_degenerate() ? 0.0 : s.top_left_limit;
        if (!m.is_degenerate()) {
            ++r.nondegenerate;
        }
    }
    if (r.nondegenerate <= 2) {
        r.exists = true;
        r.via = PcmRoute::Pair;
        r.note = margins.size() <= 2 ? "two margins: pairwise countermonotonicity is countermonotonicity"
                                     : "at most two nondegenerate margins: degenerate columns are free constants";
        return r;
    }
    const double tol = 1e-12 * static_cast<double>(margins.size());
    if (r.above_infimum_sum <= 1.0 + tol) {
        r.exists = true;
        r.via = PcmRoute::AboveInfimum;
        r.slack = std::max(0.0, 1.0 - r.above_infimum_sum);
    } else if (r.below_supremum_sum <= 1.0 + tol) {
        r.exists = true;
        r.via = PcmRoute::BelowSupremum;
        r.slack = std::max(0.0, 1.0 - r.below_supremum_sum);
    } else {
        r.slack = 1.0 - r.above_infimum_sum;
    }
    return r;
}

std::vector<std::size_t> pcm_block_sizes(std::span<const double> masses, std::size_t n) {
    const double total_mass = std::accumulate(masses.begin(), masses.end(), 0.0);
    const auto nd = static_cast<double>(n);
    const auto target = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(nd * total_mass)));
    std::vector<std::size_t> sizes(masses.size());
    std::vector<double> remainder(masses.size());
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < masses.size(); ++j) {
        const double exact = nd * masses[j];
        sizes[j] = static_cast<std::size_t>(std::floor(exact));
        remainder[j] = exact - std::floor(exact);
        assigned += sizes[j];
    }
    std::vector<std::size_t> order(masses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; k < order.size() && assigned < target; ++k) {
        if (masses[order[k]] > 0.0) {
            ++sizes[order[k]];
            ++assigned;
        }
    }
    return sizes;
}

namespace {

struct BlockSpec {
    double infimum = 0.0;
    double mass = 0.0;
    std::function<double(double)> quantile;
};

// Column j holds its values above the infimum in its own block of rows and
// the infimum everywhere else.
std::vector<std::vector<double>> build_blocks(const std::vector<BlockSpec>& specs, std::size_t n) {
    std::vector<double> masses;
    for (const auto& s : specs) {
        masses.push_back(s.mass);
    }
    const auto sizes = pcm_block_sizes(masses, n);
    std::vector<std::vector<double>> cols;
    std::size_t start = 0;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const auto& s = specs[j];
        if (s.mass > 0.0 && sizes[j] == 0) {
            throw Infeasible("pcm_construct: n = " + std::to_string(n) + " is too small to resolve the block of column " +
                             std::to_string(j + 1));
        }
        std::vector<double> col(n, s.infimum);
        for (std::size_t i = 0; i < sizes[j]; ++i) {
            const double u = 1.0 - s.mass + s.mass * (static_cast<double>(i) + 0.5) / static_cast<double>(sizes[j]);
            const double v = s.quantile(u);
            if (!std::isfinite(v)) {
                throw Infeasible("pcm_construct: unbounded values inside a block");
            }
            col[start + i] = v;
        }
        start += sizes[j];
        cols.push_back(std::move(col));
    }
    return cols;
}

}  // namespace

RearrangementMatrix pcm_construct(std::span<const Margin> margins, std::size_t n) {
    if (n == 0) {
        throw InvalidArgument("pcm_construct: n must be positive");
    }
    const auto check = pcm_check(margins);
    if (!check.exists) {
        throw Infeasible("pcm_construct: margins admit no pairwise countermonotonic coupling");
    }
    const std::size_t d = margins.size();

    if (check.via == PcmRoute::Pair) {
        std::vector<std::vector<double>> cols(d);
        bool first_pair_member = true;
        for (std::size_t j = 0; j < d; ++j) {
            if (margins[j].is_degenerate()) {
                cols[j].assign(n, margins[j].quantile(0.0));
                continue;
            }
            auto g = discretize(margins[j], n, GridMode::Midpoint).values;
            if (!first_pair_member) {
                std::reverse(g.begin(), g.end());
            }
            first_pair_member = false;
            cols[j] = std::move(g);
        }
        return RearrangementMatrix(std::move(cols));
    }

    std::vector<BlockSpec> specs;
    specs.reserve(d);
    const bool reflect = check.via == PcmRoute::BelowSupremum;
    for (const auto& m : margins) {
        const auto s = m.summary();
        BlockSpec b;
        if (m.is_degenerate()) {
            b.infimum = reflect ? -s.upper : s.lower;
            b.mass = 0.0;
        } else if (!reflect) {
            b.infimum = s.lower;
            b.mass = s.zero_mass;
            b.quantile = [&m](double u) { return m.quantile(u); };
        } else {
            // Mirror image: -X has its infimum at -sup X with mass F(sup X -) above it.
            b.infimum = -s.upper;
            b.mass = s.top_left_limit;
            b.quantile = [&m](double u) { return -m.quantile(1.0 - u); };
        }
        if (!std::isfinite(b.infimum)) {
            throw Infeasible("pcm_construct: unbounded essential bound on the constructing side");
        }
        specs.push_back(std::move(b));
    }
    auto cols = build_blocks(specs, n);
    if (reflect) {
        for (auto& c : cols) {
            for (double& v : c) {
                v = -v;
            }
        }
    }
    return RearrangementMatrix(std::move(cols));
}

namespace {

void require_three_positive(std::span<const double> sigmas) {
    if (sigmas.size() != 3) {
        throw InvalidArgument("need exactly three standard deviations");
    }
    for (double s : sigmas) {
        if (!(std::isfinite(s) && s > 0.0)) {
            throw InvalidArgument("standard deviations must be positive");
        }
    }
}

Covariance3 joint_mix_matrix(double s1, double s2, double s3) {
    const double v1 = s1 * s1;
    const double v2 = s2 * s2;
    const double v3 = s3 * s3;
    const double c12 = 0.5 * (v3 - v1 - v2);
    const double c13 = 0.5 * (v2 - v1 - v3);
    const double c23 = 0.5 * (v1 - v2 - v3);
    return {{{v1, c12, c13}, {c12, v2, c23}, {c13, c23, v3}}};
}

}  // namespace

CovarianceResult normal_joint_mix_cov(std::span<const double> sigmas) {
    require_three_positive(sigmas);
    CovarianceResult r;
    const double largest = std::max({sigmas[0], sigmas[1], sigmas[2]});
    const double total = sigmas[0] + sigmas[1] + sigmas[2];
    if (2.0 * largest > total) {
        std::ostringstream os;
        os << "2*max(sigma) = " << 2.0 * largest << " > sum(sigma) = " << total;
        r.violated = os.str();
        return r;
    }
    r.feasible = true;
    r.covariance = joint_mix_matrix(sigmas[0], sigmas[1], sigmas[2]);
    return r;
}

std::vector<Covariance3> sigma_cm_normal_solutions(std::span<const double> sigmas) {
    require_three_positive(sigmas);
    const double s1 = sigmas[0];
    const double s2 = sigmas[1];
    const double s3 = sigmas[2];
    if (!(s1 >= s2 && s2 >= s3)) {
        throw InvalidArgument("sigma_cm_normal_solutions: sigmas must be sorted in decreasing order");
    }
    std::vector<Covariance3> out;
    out.push_back({{{s1 * s1, -s1 * s2, -s1 * s3}, {-s1 * s2, s2 * s2, s2 * s3}, {-s1 * s3, s2 * s3, s3 * s3}}});
    if (s1 <= s2 + s3) {
        out.push_back(joint_mix_matrix(s1, s2, s3));
    }
    return out;
}

double min_eigenvalue(const Covariance3& c) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            m(i, j) = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace frechet
