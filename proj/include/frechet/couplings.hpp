#pragma once

#include "frechet/engine.hpp"
#include "frechet/marginals.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frechet {

enum class CouplingKind { Comonotone, Countermonotone, PairwiseCountermonotone, JointMix, SigmaCountermonotone };

[[nodiscard]] std::string_view to_string(CouplingKind kind);
[[nodiscard]] CouplingKind parse_coupling_kind(std::string_view text);

/// Sort every column ascending (all columns similarly ordered).
[[nodiscard]] RearrangementMatrix comonotone(std::span<const QuantileGrid> grids);

/// First column ascending, second descending.
[[nodiscard]] RearrangementMatrix countermonotone(const QuantileGrid& first, const QuantileGrid& second);

enum class PcmRoute {
    None,
    /// Mass above the essential infima sums to at most one.
    AboveInfimum,
    /// Mass below the essential suprema sums to at most one.
    BelowSupremum,
    /// At most two nondegenerate margins: plain countermonotone pair.
    Pair,
};

[[nodiscard]] std::string_view to_string(PcmRoute route);

struct PcmExistence {
    bool exists = false;
    PcmRoute via = PcmRoute::None;
    /// 1 minus the sum of the condition that holds (or of the above-infimum sum when none holds).
    double slack = 0.0;
    double above_infimum_sum = 0.0;
    double below_supremum_sum = 0.0;
    std::size_t nondegenerate = 0;
    std::string note;
};

/// Existence of a pairwise countermonotonic vector with the given margins.
[[nodiscard]] PcmExistence pcm_check(std::span<const Margin> margins);

/// n-row pairwise countermonotonic matrix: disjoint row blocks in which one
/// column carries its values above the essential infimum while every other
/// column sits at its infimum (mirrored at the suprema for the second route).
[[nodiscard]] RearrangementMatrix pcm_construct(std::span<const Margin> margins, std::size_t n);

/// Block sizes of pcm_construct for masses q_j and n rows (largest remainder).
[[nodiscard]] std::vector<std::size_t> pcm_block_sizes(std::span<const double> masses, std::size_t n);

using Covariance3 = std::array<std::array<double, 3>, 3>;

struct CovarianceResult {
    bool feasible = false;
    std::optional<Covariance3> covariance;
    /// Human-readable statement of the violated inequality when infeasible.
    std::string violated;
};

/// Covariance of a trivariate centered normal joint mix with the given standard
/// deviations, if one exists (twice the largest sd at most the sum of all three).
[[nodiscard]] CovarianceResult normal_joint_mix_cov(std::span<const double> sigmas);

/// Covariance matrices making a trivariate normal with sds sigma_1 >= sigma_2 >= sigma_3
/// sigma-countermonotonic: the one-against-two solution always, the joint mix when it exists.
[[nodiscard]] std::vector<Covariance3> sigma_cm_normal_solutions(std::span<const double> sigmas);

/// Smallest eigenvalue of a symmetric 3x3 matrix.
[[nodiscard]] double min_eigenvalue(const Covariance3& c);

}  // namespace frechet
