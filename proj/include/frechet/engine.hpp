#pragma once

#include "frechet/marginals.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frechet {

/// An n x d matrix whose columns are fixed multisets; each row carries mass 1/n.
///
/// The arrangement of values inside the columns is the dependence structure.
/// The sorted columns at construction are kept as provenance so that every
/// later rearrangement can be checked to be a pure permutation.
class RearrangementMatrix {
public:
    RearrangementMatrix() = default;
    explicit RearrangementMatrix(std::vector<std::vector<double>> columns);

    /// Columns taken from the grids in their stored (ascending) order.
    static RearrangementMatrix from_grids(std::span<const QuantileGrid> grids);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return columns_.size(); }
    [[nodiscard]] std::span<const double> column(std::size_t j) const { return columns_.at(j); }
    [[nodiscard]] const std::vector<std::vector<double>>& columns() const { return columns_; }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return columns_.at(col).at(row); }

    /// Correctly rounded row sums over all columns.
    [[nodiscard]] std::vector<double> row_sums() const;
    /// Row sums over every column except `skip`.
    [[nodiscard]] std::vector<double> row_sums_excluding(std::size_t skip) const;
    /// Row sums over the listed columns.
    [[nodiscard]] std::vector<double> row_sums_over(std::span<const std::size_t> subset) const;

    /// Replace column j by a permutation of itself. The permutation property is
    /// a precondition (verified in debug builds).
    void assign_column(std::size_t j, std::vector<double> values);
    /// Reorder column j so that new[i] = old[order[i]].
    void permute_column(std::size_t j, std::span<const std::size_t> order);

    /// Every column is a permutation of its provenance multiset (exact).
    [[nodiscard]] bool preserves_provenance() const;
    [[nodiscard]] std::span<const double> provenance(std::size_t j) const { return provenance_->at(j); }

private:
    std::size_t rows_ = 0;
    std::vector<std::vector<double>> columns_;
    std::shared_ptr<const std::vector<std::vector<double>>> provenance_;
};

enum class Direction { Minimize, Maximize };

enum class CostKind { VarianceOfSum, ConvexOfSum, Product, TailIndicator };

/// Declarative objective evaluated as a row average over a rearrangement matrix.
struct CostSpec {
    CostKind kind = CostKind::VarianceOfSum;
    Direction direction = Direction::Minimize;
    /// Convex function of the row sum (ConvexOfSum only). Convexity is declared, not verified.
    std::function<double(double)> convex;
    std::string label;
    /// Threshold of TailIndicator: objective is the fraction of rows with sum >= threshold.
    double threshold = 0.0;

    static CostSpec variance_of_sum(Direction d = Direction::Minimize);
    static CostSpec convex_of_sum(std::function<double(double)> f, std::string label,
                                  Direction d = Direction::Minimize);
    static CostSpec stop_loss(double strike, Direction d = Direction::Maximize);
    static CostSpec product(Direction d = Direction::Minimize);
    static CostSpec tail_indicator(double k, Direction d = Direction::Maximize);

    [[nodiscard]] std::string name() const;
};

/// Objective value of a matrix: row-average of the cost (population variance for VarianceOfSum).
[[nodiscard]] double evaluate(const RearrangementMatrix& matrix, const CostSpec& cost);

/// Spot-check midpoint convexity of a ConvexOfSum handle on sampled triples
/// inside [lo, hi]. Returns false on the first violation found.
[[nodiscard]] bool spot_check_convexity(const CostSpec& cost, double lo, double hi, std::uint64_t seed,
                                        std::size_t samples = 256);

struct RaOptions {
    std::size_t max_sweeps = 1000;
    std::size_t restarts = 20;
    std::uint64_t seed = 0;
    /// Stop a restart once a sweep improves the objective by no more than this
    /// (relative). 0 runs to the exact fixed point.
    double stall_tolerance = 0.0;
    /// Worker threads for restarts; 0 uses FRECHET_THREADS or the hardware count.
    unsigned threads = 0;
    /// Restart 0 starts from the input arrangement instead of a shuffle.
    bool keep_initial = false;
};

struct RaResult {
    RearrangementMatrix matrix;
    double objective = 0.0;
    std::size_t sweeps_used = 0;
    std::size_t restart_index = 0;
    /// The returned matrix is an exact fixed point of the sweep.
    bool converged = false;
    /// Objective after each sweep of the selected restart (nonincreasing), in
    /// units of the cost that drove the sweeps (log scale for Product).
    std::vector<double> trace;
};

/// Column whose values are arranged oppositely to `anchor`: the smallest anchor
/// value receives the largest column value. Anchor ties are filled with
/// ascending column values in index order.
[[nodiscard]] std::vector<double> oppositely_order(std::span<const double> column, std::span<const double> anchor);

/// Rearrangement Algorithm: from `restarts` seeded random starts, repeatedly
/// arrange each column oppositely to the sum of the others until a full sweep
/// changes nothing. Returns the best restart by (objective, restart index).
///
/// Supported costs: VarianceOfSum, ConvexOfSum and Product (minimize, strictly
/// positive entries). Product runs on log-transformed columns and maps the
/// arrangement back by rank.
[[nodiscard]] RaResult ra_minimize(const RearrangementMatrix& start, const CostSpec& cost, const RaOptions& opts);

/// Exact maximum of a supermodular cost: the comonotone arrangement.
[[nodiscard]] RaResult ra_maximize_supermodular(std::span<const QuantileGrid> grids, const CostSpec& cost);
[[nodiscard]] RaResult ra_maximize_supermodular(const RearrangementMatrix& matrix, const CostSpec& cost);

/// Whether (x_i - x_j)(y_i - y_j) <= 0 for every pair. Differences of at most
/// `tolerance` in either coordinate count as ties.
[[nodiscard]] bool is_countermonotonic(std::span<const double> x, std::span<const double> y, double tolerance = 0.0);

struct SigmaCmResult {
    bool ok = true;
    /// First split (0-based column indices) whose partial sums comove.
    std::optional<std::vector<std::size_t>> failing_subset;
};

/// Every split of the columns into I and its complement yields countermonotonic
/// partial row sums. Trivial splits are skipped; each split is visited once.
/// `relative_tolerance` scales with the largest absolute row sum and absorbs
/// rounding in the partial sums.
[[nodiscard]] SigmaCmResult is_sigma_countermonotonic(const RearrangementMatrix& matrix,
                                                      double relative_tolerance = 1e-12);

enum class ConvexOrder { LessOrEqual, NotLessOrEqual };

/// Convex order between two equal-weight samples via stop-loss dominance.
[[nodiscard]] ConvexOrder convex_order_leq(std::span<const double> a, std::span<const double> b);

/// Every column is oppositely ordered to the sum of the other columns.
[[nodiscard]] bool local_opt_check(const RearrangementMatrix& matrix);

}  // namespace frechet
