#pragma once

#include "frechet/bounds.hpp"
#include "frechet/couplings.hpp"
#include "frechet/engine.hpp"
#include "frechet/marginals.hpp"
#include "frechet/mixability.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace frechet {

/// Malformed or inconsistent configuration. Raised before any computation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Build a margin from {"family": ..., parameters..., "count": k}; parameters may
/// also be nested under "params". Relative `sample_file` paths resolve against
/// `base_dir`. Returns `count` copies.
[[nodiscard]] std::vector<Margin> parse_margin_spec(const nlohmann::json& spec,
                                                    const std::filesystem::path& base_dir = {});

/// Cost objects: {"kind": "variance"}, {"kind": "stop_loss", "strike": x},
/// {"kind": "product"}, {"kind": "power", "p": p} (|s|^p, p >= 1).
[[nodiscard]] CostSpec parse_cost_spec(const nlohmann::json& spec);

struct RunConfig {
    std::vector<Margin> margins;
    std::size_t n = 1000;
    std::optional<GridMode> grid_mode;
    std::uint64_t seed = 0;
    std::size_t restarts = 20;
    std::size_t max_sweeps = 1000;
    double tolerance = 1e-9;
    unsigned threads = 0;
    std::optional<double> alpha;
    std::optional<double> k;
    std::optional<CostSpec> cost;
    std::optional<std::string> kind;
    /// Dimension for the Spearman range (defaults to the number of margins, else 2).
    std::optional<std::size_t> d;
};

/// Parse a whole configuration document. Throws ConfigError.
[[nodiscard]] RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir = {});

// Matrices ------------------------------------------------------------------

/// One row per line, comma-separated, no header; values printed round-trip exact.
void write_matrix_csv(std::ostream& os, const RearrangementMatrix& m);
[[nodiscard]] RearrangementMatrix read_matrix_csv(std::istream& is);

/// {"n", "d", "columns": [[...], ...]} with columns major.
[[nodiscard]] nlohmann::json matrix_to_json(const RearrangementMatrix& m);
[[nodiscard]] RearrangementMatrix matrix_from_json(const nlohmann::json& j);

/// Plot data: header "u,f1,...,fd", then per row i the level (i + 0.5)/n and
/// each column's normalized rank (rank + 0.5)/n. Ties are ranked by row index.
void write_plot_csv(std::ostream& os, const RearrangementMatrix& m);

// Results -------------------------------------------------------------------

/// Finite doubles as numbers; infinities and NaN as null.
[[nodiscard]] nlohmann::json number_or_null(double x);

[[nodiscard]] nlohmann::json covariance_to_json(const CovarianceResult& r);
[[nodiscard]] nlohmann::json mix_report_to_json(const MixReport& r);
[[nodiscard]] nlohmann::json bound_result_to_json(const BoundResult& r);
[[nodiscard]] nlohmann::json pcm_to_json(const PcmExistence& r);
[[nodiscard]] nlohmann::json sigma_cm_to_json(const SigmaCmResult& r);

}  // namespace frechet
