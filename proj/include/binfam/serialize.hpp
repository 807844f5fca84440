#pragma once

// JSON documents for families, fit reports, chain statistics and experiment
// configurations. Matrices are arrays of rows.

#include <string>
#include <variant>

#include <json.hpp>

#include "binfam/bench.hpp"
#include "binfam/conditionals.hpp"
#include "binfam/gauss_copula.hpp"
#include "binfam/mh.hpp"
#include "binfam/moment_fit.hpp"
#include "binfam/quad_exp.hpp"

namespace binfam {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// {"kind": "conditionals", "dim", "link", "A"}
Json to_json(const ConditionalsFamily& family);
/// {"kind": "quadexp", "dim", "A"}
Json to_json(const QuadExpFamily& family);
/// {"kind": "gaussian-copula", "dim", "thresholds", "sigma", "repaired", "lambda"}
Json to_json(const CopulaFit& fit);
Json to_json(const GaussianCopulaFamily& family);

Json to_json(const FitReport& report);
Json to_json(const ChainStats& stats);
Json to_json(const ExperimentConfig& cfg);

using AnyFamily = std::variant<ConditionalsFamily, QuadExpFamily, GaussianCopulaFamily>;

/// Dispatches on "kind"; ArgumentError for unknown kinds or malformed fields.
AnyFamily family_from_json(const Json& j);

/// Missing keys keep their defaults; unknown keys are rejected. "rhos" is
/// either a list of levels or a count of equispaced levels on [0, 1].
ExperimentConfig experiment_config_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace binfam
