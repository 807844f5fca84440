#include "binfam/serialize.hpp"

#include <fstream>
#include <set>

namespace binfam {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ArgumentError("JSON matrix: expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto cols = j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ArgumentError("JSON matrix: rows must be arrays of equal length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw ArgumentError("JSON matrix: entries must be numbers");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

namespace {

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ArgumentError("JSON vector: expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ArgumentError("JSON vector: entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ArgumentError(std::string("JSON: missing field '") + key + "'");
  return j.at(key);
}

void check_dim(const Json& j, Eigen::Index actual) {
  if (j.contains("dim") && j.at("dim").get<Eigen::Index>() != actual)
    throw ArgumentError("JSON: 'dim' disagrees with the parameter matrix");
}

}  // namespace

Json to_json(const ConditionalsFamily& family) {
  return {{"kind", "conditionals"},
          {"dim", family.dim()},
          {"link", std::string(family.link().name())},
          {"A", matrix_to_json(family.params())}};
}

Json to_json(const QuadExpFamily& family) {
  return {{"kind", "quadexp"}, {"dim", family.dim()}, {"A", matrix_to_json(family.params())}};
}

Json to_json(const GaussianCopulaFamily& family) {
  return {{"kind", "gaussian-copula"},
          {"dim", family.dim()},
          {"thresholds", vector_to_json(family.thresholds())},
          {"sigma", matrix_to_json(family.latent_corr())}};
}

Json to_json(const CopulaFit& fit) {
  Json j = to_json(fit.family);
  j["repaired"] = fit.repaired;
  j["lambda"] = fit.lambda;
  Json pairs = Json::array();
  for (auto [i, k] : fit.boundary_pairs) pairs.push_back({i, k});
  j["boundary_pairs"] = std::move(pairs);
  return j;
}

Json to_json(const FitReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"status", std::string(to_string(r.status))},
                    {"iterations", r.iterations},
                    {"residual", r.residual},
                    {"lambda", r.lambda}});
  return {{"rows", std::move(rows)}, {"min_lambda", report.min_lambda()}, {"wall_seconds", report.wall_seconds}};
}

Json to_json(const ChainStats& stats) {
  return {{"acceptance_rate", stats.acceptance_rate},
          {"count", stats.count},
          {"mean", vector_to_json(stats.mean)},
          {"lag1_autocov", matrix_to_json(stats.lag1_autocov)}};
}

Json to_json(const ExperimentConfig& cfg) {
  Json families = Json::array();
  for (auto f : cfg.families) families.push_back(std::string(to_string(f)));
  return {{"dims", cfg.dims},
          {"rhos", cfg.rhos},
          {"matrices_per_cell", cfg.matrices_per_cell},
          {"families", std::move(families)},
          {"n_fit", cfg.n_fit},
          {"n_est", cfg.n_est},
          {"norm", std::string(to_string(cfg.norm))},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"exact_max_dim", cfg.exact_max_dim},
          {"permutation_steps", cfg.permutation_steps},
          {"sweeps", cfg.sweeps}};
}

AnyFamily family_from_json(const Json& j) {
  try {
    const std::string kind = field(j, "kind").get<std::string>();
    if (kind == "conditionals") {
      Matrix a = matrix_from_json(field(j, "A"));
      check_dim(j, a.rows());
      const LinkFunction link = j.contains("link") ? LinkFunction::parse(j.at("link").get<std::string>())
                                                   : LinkFunction(LinkKind::logistic);
      return ConditionalsFamily(std::move(a), link);
    }
    if (kind == "quadexp") {
      Matrix a = matrix_from_json(field(j, "A"));
      check_dim(j, a.rows());
      return QuadExpFamily(std::move(a));
    }
    if (kind == "gaussian-copula") {
      Vector t = vector_from_json(field(j, "thresholds"));
      check_dim(j, t.size());
      return GaussianCopulaFamily(std::move(t), matrix_from_json(field(j, "sigma")));
    }
    throw ArgumentError("JSON family: unknown kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("JSON family: ") + e.what());
  }
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ArgumentError("experiment config: expected a JSON object");
  static const std::set<std::string> known{"dims",   "rhos",    "matrices_per_cell", "families",
                                           "n_fit",  "n_est",   "norm",              "seed",
                                           "workers", "exact_max_dim", "permutation_steps", "sweeps"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ArgumentError("experiment config: unknown key '" + key + "'");

  ExperimentConfig cfg;
  try {
    if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<int>>();
    if (j.contains("rhos")) {
      const Json& r = j.at("rhos");
      cfg.rhos = r.is_number_integer() ? ExperimentConfig::equispaced(r.get<int>()) : r.get<std::vector<double>>();
    }
    if (j.contains("matrices_per_cell")) cfg.matrices_per_cell = j.at("matrices_per_cell").get<int>();
    if (j.contains("families")) {
      cfg.families.clear();
      for (const auto& f : j.at("families")) cfg.families.push_back(parse_family_kind(f.get<std::string>()));
    }
    if (j.contains("n_fit")) cfg.n_fit = j.at("n_fit").get<std::size_t>();
    if (j.contains("n_est")) cfg.n_est = j.at("n_est").get<std::size_t>();
    if (j.contains("norm")) cfg.norm = parse_norm(j.at("norm").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("exact_max_dim")) cfg.exact_max_dim = j.at("exact_max_dim").get<int>();
    if (j.contains("permutation_steps")) cfg.permutation_steps = j.at("permutation_steps").get<int>();
    if (j.contains("sweeps")) cfg.sweeps = j.at("sweeps").get<int>();
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ArgumentError("'" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace binfam
