#include "binfam/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "binfam/conditionals.hpp"
#include "binfam/format.hpp"
#include "binfam/gauss_copula.hpp"
#include "binfam/moment_fit.hpp"
#include "binfam/momgen.hpp"
#include "binfam/rng.hpp"

namespace binfam {

MatrixNorm parse_norm(std::string_view name) {
  if (name == "spectral") return MatrixNorm::spectral;
  if (name == "frobenius") return MatrixNorm::frobenius;
  throw ArgumentError("unknown norm '" + std::string(name) + "'");
}

std::string_view to_string(MatrixNorm norm) { return norm == MatrixNorm::spectral ? "spectral" : "frobenius"; }

double spectral_norm(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double matrix_norm(const Matrix& x, MatrixNorm norm) { return norm == MatrixNorm::spectral ? spectral_norm(x) : x.norm(); }

}  // namespace

double figure_of_merit(const Matrix& m, const Matrix& mq, MatrixNorm norm) {
  if (m.rows() != m.cols() || mq.rows() != m.rows() || mq.cols() != m.cols())
    throw ArgumentError("figure_of_merit: matrices must be square of equal size");
  const Vector mean = m.diagonal();
  Matrix star = mean * mean.transpose();
  star.diagonal() = mean;
  const double base = matrix_norm(m - star, norm);
  if (!(base > 1e-15)) throw UndefinedMeritError("figure_of_merit: target has no dependence (M = M*)");
  return (base - matrix_norm(m - mq, norm)) / base;
}

FamilyKind parse_family_kind(std::string_view name) {
  if (name == "logistic") return FamilyKind::logistic;
  if (name == "truncated-linear" || name == "linear") return FamilyKind::truncated_linear;
  if (name == "gaussian-copula" || name == "gaussian") return FamilyKind::gaussian_copula;
  throw ArgumentError("unknown family '" + std::string(name) + "'");
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::logistic: return "logistic";
    case FamilyKind::truncated_linear: return "truncated-linear";
    case FamilyKind::gaussian_copula: return "gaussian-copula";
  }
  return "?";
}

std::vector<double> ExperimentConfig::equispaced(int n) {
  if (n < 1) throw ArgumentError("difficulty grid needs at least one level");
  if (n == 1) return {0.0};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n - 1);
  return out;
}

void ExperimentConfig::validate() const {
  if (dims.empty()) throw ArgumentError("experiment: no dimensions");
  for (int d : dims)
    if (d < 2) throw ArgumentError("experiment: dimensions must be >= 2");
  if (rhos.empty()) throw ArgumentError("experiment: empty difficulty grid");
  for (double r : rhos)
    if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("experiment: difficulty levels must lie in [0, 1]");
  if (matrices_per_cell < 1) throw ArgumentError("experiment: matrices per cell must be >= 1");
  if (families.empty()) throw ArgumentError("experiment: no families selected");
  if (n_fit < 1 || n_est < 1) throw ArgumentError("experiment: sample sizes must be >= 1");
  if (workers < 1) throw ArgumentError("experiment: workers must be >= 1");
  if (exact_max_dim < 1 || exact_max_dim > kEnumerationCap)
    throw ArgumentError("experiment: exact_max_dim must lie in [1, enumeration cap]");
  if (permutation_steps < 0 || sweeps < 1) throw ArgumentError("experiment: bad generator settings");
}

std::uint64_t matrix_seed(std::uint64_t base, int d, int rho_index, int matrix_index) {
  return derive_seed(base, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(rho_index),
                            static_cast<std::uint64_t>(matrix_index)});
}

namespace {

struct Achieved {
  Matrix mq;
  double lambda_min;
  bool repaired;
};

Achieved fit_family(const ExperimentConfig& cfg, const CrossMomentMatrix& m, FamilyKind kind, std::uint64_t seed) {
  const int d = m.dim();
  const bool exact = d <= cfg.exact_max_dim;
  Rng rng(seed);
  if (kind == FamilyKind::gaussian_copula) {
    const CopulaFit fit = fit_gc(m);
    return {gc_moments(fit.family), std::numeric_limits<double>::quiet_NaN(), fit.repaired};
  }
  FitConfig fc;
  fc.estimator = exact ? Estimator::exact : Estimator::monte_carlo;
  fc.mc_samples = cfg.n_fit;
  fc.exact_max_dim = cfg.exact_max_dim;
  const LinkFunction link(kind == FamilyKind::logistic ? LinkKind::logistic : LinkKind::truncated_linear);
  const FitResult res = fit(m, link, fc, rng);
  const MomentEstimator est = exact ? MomentEstimator::exact() : MomentEstimator::monte_carlo(cfg.n_est);
  return {family_moments(res.family, est, rng), res.report.min_lambda(), false};
}

std::vector<ExperimentRecord> run_task(const ExperimentConfig& cfg, int d, int rho_index, int matrix_index) {
  const double rho = cfg.rhos[static_cast<std::size_t>(rho_index)];
  const std::uint64_t seed = matrix_seed(cfg.seed, d, rho_index, matrix_index);
  std::vector<ExperimentRecord> out;
  out.reserve(cfg.families.size());

  std::optional<CrossMomentMatrix> m;
  std::string gen_error;
  try {
    GenConfig gc;
    gc.dim = d;
    gc.rho = rho;
    gc.permutation_steps = cfg.permutation_steps;
    gc.sweeps = cfg.sweeps;
    gc.seed = seed;
    m.emplace(random_cross_moment_matrix(gc));
  } catch (const std::exception& e) {
    gen_error = std::string("generator: ") + e.what();
  }

  for (FamilyKind kind : cfg.families) {
    ExperimentRecord r;
    r.d = d;
    r.rho = rho;
    r.family = kind;
    r.matrix_index = matrix_index;
    r.seed = seed;
    r.lambda_min = std::numeric_limits<double>::quiet_NaN();
    r.tau = std::numeric_limits<double>::quiet_NaN();
    const auto t0 = std::chrono::steady_clock::now();
    if (!m) {
      r.error = gen_error;
      r.hard_failure = true;
    } else {
      try {
        const Achieved a = fit_family(cfg, *m, kind, derive_seed(seed, {static_cast<std::uint64_t>(kind) + 1}));
        r.lambda_min = a.lambda_min;
        r.repaired = a.repaired;
        r.tau = figure_of_merit(m->matrix(), a.mq, cfg.norm);
      } catch (const UndefinedMeritError& e) {
        r.error = e.what();
      } catch (const std::exception& e) {
        r.error = e.what();
        r.hard_failure = true;
      }
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

auto record_key(const ExperimentRecord& r) { return std::make_tuple(r.d, r.rho, static_cast<int>(r.family), r.matrix_index); }

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    int d, rho_index, matrix_index;
  };
  std::vector<Task> tasks;
  for (int d : cfg.dims)
    for (int ri = 0; ri < static_cast<int>(cfg.rhos.size()); ++ri)
      for (int k = 0; k < cfg.matrices_per_cell; ++k) tasks.push_back({d, ri, k});

  std::vector<std::vector<ExperimentRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();)
      results[t] = run_task(cfg, tasks[t].d, tasks[t].rho_index, tasks[t].matrix_index);
  };
  const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  std::vector<ExperimentRecord> records;
  for (auto& batch : results)
    for (auto& r : batch) records.push_back(std::move(r));
  std::stable_sort(records.begin(), records.end(),
                   [](const ExperimentRecord& a, const ExperimentRecord& b) { return record_key(a) < record_key(b); });
  return records;
}

// ---------------------------------------------------------------------------

std::vector<QuantileBand> aggregate_quantiles(const std::vector<ExperimentRecord>& records, int n_omega,
                                              std::vector<std::string>* warnings) {
  if (n_omega < 2) throw ArgumentError("aggregate_quantiles: needs at least two quantile levels");
  std::map<std::tuple<int, int, double>, std::vector<double>> cells;
  for (const auto& r : records) {
    auto& cell = cells[{static_cast<int>(r.family), r.d, r.rho}];
    if (std::isfinite(r.tau)) cell.push_back(r.tau);
  }

  std::vector<QuantileBand> out;
  for (auto& [key, taus] : cells) {
    const auto family = static_cast<FamilyKind>(std::get<0>(key));
    if (taus.empty()) {
      if (warnings)
        warnings->push_back("no finite tau for family " + std::string(to_string(family)) + ", d = " +
                            std::to_string(std::get<1>(key)) + ", rho = " + format_double(std::get<2>(key)));
      continue;
    }
    std::sort(taus.begin(), taus.end());
    const std::size_t n = taus.size();
    QuantileBand band{family, std::get<1>(key), std::get<2>(key), n, 0.0, {}, {}};
    band.median = n % 2 ? taus[n / 2] : 0.5 * (taus[n / 2 - 1] + taus[n / 2]);
    const auto nd = static_cast<double>(n);
    auto at = [&](double one_based) {
      const auto k = std::clamp(static_cast<std::size_t>(std::max(one_based, 1.0)), std::size_t{1}, n);
      return taus[k - 1];
    };
    for (int k = 0; k < n_omega; ++k) {
      const double w = 0.5 * k / (n_omega - 1);
      band.omega.push_back(w);
      band.bounds.emplace_back(at(std::floor((0.5 - w) * nd)), at(std::ceil((0.5 + w) * nd)));
    }
    out.push_back(std::move(band));
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records)
    out << r.d << ',' << format_double(r.rho) << ',' << to_string(r.family) << ',' << r.matrix_index << ','
        << format_double(r.tau) << ',' << format_double(r.lambda_min) << ',' << (r.repaired ? 1 : 0) << ','
        << r.seed << '\n';
}

void write_csv_file(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_csv(out, records);
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

namespace {

template <class Int>
Int parse_int(std::string_view text) {
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ArgumentError("not an integer: '" + std::string(text) + "'");
  return v;
}

}  // namespace

std::vector<ExperimentRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ArgumentError("CSV: unexpected header '" + line + "'");
  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 8) throw ArgumentError("CSV line " + std::to_string(lineno) + ": expected 8 fields");
    ExperimentRecord r;
    r.d = parse_int<int>(f[0]);
    r.rho = parse_double(f[1]);
    r.family = parse_family_kind(f[2]);
    r.matrix_index = parse_int<int>(f[3]);
    r.tau = parse_double(f[4]);
    r.lambda_min = parse_double(f[5]);
    const int rep = parse_int<int>(f[6]);
    if (rep != 0 && rep != 1) throw ArgumentError("CSV line " + std::to_string(lineno) + ": repaired must be 0 or 1");
    r.repaired = rep == 1;
    r.seed = parse_int<std::uint64_t>(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kWidth = 480, kHeight = 360, kMargin = 48;

std::string coord(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::round(v * 100.0) / 100.0, std::chars_format::fixed, 2);
  return std::string(buf, end);
}

double px(double rho) { return kMargin + rho * (kWidth - 2 * kMargin); }
double py(double tau) { return kHeight - kMargin - std::clamp(tau, 0.0, 1.0) * (kHeight - 2 * kMargin); }

}  // namespace

std::string svg_panel(const std::vector<QuantileBand>& all, FamilyKind family, int d) {
  std::vector<const QuantileBand*> cell;
  for (const auto& b : all)
    if (b.family == family && b.d == d) cell.push_back(&b);
  std::sort(cell.begin(), cell.end(), [](auto* a, auto* b) { return a->rho < b->rho; });

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<title>" << to_string(family) << ", d = " << d << "</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

  const std::size_t layers = cell.empty() ? 0 : cell.front()->bounds.size();
  for (std::size_t k = layers; k-- > 0;) {
    const double shade = 0.35 + 0.6 * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(layers, 2) - 1);
    const int g = static_cast<int>(std::round(255.0 * shade));
    s << "<path class=\"band\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\" stroke=\"none\" d=\"";
    for (std::size_t i = 0; i < cell.size(); ++i)
      s << (i ? " L" : "M") << coord(px(cell[i]->rho)) << ',' << coord(py(cell[i]->bounds[k].second));
    for (std::size_t i = cell.size(); i-- > 0;)
      s << " L" << coord(px(cell[i]->rho)) << ',' << coord(py(cell[i]->bounds[k].first));
    s << " Z\"/>\n";
  }
  if (!cell.empty()) {
    s << "<path class=\"median\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" d=\"";
    for (std::size_t i = 0; i < cell.size(); ++i)
      s << (i ? " L" : "M") << coord(px(cell[i]->rho)) << ',' << coord(py(cell[i]->median));
    s << "\"/>\n";
  }

  s << "<g stroke=\"black\" fill=\"none\">"
    << "<line x1=\"" << coord(px(0)) << "\" y1=\"" << coord(py(0)) << "\" x2=\"" << coord(px(1)) << "\" y2=\""
    << coord(py(0)) << "\"/>"
    << "<line x1=\"" << coord(px(0)) << "\" y1=\"" << coord(py(0)) << "\" x2=\"" << coord(px(0)) << "\" y2=\""
    << coord(py(1)) << "\"/></g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"11\">";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    s << "<text x=\"" << coord(px(v)) << "\" y=\"" << coord(py(0) + 16) << "\" text-anchor=\"middle\">"
      << format_double(v) << "</text>";
    s << "<text x=\"" << coord(px(0) - 6) << "\" y=\"" << coord(py(v) + 4) << "\" text-anchor=\"end\">"
      << format_double(v) << "</text>";
  }
  s << "<text x=\"" << coord(px(0.5)) << "\" y=\"" << coord(kHeight - 8) << "\" text-anchor=\"middle\">rho</text>";
  s << "<text x=\"12\" y=\"" << coord(py(0.5)) << "\" text-anchor=\"middle\">tau</text></g>\n";
  s << "</svg>\n";
  return s.str();
}

std::vector<std::filesystem::path> write_svg_panels(const std::filesystem::path& dir,
                                                    const std::vector<QuantileBand>& bands) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<FamilyKind, int>> panels;
  for (const auto& b : bands)
    if (std::find(panels.begin(), panels.end(), std::make_pair(b.family, b.d)) == panels.end())
      panels.emplace_back(b.family, b.d);
  std::vector<std::filesystem::path> out;
  for (auto [family, d] : panels) {
    const auto path = dir / ("tau_" + std::string(to_string(family)) + "_d" + std::to_string(d) + ".svg");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << svg_panel(bands, family, d);
    if (!f) throw Error("write to '" + path.string() + "' failed");
    out.push_back(path);
  }
  return out;
}

double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("rank_correlation: need two samples of equal size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const Eigen::Map<const Vector> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
  const Eigen::Map<const Vector> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
  const Vector ca = a.array() - a.mean(), cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace binfam
