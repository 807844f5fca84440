// binfam: fit, sample and benchmark parametric families for correlated binary vectors.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "binfam/bench.hpp"
#include "binfam/core.hpp"
#include "binfam/gauss_copula.hpp"
#include "binfam/mh.hpp"
#include "binfam/moment_fit.hpp"
#include "binfam/momgen.hpp"
#include "binfam/quad_exp.hpp"
#include "binfam/serialize.hpp"

namespace {

using namespace binfam;

struct FitOptions {
  std::string matrix;
  std::string link = "logistic";
  std::string family = "conditionals";
  std::string mode = "auto";
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

struct SampleOptions {
  std::string family;
  std::size_t n = 10;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenOptions {
  int dim = 0;
  double rho = 1.0;
  std::uint64_t seed = 0;
  int permutation_steps = 0;
  int sweeps = 500;
  std::string out;
};

struct BenchOptions {
  std::string config;
  std::string out_csv;
  std::string out_svg;
  std::optional<int> workers;
};

struct MhOptions {
  std::string target;
  std::string proposal;
  std::size_t steps = 100000;
  std::uint64_t seed = 0;
  double burn_in = 0.1;
};

Estimator parse_mode(const std::string& mode) {
  if (mode == "exact") return Estimator::exact;
  if (mode == "mc") return Estimator::monte_carlo;
  if (mode == "auto") return Estimator::automatic;
  throw ArgumentError("unknown mode '" + mode + "' (expected exact, mc or auto)");
}

void emit(const Json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json_file(out, j);
}

int run_fit(const FitOptions& o) {
  const CrossMomentMatrix m(read_matrix_file(o.matrix));
  if (o.family == "gaussian" || o.family == "gaussian-copula") {
    const CopulaFit fit = fit_gc(m);
    emit(to_json(fit), o.out);
    if (!o.out.empty()) std::cout << Json{{"repaired", fit.repaired}, {"lambda", fit.lambda}}.dump(2) << '\n';
    return 0;
  }
  if (o.family != "conditionals") throw ArgumentError("unknown family '" + o.family + "'");
  FitConfig cfg;
  cfg.estimator = parse_mode(o.mode);
  cfg.mc_samples = o.n;
  cfg.seed = o.seed;
  const FitResult res = fit(m, LinkFunction::parse(o.link), cfg);
  if (!o.out.empty()) write_json_file(o.out, to_json(res.family));
  std::cout << to_json(res.report).dump(2) << '\n';
  return 0;
}

int run_sample(const SampleOptions& o) {
  const AnyFamily family = family_from_json(read_json_file(o.family));
  Rng rng(o.seed);
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw Error("cannot open '" + o.out + "' for writing");
  }
  std::ostream& out = o.out.empty() ? std::cout : file;
  for (std::size_t k = 0; k < o.n; ++k) {
    const BinaryVector x = std::visit(
        [&](const auto& f) -> BinaryVector {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, ConditionalsFamily>)
            return f.sample(rng).x;
          else if constexpr (std::is_same_v<F, QuadExpFamily>)
            return f.sample(rng);
          else
            return sample_gc(f, rng);
        },
        family);
    for (int i = 0; i < x.size(); ++i) out << (x[i] ? '1' : '0');
    out << '\n';
  }
  return 0;
}

int run_genmatrix(const GenOptions& o) {
  GenConfig cfg;
  cfg.dim = o.dim;
  cfg.rho = o.rho;
  cfg.seed = o.seed;
  cfg.permutation_steps = o.permutation_steps;
  cfg.sweeps = o.sweeps;
  GenStats stats;
  const CrossMomentMatrix m = random_cross_moment_matrix(cfg, &stats);
  if (o.out.empty())
    write_matrix(std::cout, m.matrix());
  else
    write_matrix_file(o.out, m.matrix());
  std::cerr << "replacements " << stats.replacements << ", skipped " << stats.skipped << ", max det drift "
            << stats.max_det_drift << '\n';
  return 0;
}

int run_bench(const BenchOptions& o) {
  ExperimentConfig cfg = experiment_config_from_json(read_json_file(o.config));
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  const auto records = run_experiment(cfg);
  if (!o.out_csv.empty()) write_csv_file(o.out_csv, records);
  std::vector<std::string> warnings;
  const auto bands = aggregate_quantiles(records, 20, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (!o.out_svg.empty())
    for (const auto& p : write_svg_panels(o.out_svg, bands)) std::cerr << "wrote " << p.string() << '\n';

  std::size_t hard = 0;
  for (const auto& r : records)
    if (r.hard_failure) {
      ++hard;
      std::cerr << "failure: d=" << r.d << " rho=" << r.rho << " " << to_string(r.family) << " #" << r.matrix_index
                << ": " << r.error << '\n';
    }
  for (const auto& b : bands)
    std::cout << to_string(b.family) << " d=" << b.d << " rho=" << b.rho << " n=" << b.n << " median=" << b.median
              << '\n';
  return hard == 0 ? 0 : 1;
}

int run_mh(const MhOptions& o) {
  const AnyFamily target = family_from_json(read_json_file(o.target));
  const auto* qe = std::get_if<QuadExpFamily>(&target);
  if (!qe) throw ArgumentError("mh-demo: the target must be a quadexp family");
  const AnyFamily proposal_any = family_from_json(read_json_file(o.proposal));
  Proposal proposal = std::visit(
      [](const auto& f) -> Proposal {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GaussianCopulaFamily>)
          throw ArgumentError("mh-demo: the Gaussian copula has no point-wise pmf and cannot be a proposal");
        else
          return f;
      },
      proposal_any);
  ChainConfig cfg;
  cfg.steps = o.steps;
  cfg.burn_in_fraction = o.burn_in;
  cfg.keep_samples = false;
  Rng rng(o.seed);
  const ChainResult res = run_chain(TargetDensity::from_quadexp(*qe), proposal, cfg, rng);
  std::cout << to_json(res.stats).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlated binary vectors: parametric families fitted to cross-moment matrices"};
  app.require_subcommand(1);

  FitOptions fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a family to a cross-moment matrix");
  fit_cmd->add_option("--matrix", fo.matrix, "Matrix file (d, then d rows)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--link", fo.link, "logistic, truncated-linear, probit or cloglog");
  fit_cmd->add_option("--family", fo.family, "conditionals or gaussian");
  fit_cmd->add_option("--mode", fo.mode, "exact, mc or auto");
  fit_cmd->add_option("--n", fo.n, "Monte Carlo sample size per row")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fo.seed);
  fit_cmd->add_option("--out", fo.out, "Write the fitted family as JSON");

  SampleOptions so;
  auto* sample_cmd = app.add_subcommand("sample", "Draw binary vectors from a family JSON");
  sample_cmd->add_option("--family", so.family, "Family JSON")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--n", so.n, "Number of draws");
  sample_cmd->add_option("--seed", so.seed);
  sample_cmd->add_option("--out", so.out, "Output file (one 0/1 string per line)");

  GenOptions go;
  auto* gen_cmd = app.add_subcommand("genmatrix", "Generate a random feasible cross-moment matrix");
  gen_cmd->add_option("--dim", go.dim, "Dimension d >= 2")->required();
  gen_cmd->add_option("--rho", go.rho, "Difficulty in [0, 1]")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", go.seed);
  gen_cmd->add_option("--permutation-steps", go.permutation_steps, "0 selects 10 d");
  gen_cmd->add_option("--sweeps", go.sweeps, "Replacement sweeps between permutations");
  gen_cmd->add_option("--out", go.out, "Output matrix file");

  BenchOptions bo;
  auto* bench_cmd = app.add_subcommand("bench", "Run the figure-of-merit experiment");
  bench_cmd->add_option("--config", bo.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out-csv", bo.out_csv, "Per-matrix records");
  bench_cmd->add_option("--out-svg", bo.out_svg, "Directory for quantile-band panels");
  bench_cmd->add_option("--workers", bo.workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

  MhOptions mo;
  auto* mh_cmd = app.add_subcommand("mh-demo", "Independent Metropolis-Hastings on a quadexp target");
  mh_cmd->add_option("--target", mo.target, "quadexp family JSON")->required()->check(CLI::ExistingFile);
  mh_cmd->add_option("--proposal", mo.proposal, "conditionals or quadexp family JSON")
      ->required()
      ->check(CLI::ExistingFile);
  mh_cmd->add_option("--steps", mo.steps);
  mh_cmd->add_option("--seed", mo.seed);
  mh_cmd->add_option("--burn-in", mo.burn_in, "Fraction of steps discarded")->check(CLI::Range(0.0, 0.99));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return run_fit(fo);
    if (*sample_cmd) return run_sample(so);
    if (*gen_cmd) return run_genmatrix(go);
    if (*bench_cmd) return run_bench(bo);
    if (*mh_cmd) return run_mh(mo);
  } catch (const binfam::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
