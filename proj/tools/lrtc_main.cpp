// Command-line front end: impute / simulate / sweep / estimate-priors.
// Exit codes: 0 success, 1 bad input (files, shapes, flags), 2 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrtc/extrapolate.hpp"
#include "lrtc/io.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/synth.hpp"

namespace fs = std::filesystem;
using namespace lrtc;

namespace {

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Mode parse_mode(const std::string& name) {
  if (name == "row") return Mode::row;
  if (name == "column") return Mode::column;
  if (name == "tube") return Mode::tube;
  throw input_error("unknown mode '" + name + "' (expected row, column, or tube)");
}

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "poisson") return Family::poisson;
  throw input_error("unknown model '" + name + "' (expected gaussian or poisson)");
}

// Covariance directory layout shared by --priors and estimate-priors.
constexpr const char* kPriorFiles[3] = {"r_a.csv", "r_b.csv", "r_c.csv"};

PriorSet load_priors(const std::string& dir, Index m, Index n, Index p, RunManifest& man) {
  PriorSet priors;
  Eigen::MatrixXd* slots[3] = {&priors.r_a, &priors.r_b, &priors.r_c};
  const Index dims[3] = {m, n, p};
  for (int i = 0; i < 3; ++i) {
    const std::string path = (fs::path(dir) / kPriorFiles[i]).string();
    *slots[i] = read_matrix_csv(path);
    if (slots[i]->rows() != slots[i]->cols() || slots[i]->rows() != dims[i]) {
      throw input_error(path + ": expected a " + std::to_string(dims[i]) + "x" +
                        std::to_string(dims[i]) + " covariance");
    }
    man.add_input(path);
  }
  return priors;
}

void write_cost_trace(const std::string& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out << "iter,cost\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << "," << format_double(trace[i]) << "\n";
  }
  if (!out) throw input_error("write failed for " + path);
}

// ---- impute ----

struct ImputeArgs {
  std::string model = "gaussian";
  std::string tensor_path, mask_path, priors_dir, out_path, report_path;
  double mu = 0.0, mu_rel = 0.0;
  bool has_mu = false, has_mu_rel = false;
  Index rank = 0;
  double tol = 1e-8;
  Index max_iters = 500;
  std::uint64_t seed = 0;
  bool freeze_c = false;
  bool binary = false;
};

int run_impute(const ImputeArgs& args) {
  WallTimer timer;
  RunManifest man;
  man.command = "impute";

  if (args.has_mu == args.has_mu_rel) {
    throw input_error("provide exactly one of --mu and --mu-rel");
  }
  const Tensor3 z = read_tensor(args.tensor_path);
  man.add_input(args.tensor_path);
  const Mask3 mask = read_mask(args.mask_path);
  man.add_input(args.mask_path);
  require_same_shape(z, mask);

  SolveConfig cfg;
  cfg.family = parse_family(args.model);
  cfg.rank = args.rank;
  cfg.tol = args.tol;
  cfg.max_iters = args.max_iters;
  cfg.seed = args.seed;
  cfg.freeze_c = args.freeze_c;
  cfg.mu = args.has_mu ? args.mu : args.mu_rel * mu_max(z, mask);

  PriorSet priors = args.priors_dir.empty()
                        ? identity_priors(z.dim0(), z.dim1(), z.dim2())
                        : load_priors(args.priors_dir, z.dim0(), z.dim1(), z.dim2(), man);

  const SolveReport report = solve(z, mask, priors, cfg);

  write_tensor(args.out_path, report.estimate, args.binary);
  man.outputs.push_back(args.out_path);
  if (!args.report_path.empty()) {
    write_cost_trace(args.report_path, report.cost_trace);
    man.outputs.push_back(args.report_path);
  }

  man.add_config("model", args.model);
  man.add_config("mu", format_double(cfg.mu));
  if (args.has_mu_rel) man.add_config("mu_rel", format_double(args.mu_rel));
  man.add_config("rank", std::to_string(cfg.rank));
  man.add_config("tol", format_double(cfg.tol));
  man.add_config("max_iters", std::to_string(cfg.max_iters));
  man.add_config("seed", std::to_string(cfg.seed));
  man.add_config("freeze_c", args.freeze_c ? "true" : "false");
  man.add_config("iterations", std::to_string(report.iterations));
  man.add_config("converged", report.converged ? "true" : "false");
  man.add_config("final_cost", format_double(report.cost_trace.back()));
  man.add_config("effective_rank", std::to_string(effective_rank(report.model)));
  man.wall_seconds = timer.seconds();
  man.write(args.out_path + ".manifest.json");

  std::printf("impute: %s rank budget %ld, %ld iterations, %sconverged, cost %s, rank %ld\n",
              args.model.c_str(), static_cast<long>(report.model.rank()),
              static_cast<long>(report.iterations), report.converged ? "" : "NOT ",
              format_double(report.cost_trace.back()).c_str(),
              static_cast<long>(effective_rank(report.model)));
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string family = "gaussian";
  std::vector<Index> dims;
  Index rank = 1;
  double snr_db = std::numeric_limits<double>::infinity();
  double mean_level = 100.0;
  double missing = 0.0;
  std::vector<std::string> reserve;  // mode name, index
  std::uint64_t seed = 0;
  std::string prefix;
  bool binary = false;
};

int run_simulate(const SimulateArgs& args) {
  WallTimer timer;
  RunManifest man;
  man.command = "simulate";

  SynthSpec spec;
  spec.m = args.dims[0];
  spec.n = args.dims[1];
  spec.p = args.dims[2];
  spec.true_rank = args.rank;
  spec.family = parse_family(args.family);
  spec.snr_db = args.snr_db;
  spec.mean_level = args.mean_level;
  spec.seed = args.seed;

  std::optional<SliceReservation> reserve;
  if (!args.reserve.empty()) {
    if (args.reserve.size() != 2) throw input_error("--reserve-slice needs MODE INDEX");
    std::size_t used = 0;
    Index idx = 0;
    try {
      idx = static_cast<Index>(std::stoll(args.reserve[1], &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != args.reserve[1].size()) {
      throw input_error("--reserve-slice index '" + args.reserve[1] + "' is not an integer");
    }
    reserve = SliceReservation{parse_mode(args.reserve[0]), idx};
  }

  const SynthInstance inst = generate(spec, identity_priors(spec.m, spec.n, spec.p));
  const MaskPair masks = random_mask(spec.m, spec.n, spec.p, args.missing, args.seed, reserve);

  const char* ext = args.binary ? ".bin" : ".txt";
  const std::string z_path = args.prefix + "_z" + ext;
  const std::string x_path = args.prefix + "_xtrue" + ext;
  const std::string train_path = args.prefix + "_train_mask" + ext;
  const std::string test_path = args.prefix + "_test_mask" + ext;
  write_tensor(z_path, inst.z, args.binary);
  write_tensor(x_path, inst.x_true, args.binary);
  write_mask(train_path, masks.train, args.binary);
  write_mask(test_path, masks.test, args.binary);
  man.outputs = {z_path, x_path, train_path, test_path};

  man.add_config("family", args.family);
  man.add_config("dims", std::to_string(spec.m) + " " + std::to_string(spec.n) + " " +
                             std::to_string(spec.p));
  man.add_config("rank", std::to_string(spec.true_rank));
  if (spec.family == Family::gaussian) {
    man.add_config("snr_db", format_double(spec.snr_db));
  } else {
    man.add_config("mean_level", format_double(spec.mean_level));
  }
  man.add_config("missing", format_double(args.missing));
  if (reserve.has_value()) {
    man.add_config("reserve_slice",
                   args.reserve[0] + " " + std::to_string(reserve->index));
  }
  man.add_config("seed", std::to_string(args.seed));
  man.wall_seconds = timer.seconds();
  man.write(args.prefix + ".manifest.json");

  std::printf("simulate: %ldx%ldx%ld %s rank %ld, %ld train / %ld test cells\n",
              static_cast<long>(spec.m), static_cast<long>(spec.n), static_cast<long>(spec.p),
              args.family.c_str(), static_cast<long>(spec.true_rank),
              static_cast<long>(masks.train.count()), static_cast<long>(masks.test.count()));
  return 0;
}

// ---- sweep ----

struct SweepArgs {
  std::string model = "gaussian";
  std::string tensor_path, mask_path, test_mask_path, priors_dir, out_path;
  std::string grid_spec;
  bool grid_is_relative = false;
  Index seeds = 1;
  Index rank = 0;
  double tol = 1e-8;
  Index max_iters = 500;
  std::uint64_t seed = 0;
};

std::vector<double> parse_grid(const std::string& spec) {
  const auto fail = [&]() {
    throw input_error("--mu-grid must be log:COUNT:LO:HI or list:V1,V2,... (got '" + spec + "')");
  };
  std::vector<double> grid;
  if (spec.rfind("log:", 0) == 0) {
    long count = 0;
    double lo = 0.0, hi = 0.0;
    if (std::sscanf(spec.c_str(), "log:%ld:%lf:%lf", &count, &lo, &hi) != 3) fail();
    return log_spaced(lo, hi, static_cast<Index>(count));
  }
  if (spec.rfind("list:", 0) == 0) {
    std::stringstream body(spec.substr(5));
    std::string cell;
    while (std::getline(body, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size()) fail();
      grid.push_back(v);
    }
    if (grid.empty()) fail();
    return grid;
  }
  fail();
  return grid;
}

int run_sweep(const SweepArgs& args) {
  WallTimer timer;
  RunManifest man;
  man.command = "sweep";

  const Tensor3 z = read_tensor(args.tensor_path);
  man.add_input(args.tensor_path);
  const Mask3 train = read_mask(args.mask_path);
  man.add_input(args.mask_path);
  const Mask3 test = read_mask(args.test_mask_path);
  man.add_input(args.test_mask_path);
  require_same_shape(z, train);
  require_same_shape(z, test);

  std::vector<double> grid = parse_grid(args.grid_spec);
  if (args.grid_is_relative) {
    const double top = mu_max(z, train);
    for (double& v : grid) v *= top;
  }

  SolveConfig cfg;
  cfg.family = parse_family(args.model);
  cfg.rank = args.rank;
  cfg.tol = args.tol;
  cfg.max_iters = args.max_iters;

  PriorSet priors = args.priors_dir.empty()
                        ? identity_priors(z.dim0(), z.dim1(), z.dim2())
                        : load_priors(args.priors_dir, z.dim0(), z.dim1(), z.dim2(), man);

  const std::vector<SweepPoint> points =
      sweep_mu(z, train, test, priors, cfg, grid, args.seeds, args.seed);

  std::ofstream out(args.out_path);
  if (!out) throw input_error("cannot write " + args.out_path);
  out << "mu,mean_error_db,mean_rank,n_seeds\n";
  for (const SweepPoint& pt : points) {
    out << format_double(pt.mu) << "," << format_double(pt.mean_error_db) << ","
        << format_double(pt.mean_rank) << "," << pt.n_seeds << "\n";
  }
  if (!out) throw input_error("write failed for " + args.out_path);
  out.close();
  man.outputs.push_back(args.out_path);

  man.add_config("model", args.model);
  man.add_config("mu_grid", args.grid_spec);
  man.add_config("mu_rel", args.grid_is_relative ? "true" : "false");
  man.add_config("seeds", std::to_string(args.seeds));
  man.add_config("rank", std::to_string(args.rank));
  man.add_config("tol", format_double(args.tol));
  man.add_config("max_iters", std::to_string(args.max_iters));
  man.add_config("seed", std::to_string(args.seed));
  man.wall_seconds = timer.seconds();
  man.write(args.out_path + ".manifest.json");

  std::printf("sweep: %zu grid points, %ld seeds each -> %s\n", points.size(),
              static_cast<long>(args.seeds), args.out_path.c_str());
  return 0;
}

// ---- estimate-priors ----

struct EstimateArgs {
  std::vector<std::string> samples;
  Index rank_hint = 1;
  std::string out_dir;
};

int run_estimate(const EstimateArgs& args) {
  WallTimer timer;
  RunManifest man;
  man.command = "estimate-priors";

  std::vector<Tensor3> samples;
  samples.reserve(args.samples.size());
  for (const std::string& path : args.samples) {
    samples.push_back(read_tensor(path));
    man.add_input(path);
  }

  const KernelEstimate est = estimate_kernels(samples, args.rank_hint);

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (!fs::is_directory(args.out_dir)) {
    throw input_error("cannot create output directory " + args.out_dir);
  }
  const Eigen::MatrixXd* mats[3] = {&est.priors.r_a, &est.priors.r_b, &est.priors.r_c};
  for (int i = 0; i < 3; ++i) {
    const std::string path = (fs::path(args.out_dir) / kPriorFiles[i]).string();
    write_matrix_csv(path, *mats[i]);
    man.outputs.push_back(path);
  }

  man.add_config("rank_hint", std::to_string(args.rank_hint));
  man.add_config("theta", format_double(est.theta));
  man.wall_seconds = timer.seconds();
  man.write((fs::path(args.out_dir) / "priors.manifest.json").string());

  std::printf("estimate-priors: %zu samples, rank hint %ld, theta %s -> %s\n",
              samples.size(), static_cast<long>(args.rank_hint),
              format_double(est.theta).c_str(), args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank completion of three-way tensors with per-mode covariance priors"};
  app.require_subcommand(1);

  ImputeArgs imp;
  CLI::App* impute = app.add_subcommand("impute", "fill missing entries of an observed tensor");
  impute->add_option("--model", imp.model, "gaussian or poisson")->capture_default_str();
  impute->add_option("--tensor", imp.tensor_path, "observed tensor file")->required();
  impute->add_option("--mask", imp.mask_path, "observation mask file")->required();
  auto* mu_opt = impute->add_option("--mu", imp.mu, "regularization weight");
  auto* mu_rel_opt =
      impute->add_option("--mu-rel", imp.mu_rel, "weight as a fraction of the collapse threshold");
  mu_opt->excludes(mu_rel_opt);
  mu_rel_opt->excludes(mu_opt);
  impute->add_option("--rank", imp.rank, "component budget (0 = default)");
  impute->add_option("--priors", imp.priors_dir, "directory holding r_a.csv, r_b.csv, r_c.csv");
  impute->add_option("--tol", imp.tol, "relative convergence tolerance")->capture_default_str();
  impute->add_option("--max-iters", imp.max_iters, "iteration cap")->capture_default_str();
  impute->add_option("--seed", imp.seed, "initialization seed")->capture_default_str();
  impute->add_option("--out", imp.out_path, "estimate output file")->required();
  impute->add_flag("--freeze-c", imp.freeze_c, "pin the third factor to ones (matrix completion)");
  impute->add_option("--report", imp.report_path, "write the objective trace CSV here");
  impute->add_flag("--binary", imp.binary, "write the estimate in the binary container");
  impute->callback([&]() {
    imp.has_mu = mu_opt->count() > 0;
    imp.has_mu_rel = mu_rel_opt->count() > 0;
  });

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic instance plus masks");
  simulate->add_option("--family", sim.family, "gaussian or poisson")->capture_default_str();
  simulate->add_option("--dims", sim.dims, "tensor extents M N P")->expected(3)->required();
  simulate->add_option("--rank", sim.rank, "true component count")->capture_default_str();
  simulate->add_option("--snr-db", sim.snr_db, "gaussian signal-to-noise ratio (dB)");
  simulate->add_option("--mean-level", sim.mean_level, "poisson mean count")
      ->capture_default_str();
  simulate->add_option("--missing", sim.missing, "fraction of cells held out for testing")
      ->capture_default_str();
  simulate->add_option("--reserve-slice", sim.reserve, "hold out a whole slice: MODE INDEX")
      ->expected(2);
  simulate->add_option("--seed", sim.seed, "generation seed")->capture_default_str();
  simulate->add_option("--out-prefix", sim.prefix, "path prefix for the emitted files")
      ->required();
  simulate->add_flag("--binary", sim.binary, "emit binary containers");

  SweepArgs swp;
  CLI::App* sweep = app.add_subcommand("sweep", "trace error and rank across a weight grid");
  sweep->add_option("--model", swp.model, "gaussian or poisson")->capture_default_str();
  sweep->add_option("--tensor", swp.tensor_path, "observed tensor file")->required();
  sweep->add_option("--mask", swp.mask_path, "training mask file")->required();
  sweep->add_option("--test-mask", swp.test_mask_path, "evaluation mask file")->required();
  sweep->add_option("--mu-grid", swp.grid_spec, "log:COUNT:LO:HI or list:V1,V2,...")->required();
  sweep->add_flag("--mu-rel", swp.grid_is_relative,
                  "treat grid values as fractions of the collapse threshold");
  sweep->add_option("--seeds", swp.seeds, "initializations per grid point")
      ->capture_default_str();
  sweep->add_option("--rank", swp.rank, "component budget (0 = default)");
  sweep->add_option("--priors", swp.priors_dir, "directory holding r_a.csv, r_b.csv, r_c.csv");
  sweep->add_option("--tol", swp.tol, "relative convergence tolerance")->capture_default_str();
  sweep->add_option("--max-iters", swp.max_iters, "iteration cap")->capture_default_str();
  sweep->add_option("--seed", swp.seed, "base seed for the per-point streams")
      ->capture_default_str();
  sweep->add_option("--out", swp.out_path, "sweep CSV output path")->required();

  EstimateArgs est;
  CLI::App* estimate =
      app.add_subcommand("estimate-priors", "fit per-mode covariances from sample tensors");
  estimate->add_option("--samples", est.samples, "training tensor files")
      ->required()
      ->expected(-1);
  estimate->add_option("--rank-hint", est.rank_hint, "assumed component count")->required();
  estimate->add_option("--out", est.out_dir, "output directory for the covariance CSVs")
      ->required();

  try {
    app.parse(argc, argv);
    if (impute->parsed()) return run_impute(imp);
    if (simulate->parsed()) return run_simulate(sim);
    if (sweep->parsed()) return run_sweep(swp);
    if (estimate->parsed()) return run_estimate(est);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {  // input and shape errors
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {  // conditioning and divergence errors
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
