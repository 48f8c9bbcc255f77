#include "lrtc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrtc/rng.hpp"

namespace lrtc {

namespace {

// Cholesky factor for drawing factor columns from N(0, R).
Eigen::MatrixXd chol_factor(const Eigen::MatrixXd& r, const char* label) {
  const Eigen::MatrixXd spd = ensure_spd(r, label);
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error(std::string(label) + " covariance is not positive definite");
  }
  return llt.matrixL();
}

Eigen::MatrixXd draw_factor(Rng& rng, const Eigen::MatrixXd& chol, Index rank) {
  Eigen::MatrixXd white(chol.rows(), rank);
  for (Index r = 0; r < rank; ++r)
    for (Index i = 0; i < chol.rows(); ++i) white(i, r) = rng.normal();
  return chol * white;
}

}  // namespace

SynthInstance generate(const SynthSpec& spec, const PriorSet& priors) {
  if (spec.m <= 0 || spec.n <= 0 || spec.p <= 0) throw shape_error("dims must be positive");
  if (spec.true_rank <= 0) throw input_error("true rank must be positive");

  Rng rng(spec.seed);
  SynthInstance inst;

  if (spec.family == Family::gaussian) {
    const Eigen::MatrixXd la = chol_factor(priors.r_a, "mode-0");
    const Eigen::MatrixXd lb = chol_factor(priors.r_b, "mode-1");
    const Eigen::MatrixXd lc = chol_factor(priors.r_c, "mode-2");
    inst.factors.a = draw_factor(rng, la, spec.true_rank);
    inst.factors.b = draw_factor(rng, lb, spec.true_rank);
    inst.factors.c = draw_factor(rng, lc, spec.true_rank);
    inst.x_true = inst.factors.reconstruct();
    inst.z = inst.x_true;
    if (std::isfinite(spec.snr_db)) {
      const double signal = frobenius_sq(inst.x_true) / static_cast<double>(inst.x_true.size());
      const double sigma = std::sqrt(signal / std::pow(10.0, spec.snr_db / 10.0));
      for (double& v : inst.z.values()) v += sigma * rng.normal();
    }
    return inst;
  }

  // Poisson: nonnegative factors, global scale pinning the mean rate.
  if (spec.mean_level <= 0.0) throw input_error("mean level must be positive");
  Eigen::MatrixXd a(spec.m, spec.true_rank), b(spec.n, spec.true_rank), c(spec.p, spec.true_rank);
  for (Index r = 0; r < spec.true_rank; ++r)
    for (Index i = 0; i < spec.m; ++i) a(i, r) = std::abs(rng.normal());
  for (Index r = 0; r < spec.true_rank; ++r)
    for (Index i = 0; i < spec.n; ++i) b(i, r) = std::abs(rng.normal());
  for (Index r = 0; r < spec.true_rank; ++r)
    for (Index i = 0; i < spec.p; ++i) c(i, r) = std::abs(rng.normal());
  inst.factors = FactorModel{a, b, c};
  Tensor3 x = inst.factors.reconstruct();
  double total = 0.0;
  for (double v : x.values()) total += v;
  const double mean = total / static_cast<double>(x.size());
  const double s = std::cbrt(spec.mean_level / mean);
  inst.factors.a *= s;
  inst.factors.b *= s;
  inst.factors.c *= s;
  inst.x_true = inst.factors.reconstruct();
  inst.z = Tensor3(spec.m, spec.n, spec.p);
  for (std::size_t i = 0; i < inst.z.values().size(); ++i) {
    inst.z.values()[i] = static_cast<double>(rng.poisson(inst.x_true.values()[i]));
  }
  return inst;
}

MaskPair random_mask(Index m, Index n, Index p, double fraction, std::uint64_t seed,
                     std::optional<SliceReservation> reserve) {
  if (m <= 0 || n <= 0 || p <= 0) throw shape_error("dims must be positive");
  if (fraction < 0.0 || fraction > 1.0) throw input_error("fraction must lie in [0, 1]");
  const Index total = m * n * p;
  const Index held = static_cast<Index>(std::floor(fraction * static_cast<double>(total)));

  // Partial Fisher-Yates over cell offsets.
  std::vector<Index> cells(total);
  std::iota(cells.begin(), cells.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < held; ++i) {
    const Index j = i + static_cast<Index>(rng.uniform() * static_cast<double>(total - i));
    std::swap(cells[i], cells[std::min(j, total - 1)]);
  }

  MaskPair out{Mask3::ones(m, n, p), Mask3(m, n, p)};
  for (Index i = 0; i < held; ++i) {
    out.train.values()[cells[i]] = 0;
    out.test.values()[cells[i]] = 1;
  }

  if (reserve.has_value()) {
    const Mode mode = reserve->mode;
    const Index idx = reserve->index;
    Tensor3 probe(m, n, p);  // reuse offset arithmetic for bounds checking
    if (idx < 0 || idx >= probe.extent(mode)) throw shape_error("reserved slice out of range");
    for (Index pp = 0; pp < p; ++pp)
      for (Index nn = 0; nn < n; ++nn)
        for (Index mm = 0; mm < m; ++mm) {
          const bool in_slice = (mode == Mode::row && mm == idx) ||
                                (mode == Mode::column && nn == idx) ||
                                (mode == Mode::tube && pp == idx);
          if (in_slice) {
            out.train(mm, nn, pp) = 0;
            out.test(mm, nn, pp) = 1;
          }
        }
  }
  return out;
}

double error_db(const Tensor3& estimate, const Tensor3& z, const Mask3& test) {
  require_same_shape(z, test);
  require_same_shape(estimate, test);
  double num = 0.0, den = 0.0;
  const auto& ev = estimate.values();
  const auto& zv = z.values();
  const auto& tv = test.values();
  for (std::size_t i = 0; i < zv.size(); ++i) {
    if (!tv[i]) continue;
    const double d = ev[i] - zv[i];
    num += d * d;
    den += zv[i] * zv[i];
  }
  if (den <= 0.0) throw input_error("test mask selects no signal to compare against");
  if (num == 0.0) return -300.0;  // exact recovery sentinel
  return 10.0 * std::log10(num / den);
}

EvalReport evaluate_solve(const SolveReport& report, const Tensor3& z, const Mask3& test,
                          double mu) {
  EvalReport out;
  out.error_db = error_db(report.estimate, z, test);
  out.effective_rank = effective_rank(report.model);
  out.mu = mu;
  return out;
}

std::vector<SweepPoint> sweep_mu(const Tensor3& z, const Mask3& train, const Mask3& test,
                                 const PriorSet& priors, const SolveConfig& cfg,
                                 const std::vector<double>& mu_grid, Index n_seeds,
                                 std::uint64_t seed) {
  if (mu_grid.empty()) throw input_error("mu grid is empty");
  if (n_seeds <= 0) throw input_error("need at least one seed");

  std::vector<SweepPoint> points;
  points.reserve(mu_grid.size());
  for (std::size_t gi = 0; gi < mu_grid.size(); ++gi) {
    SolveConfig run = cfg;
    run.mu = mu_grid[gi];
    SweepPoint pt;
    pt.mu = run.mu;
    pt.n_seeds = n_seeds;
    for (Index si = 0; si < n_seeds; ++si) {
      run.seed = Rng::mix(seed + static_cast<std::uint64_t>(si), gi);
      const SolveReport rep = solve(z, train, priors, run);
      const EvalReport ev = evaluate_solve(rep, z, test, run.mu);
      pt.mean_error_db += ev.error_db;
      pt.mean_rank += static_cast<double>(ev.effective_rank);
      pt.max_estimate_norm =
          std::max(pt.max_estimate_norm, std::sqrt(frobenius_sq(rep.estimate)));
      for (std::size_t k = 1; k < rep.cost_trace.size(); ++k) {
        const double rise = rep.cost_trace[k] - rep.cost_trace[k - 1];
        const double rel = rise / (1.0 + std::abs(rep.cost_trace[k - 1]));
        pt.worst_descent_violation = std::max(pt.worst_descent_violation, rel);
      }
    }
    pt.mean_error_db /= static_cast<double>(n_seeds);
    pt.mean_rank /= static_cast<double>(n_seeds);
    points.push_back(pt);
  }
  return points;
}

std::vector<double> log_spaced(double lo, double hi, Index count) {
  if (count <= 0) throw input_error("grid needs at least one point");
  if (!(lo > 0.0) || !(hi > 0.0) || hi < lo) throw input_error("grid endpoints must be positive with hi >= lo");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double step = (std::log10(hi) - std::log10(lo)) / static_cast<double>(count - 1);
  for (Index i = 0; i < count; ++i) out[i] = std::pow(10.0, std::log10(lo) + step * i);
  out.back() = hi;  // kill rounding drift at the top endpoint
  return out;
}

}  // namespace lrtc
