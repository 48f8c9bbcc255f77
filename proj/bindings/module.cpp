// Python surface: numpy-facing wrappers over the completion library.
// Tensors cross the boundary as (M, N, P) float64 arrays, masks as 0/1 uint8.

#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lrtc/extrapolate.hpp"
#include "lrtc/io.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/synth.hpp"

namespace py = pybind11;
using namespace lrtc;

namespace {

Tensor3 tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3) throw input_error("expected an array of shape (M, N, P)");
  const auto r = arr.unchecked<3>();
  Tensor3 t(r.shape(0), r.shape(1), r.shape(2));
  for (Index m = 0; m < t.dim0(); ++m)
    for (Index n = 0; n < t.dim1(); ++n)
      for (Index p = 0; p < t.dim2(); ++p) t(m, n, p) = r(m, n, p);
  return t;
}

py::array_t<double> numpy_from_tensor(const Tensor3& t) {
  py::array_t<double> arr({t.dim0(), t.dim1(), t.dim2()});
  auto w = arr.mutable_unchecked<3>();
  for (Index m = 0; m < t.dim0(); ++m)
    for (Index n = 0; n < t.dim1(); ++n)
      for (Index p = 0; p < t.dim2(); ++p) w(m, n, p) = t(m, n, p);
  return arr;
}

Mask3 mask_from_numpy(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3) throw input_error("expected a mask of shape (M, N, P)");
  const auto r = arr.unchecked<3>();
  Mask3 mask(r.shape(0), r.shape(1), r.shape(2));
  for (Index m = 0; m < mask.dim0(); ++m)
    for (Index n = 0; n < mask.dim1(); ++n)
      for (Index p = 0; p < mask.dim2(); ++p) {
        const std::uint8_t v = r(m, n, p);
        if (v > 1) throw input_error("mask entries must be 0 or 1");
        mask(m, n, p) = v;
      }
  return mask;
}

py::array_t<std::uint8_t> numpy_from_mask(const Mask3& mask) {
  py::array_t<std::uint8_t> arr({mask.dim0(), mask.dim1(), mask.dim2()});
  auto w = arr.mutable_unchecked<3>();
  for (Index m = 0; m < mask.dim0(); ++m)
    for (Index n = 0; n < mask.dim1(); ++n)
      for (Index p = 0; p < mask.dim2(); ++p) w(m, n, p) = mask(m, n, p);
  return arr;
}

Family family_from_name(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "poisson") return Family::poisson;
  throw input_error("family must be 'gaussian' or 'poisson'");
}

Mode mode_from_name(const std::string& name) {
  if (name == "row") return Mode::row;
  if (name == "column") return Mode::column;
  if (name == "tube") return Mode::tube;
  throw input_error("mode must be 'row', 'column', or 'tube'");
}

PriorSet priors_from_object(const py::object& priors, Index m, Index n, Index p) {
  if (priors.is_none()) return identity_priors(m, n, p);
  const py::sequence seq = priors.cast<py::sequence>();
  if (py::len(seq) != 3) throw input_error("priors must be a (r_a, r_b, r_c) triple");
  PriorSet out;
  out.r_a = seq[0].cast<Eigen::MatrixXd>();
  out.r_b = seq[1].cast<Eigen::MatrixXd>();
  out.r_c = seq[2].cast<Eigen::MatrixXd>();
  return out;
}

py::dict solve_py(const py::array_t<double, py::array::c_style | py::array::forcecast>& z_arr,
                  const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask_arr,
                  const std::string& family, double mu, Index rank, double tol, Index max_iters,
                  std::uint64_t seed, bool freeze_c, const py::object& priors) {
  const Tensor3 z = tensor_from_numpy(z_arr);
  const Mask3 mask = mask_from_numpy(mask_arr);
  SolveConfig cfg;
  cfg.family = family_from_name(family);
  cfg.mu = mu;
  cfg.rank = rank;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.seed = seed;
  cfg.freeze_c = freeze_c;
  const PriorSet prior_set = priors_from_object(priors, z.dim0(), z.dim1(), z.dim2());

  const SolveReport report = solve(z, mask, prior_set, cfg);

  py::dict out;
  out["estimate"] = numpy_from_tensor(report.estimate);
  out["a"] = report.model.a;
  out["b"] = report.model.b;
  out["c"] = report.model.c;
  out["cost_trace"] = report.cost_trace;
  out["iterations"] = report.iterations;
  out["converged"] = report.converged;
  out["effective_rank"] = effective_rank(report.model);
  return out;
}

py::dict estimate_priors_py(const py::list& samples, Index rank_hint) {
  std::vector<Tensor3> tensors;
  tensors.reserve(py::len(samples));
  for (const auto& item : samples) {
    tensors.push_back(tensor_from_numpy(
        item.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>()));
  }
  const KernelEstimate est = estimate_kernels(tensors, rank_hint);
  py::dict out;
  out["r_a"] = est.priors.r_a;
  out["r_b"] = est.priors.r_b;
  out["r_c"] = est.priors.r_c;
  out["k_m"] = est.kernels.k_m;
  out["k_n"] = est.kernels.k_n;
  out["k_p"] = est.kernels.k_p;
  out["theta"] = est.theta;
  return out;
}

py::dict generate_py(Index m, Index n, Index p, Index rank, const std::string& family,
                     double snr_db, double mean_level, std::uint64_t seed,
                     const py::object& priors) {
  SynthSpec spec;
  spec.m = m;
  spec.n = n;
  spec.p = p;
  spec.true_rank = rank;
  spec.family = family_from_name(family);
  spec.snr_db = snr_db;
  spec.mean_level = mean_level;
  spec.seed = seed;
  const SynthInstance inst = generate(spec, priors_from_object(priors, m, n, p));
  py::dict out;
  out["z"] = numpy_from_tensor(inst.z);
  out["x_true"] = numpy_from_tensor(inst.x_true);
  out["a"] = inst.factors.a;
  out["b"] = inst.factors.b;
  out["c"] = inst.factors.c;
  return out;
}

py::dict random_mask_py(Index m, Index n, Index p, double fraction, std::uint64_t seed,
                        const py::object& reserve_mode, Index reserve_index) {
  std::optional<SliceReservation> reserve;
  if (!reserve_mode.is_none()) {
    reserve = SliceReservation{mode_from_name(reserve_mode.cast<std::string>()), reserve_index};
  }
  const MaskPair masks = random_mask(m, n, p, fraction, seed, reserve);
  py::dict out;
  out["train"] = numpy_from_mask(masks.train);
  out["test"] = numpy_from_mask(masks.test);
  return out;
}

double error_db_py(const py::array_t<double, py::array::c_style | py::array::forcecast>& est,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
                   const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& test) {
  return error_db(tensor_from_numpy(est), tensor_from_numpy(z), mask_from_numpy(test));
}

double mu_max_py(const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
                 const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
  return mu_max(tensor_from_numpy(z), mask_from_numpy(mask));
}

Eigen::MatrixXd recover_slice_py(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& z_arr,
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask_arr,
    const std::string& mode, Index index, double mu, Index rank, double tol, Index max_iters,
    std::uint64_t seed, const py::object& priors) {
  const Tensor3 z = tensor_from_numpy(z_arr);
  const Mask3 mask = mask_from_numpy(mask_arr);
  SolveConfig cfg;
  cfg.mu = mu;
  cfg.rank = rank;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.seed = seed;
  return recover_missing_slice(z, mask, priors_from_object(priors, z.dim0(), z.dim1(), z.dim2()),
                               cfg, mode_from_name(mode), index);
}

Index effective_rank_py(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const Eigen::MatrixXd& c) {
  return effective_rank(FactorModel{a, b, c});
}

}  // namespace

PYBIND11_MODULE(_lrtc, mod) {
  mod.doc() = "low-rank completion of three-way tensors with per-mode covariance priors";

  mod.def("solve", &solve_py, py::arg("z"), py::arg("mask"), py::kw_only(),
          py::arg("family") = "gaussian", py::arg("mu") = 1.0, py::arg("rank") = 0,
          py::arg("tol") = 1e-8, py::arg("max_iters") = 500, py::arg("seed") = 0,
          py::arg("freeze_c") = false, py::arg("priors") = py::none(),
          "Impute the unobserved entries of z; returns estimate, factors, and trace.");

  mod.def("mu_max", &mu_max_py, py::arg("z"), py::arg("mask"),
          "Weight at and above which the gaussian solution collapses to zero.");

  mod.def("default_rank", &default_rank, py::arg("m"), py::arg("n"), py::arg("p"),
          "Component budget used when rank=0.");

  mod.def("effective_rank", &effective_rank_py, py::arg("a"), py::arg("b"), py::arg("c"),
          "Number of components whose column-norm product stands above rounding.");

  mod.def("estimate_priors", &estimate_priors_py, py::arg("samples"), py::arg("rank_hint"),
          "Fit per-mode covariances and the component scale from sample tensors.");

  mod.def("generate", &generate_py, py::arg("m"), py::arg("n"), py::arg("p"), py::kw_only(),
          py::arg("rank") = 1, py::arg("family") = "gaussian",
          py::arg("snr_db") = std::numeric_limits<double>::infinity(),
          py::arg("mean_level") = 100.0, py::arg("seed") = 0, py::arg("priors") = py::none(),
          "Draw a synthetic low-rank instance (gaussian noise or poisson counts).");

  mod.def("random_mask", &random_mask_py, py::arg("m"), py::arg("n"), py::arg("p"),
          py::arg("fraction"), py::arg("seed"), py::kw_only(),
          py::arg("reserve_mode") = py::none(), py::arg("reserve_index") = 0,
          "Split the grid into train/test masks, optionally holding out a whole slice.");

  mod.def("error_db", &error_db_py, py::arg("estimate"), py::arg("z"), py::arg("test"),
          "Relative squared error on the test cells, in decibels (floor -300).");

  mod.def("recover_missing_slice", &recover_slice_py, py::arg("z"), py::arg("mask"),
          py::arg("mode"), py::arg("index"), py::kw_only(), py::arg("mu") = 1.0,
          py::arg("rank") = 0, py::arg("tol") = 1e-8, py::arg("max_iters") = 500,
          py::arg("seed") = 0, py::arg("priors") = py::none(),
          "Fill an entirely unobserved slice by leaning on correlated priors.");
}
