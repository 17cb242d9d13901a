#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lqrlab/acceptance.hpp"
#include "lqrlab/adaptive_ce.hpp"
#include "lqrlab/estimation.hpp"
#include "lqrlab/experiment.hpp"
#include "lqrlab/lower_bound_lab.hpp"
#include "lqrlab/perturbation.hpp"
#include "lqrlab/simulator.hpp"

namespace py = pybind11;
using namespace lqrlab;

namespace {

py::dict epoch_to_dict(const EpochRecord& e) {
  py::dict d;
  d["k"] = e.k;
  d["tau_k"] = e.tau_k;
  d["mode"] = to_string(e.mode);
  d["conf"] = e.conf;
  d["sigma_sq"] = e.sigma_sq;
  d["K_used"] = e.K_used;
  d["A_hat"] = e.estimate.A_hat;
  d["B_hat"] = e.estimate.B_hat;
  d["projected"] = e.projected;
  d["safe_test_passed"] = e.safe_test_passed;
  d["dare_fallback"] = e.dare_fallback;
  d["j_gap_true"] = e.j_gap_true;
  d["est_err_fro_sq"] = e.est_err_fro_sq;
  d["est_err_par_sq"] = e.est_err_par_sq;
  d["est_err_perp_sq"] = e.est_err_perp_sq;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lqrlab, m) {
  m.doc() = "Riccati perturbation and certainty-equivalent LQR experiments";

  auto base = py::register_exception<Error>(m, "Error");
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  (void)validation;

  py::enum_<CostNormalization>(m, "CostNormalization")
      .value("standard", CostNormalization::standard)
      .value("general", CostNormalization::general);

  py::class_<LqrInstance>(m, "LqrInstance")
      .def(py::init<Mat, Mat, Mat, Mat, CostNormalization>(), py::arg("A"), py::arg("B"), py::arg("Rx"),
           py::arg("Ru"), py::arg("normalization") = CostNormalization::standard)
      .def_static("identity_costs", &LqrInstance::identity_costs, py::arg("A"), py::arg("B"))
      .def_property_readonly("A", &LqrInstance::A)
      .def_property_readonly("B", &LqrInstance::B)
      .def_property_readonly("Rx", &LqrInstance::Rx)
      .def_property_readonly("Ru", &LqrInstance::Ru)
      .def_property_readonly("dx", &LqrInstance::dx)
      .def_property_readonly("du", &LqrInstance::du);

  py::class_<RiccatiSolution>(m, "RiccatiSolution")
      .def_readonly("P", &RiccatiSolution::P)
      .def_readonly("K", &RiccatiSolution::K)
      .def_readonly("residual", &RiccatiSolution::residual)
      .def_readonly("iterations", &RiccatiSolution::iterations);

  m.def("spectral_radius", &spectral_radius, py::arg("M"));
  m.def("solve_dlyap", &solve_dlyap, py::arg("A"), py::arg("Y"));
  m.def(
      "solve_dare",
      [](const LqrInstance& inst, double tol, int max_iter) {
        DareOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        return solve_dare(inst, o);
      },
      py::arg("instance"), py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def(
      "controller_value",
      [](const LqrInstance& inst, const Mat& K) {
        const ControllerValue v = controller_value(inst, K);
        return py::make_tuple(v.P, v.J);
      },
      py::arg("instance"), py::arg("K"));
  m.def("hinf_norm", &hinf_norm, py::arg("A"), py::arg("grid_points") = 720);

  m.def(
      "certificate_constants",
      [](const Mat& P) {
        const CertificateConstants c = certificate_constants(P);
        return py::make_tuple(c.c_safe, c.c_est);
      },
      py::arg("P"));
  m.def(
      "riccati_derivative",
      [](const LqrInstance& inst, const Mat& dA, const Mat& dB) {
        const RiccatiDerivative d = riccati_derivative(inst, dA, dB);
        return py::make_tuple(d.P_prime, d.K_prime);
      },
      py::arg("instance"), py::arg("dA"), py::arg("dB"));
  m.def("special_perturbation_derivative",
        py::overload_cast<const LqrInstance&, const Mat&>(&special_perturbation_derivative), py::arg("instance"),
        py::arg("Delta"));
  m.def(
      "perturbation_report",
      [](const LqrInstance& inst, const Mat& A_hat, const Mat& B_hat) {
        const PerturbationReport r = perturbation_report(inst, solve_dare(inst), A_hat, B_hat);
        py::dict d;
        d["eps_op"] = r.eps_op;
        d["eps_fro"] = r.eps_fro;
        d["alpha"] = r.alpha;
        d["safe"] = r.safe;
        d["c_safe"] = r.c_safe;
        d["c_est"] = r.c_est;
        d["k_hat_stabilizing"] = r.k_hat_stabilizing;
        d["K_hat"] = r.K_hat;
        d["j_gap"] = r.j_gap;
        d["j_gap_bound"] = r.j_gap_bound;
        d["p_hat_norm"] = r.p_hat_norm;
        d["p_star_norm"] = r.p_star_norm;
        d["lowner_margin"] = r.lowner_margin;
        d["lyapunov_contraction"] = r.lyapunov_contraction;
        return d;
      },
      py::arg("instance"), py::arg("A_hat"), py::arg("B_hat"));

  m.def("confidence_radius", &confidence_radius, py::arg("Lambda"), py::arg("k"), py::arg("delta"));
  m.def(
      "exploration_projector", [](const Mat& K) { return exploration_projector(K).P_mat; }, py::arg("K_hat"));

  m.def(
      "scaled_identity_instance",
      [](double a, Eigen::Index dx, Eigen::Index du) {
        ScaledIdentity s = scaled_identity_instance(a, dx, du);
        return py::make_tuple(s.instance, s.p_closed_form);
      },
      py::arg("a"), py::arg("dx"), py::arg("du"));
  m.def(
      "build_packing",
      [](const LqrInstance& inst, int mm, double eps, const SignMatrix& e) {
        const RiccatiSolution star = solve_dare(inst);
        const PackingInstance pk = build_packing(inst, star, mm, eps, e);
        py::dict d;
        d["Delta"] = pk.Delta;
        d["A_e"] = pk.A_e;
        d["B_e"] = pk.B_e;
        d["W"] = pk.W;
        d["V"] = pk.V;
        d["U"] = pk.U;
        d["decoded"] = hamming_decode(solve_dare(inst.with_dynamics(pk.A_e, pk.B_e)).K, star, pk);
        d["outside_guard"] = pk.outside_guard;
        return d;
      },
      py::arg("instance"), py::arg("m"), py::arg("eps_pack"), py::arg("e"));

  m.def(
      "rollout",
      [](const LqrInstance& inst, const Mat& K, double sigma_u, long T, std::uint64_t seed) {
        LinearFeedback pol(K, sigma_u);
        const Trajectory tr = rollout(inst, pol, T, seed);
        py::dict d;
        d["states"] = tr.states;
        d["inputs"] = tr.inputs;
        d["step_costs"] = tr.step_costs;
        return d;
      },
      py::arg("instance"), py::arg("K"), py::arg("sigma_u"), py::arg("T"), py::arg("seed"));
  m.def("expected_cost_bound", &expected_cost_bound, py::arg("instance"), py::arg("K"), py::arg("sigma_u"),
        py::arg("x1"), py::arg("t"));

  m.attr("DESK_SCALE_SAFE_THRESHOLD") = kDeskScaleSafeThreshold;
  m.def(
      "run_ce",
      [](const LqrInstance& inst, const Mat& K0, long T, std::uint64_t seed, double delta,
         double safe_threshold_scale) {
        CeOptions o;
        o.delta = delta;
        o.safe_threshold_scale = safe_threshold_scale;
        CeResult r;
        {
          py::gil_scoped_release release;
          r = run_ce(inst, K0, T, seed, o);
        }
        py::dict d;
        d["regret"] = r.regret;
        d["k_safe"] = r.k_safe;
        d["never_safe"] = r.never_safe;
        d["delta"] = r.delta;
        d["j_star"] = r.j_star;
        py::list epochs;
        for (const EpochRecord& e : r.epochs) epochs.append(epoch_to_dict(e));
        d["epochs"] = epochs;
        return d;
      },
      py::arg("instance"), py::arg("K0"), py::arg("T"), py::arg("seed"), py::arg("delta") = 0.0,
      py::arg("safe_threshold_scale") = 1.0);

  m.def(
      "fit_scaling",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const ScalingFit f = fit_scaling(x, y);
        return py::make_tuple(f.slope, f.intercept, f.r2);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "run_acceptance",
      [](std::vector<int> only, bool quick) {
        AcceptanceOptions o;
        o.only = std::move(only);
        o.quick = quick;
        std::vector<AcceptanceResult> res;
        {
          py::gil_scoped_release release;
          res = run_acceptance(o);
        }
        py::list out;
        for (const AcceptanceResult& r : res) {
          out.append(py::make_tuple(r.id, r.name, r.passed, r.detail));
        }
        return out;
      },
      py::arg("only") = std::vector<int>{}, py::arg("quick") = false);
}
