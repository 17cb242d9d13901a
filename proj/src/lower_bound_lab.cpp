#include "lqrlab/lower_bound_lab.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lqrlab/perturbation.hpp"

namespace lqrlab {

namespace {

nlohmann::json to_json(const Mat& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

PackingInstance build_packing(const LqrInstance& inst, const RiccatiSolution& star, int m,
                              double eps_pack, const SignMatrix& e) {
  const Eigen::Index dx = inst.dx();
  const Eigen::Index n = inst.du();
  if (m < 1 || m > dx) throw ValidationError("build_packing: need 1 <= m <= d_x");
  if (!(eps_pack >= 0.0) || !std::isfinite(eps_pack)) throw ValidationError("build_packing: eps_pack must be >= 0");
  if (e.rows() != n || e.cols() != m) throw ValidationError("build_packing: e must be d_u x m");
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e.data()[i] != 1 && e.data()[i] != -1) throw ValidationError("build_packing: e entries must be +-1");
  }

  PackingInstance pk;
  pk.e = e;
  pk.eps_pack = eps_pack;

  const Mat& P = star.P;
  const Mat& B = inst.B();
  const Mat S = inst.Ru() + B.transpose() * P * B;
  const SymEigen w = sorted_sym_eigen(S.inverse());
  pk.W = w.vectors;
  pk.mu = w.values;

  // Right singular vectors from the eigenbasis of M'M, which inherits the
  // deterministic tie-break; left vectors follow as M v / s.
  const Mat M = P * (inst.A() + B * star.K);
  const SymEigen r = sorted_sym_eigen(M.transpose() * M);
  pk.degenerate = w.degenerate || r.degenerate;
  pk.V = r.vectors.leftCols(m);
  pk.singular_values = r.values.head(m).cwiseMax(0.0).cwiseSqrt();
  pk.U.resize(dx, m);
  const double s_max = std::sqrt(std::max(0.0, r.values(0)));
  for (int j = 0; j < m; ++j) {
    const double s = pk.singular_values(j);
    if (!(s > 1e-12 * s_max)) {
      throw ValidationError("build_packing: singular value of P A_cl vanishes; use a smaller m");
    }
    pk.U.col(j) = M * pk.V.col(j) / s;
  }

  pk.Delta = Mat::Zero(dx, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      pk.Delta += (eps_pack * e(i, j)) * pk.U.col(j) * pk.W.col(i).transpose();

  pk.A_e = inst.A() - pk.Delta * star.K;
  pk.B_e = B + pk.Delta;

  const double p_norm = op_norm_sym(P);
  const double c_safe = certificate_constants(P).c_safe;
  pk.outside_guard =
      eps_pack * eps_pack * static_cast<double>(n * m) > 1.0 / (2.0 * c_safe * p_norm);
  return pk;
}

Mat first_order_controller(const LqrInstance& inst, const RiccatiSolution& star,
                           const PackingInstance& packing) {
  return star.K + special_perturbation_derivative(inst, star, packing.Delta);
}

SignMatrix hamming_decode(const Mat& K_hat, const RiccatiSolution& star,
                          const PackingInstance& packing) {
  if (K_hat.rows() != star.K.rows() || K_hat.cols() != star.K.cols()) {
    throw ValidationError("hamming_decode: K_hat shape differs from K_star");
  }
  const Mat proj = -(packing.W.transpose() * (K_hat - star.K) * packing.V);
  SignMatrix out(proj.rows(), proj.cols());
  for (Eigen::Index i = 0; i < proj.rows(); ++i)
    for (Eigen::Index j = 0; j < proj.cols(); ++j) out(i, j) = proj(i, j) < 0.0 ? -1 : 1;
  return out;
}

int hamming_distance(const SignMatrix& a, const SignMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("hamming_distance: shape mismatch");
  return static_cast<int>((a.array() != b.array()).count());
}

double kl_between(const Mat& delta0, const Mat& delta1, const Mat& lambda_tau) {
  if (delta0.rows() != delta1.rows() || delta0.cols() != delta1.cols()) {
    throw ValidationError("kl_between: Delta shapes differ");
  }
  if (lambda_tau.rows() != delta0.cols() || lambda_tau.cols() != delta0.cols()) {
    throw ValidationError("kl_between: Lambda_tau must be d_u x d_u");
  }
  const Mat D = delta0 - delta1;
  return 0.5 * (D * symmetrize(lambda_tau) * D.transpose()).trace();
}

ScaledIdentity scaled_identity_instance(double a, Eigen::Index dx, Eigen::Index du) {
  if (!(a > 0.0 && a <= 1.0)) throw ValidationError("scaled_identity_instance: a must lie in (0, 1]");
  if (dx < 1 || du < 1 || du > dx) throw ValidationError("scaled_identity_instance: need 1 <= d_u <= d_x");
  if (du < dx && a >= 1.0) {
    throw ValidationError("scaled_identity_instance: a = 1 with d_u < d_x is not stabilizable");
  }
  Mat B = Mat::Zero(dx, du);
  B.topRows(du).setIdentity();
  const double a2 = a * a;
  return {LqrInstance::identity_costs(a * Mat::Identity(dx, dx), std::move(B)),
          0.5 * (a2 + std::sqrt(a2 * a2 + 4.0))};
}

std::string packing_to_json(const PackingInstance& pk) {
  nlohmann::json j;
  nlohmann::json e = nlohmann::json::array();
  for (Eigen::Index i = 0; i < pk.e.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < pk.e.cols(); ++c) row.push_back(pk.e(i, c));
    e.push_back(std::move(row));
  }
  j["e"] = std::move(e);
  j["eps_pack"] = pk.eps_pack;
  j["W"] = to_json(pk.W);
  j["V"] = to_json(pk.V);
  j["U"] = to_json(pk.U);
  j["Delta"] = to_json(pk.Delta);
  j["A_e"] = to_json(pk.A_e);
  j["B_e"] = to_json(pk.B_e);
  j["degenerate"] = pk.degenerate;
  j["outside_guard"] = pk.outside_guard;
  return j.dump(2);
}

void write_packing_json(const PackingInstance& packing, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << packing_to_json(packing) << '\n';
}

}  // namespace lqrlab
