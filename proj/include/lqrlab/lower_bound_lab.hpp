#pragma once

#include <iosfwd>
#include <string>

#include "lqrlab/control_core.hpp"

namespace lqrlab {

using SignMatrix = Eigen::MatrixXi;

/// Alternative system (A - Delta K_star, B + Delta) that K_star cannot tell
/// apart from the nominal one.
///
/// With M = P_star A_cl_star = sum_j s_j u_j v_j', the perturbation is
/// Delta = eps_pack sum_{ij} e_ij u_j w_i' (d_x x d_u), so that to first order
/// w_i'(K_inf(A_e, B_e) - K_star) v_j = -eps_pack e_ij s_j mu_i with mu_i > 0
/// the eigenvalue of (R_u + B'P B)^{-1} for w_i.
struct PackingInstance {
  SignMatrix e;      ///< n x m, entries +-1, n = d_u
  double eps_pack = 0.0;
  Mat W;             ///< d_u x n eigenvectors of (R_u + B'PB)^{-1}, decreasing eigenvalue
  Vec mu;            ///< the matching eigenvalues
  Mat V;             ///< d_x x m top right singular vectors of P_star A_cl_star (decoding side)
  Mat U;             ///< d_x x m matching left singular vectors (perturbation side)
  Vec singular_values;
  Mat Delta;         ///< d_x x d_u
  Mat A_e;
  Mat B_e;
  bool degenerate = false;    ///< a basis came from a repeated eigenvalue cluster
  bool outside_guard = false;  ///< eps_pack^2 n m > 1 / (2 C_safe ||P_star||)
};

PackingInstance build_packing(const LqrInstance& inst, const RiccatiSolution& star, int m,
                              double eps_pack, const SignMatrix& e);

/// K_star plus the first-order displacement along the packing direction.
Mat first_order_controller(const LqrInstance& inst, const RiccatiSolution& star,
                           const PackingInstance& packing);

/// e_hat_ij = sign(-w_i'(K_hat - K_star) v_j) with sign(0) = +1.
SignMatrix hamming_decode(const Mat& K_hat, const RiccatiSolution& star,
                          const PackingInstance& packing);

int hamming_distance(const SignMatrix& a, const SignMatrix& b);

/// 1/2 tr((Delta0 - Delta1) Lambda_tau (Delta0 - Delta1)').
double kl_between(const Mat& delta0, const Mat& delta1, const Mat& lambda_tau);

struct ScaledIdentity {
  LqrInstance instance;
  double p_closed_form;  ///< (a^2 + sqrt(a^4 + 4)) / 2
};

/// A = a I_{d_x}, B = first d_u canonical directions, R_x = R_u = I.
ScaledIdentity scaled_identity_instance(double a, Eigen::Index dx, Eigen::Index du);

/// JSON object with e, eps_pack, W, V, U, Delta, A_e, B_e and the flags.
std::string packing_to_json(const PackingInstance& packing);
void write_packing_json(const PackingInstance& packing, const std::string& path);

}  // namespace lqrlab
