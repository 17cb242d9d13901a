#include "lqrlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace lqrlab {

double op_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

double min_eig_sym(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig_sym(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double op_norm_sym(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_psd(const Mat& M, double tol) { return min_eig_sym(M) >= -tol; }

bool all_finite(const Mat& M) { return M.allFinite(); }

double sign_normalize(Eigen::Ref<Vec> v) {
  if (v.size() == 0) return 1.0;
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // 1e-12 slack so that numerically equal magnitudes resolve to the first index.
    if (std::abs(v(i)) > best * (1.0 + 1e-12)) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) {
    v = -v;
    return -1.0;
  }
  return 1.0;
}

SymEigen sorted_sym_eigen(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M));
  const Eigen::Index n = M.rows();
  const Vec& vals = es.eigenvalues();
  const Mat& vecs = es.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return vals(a) > vals(b);
  });

  SymEigen out{Vec(n), Mat(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = vals(order[static_cast<size_t>(j)]);
    out.vectors.col(j) = vecs.col(order[static_cast<size_t>(j)]);
  }

  const double scale = std::max(1.0, n > 0 ? out.values.cwiseAbs().maxCoeff() : 0.0);
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && std::abs(out.values(stop) - out.values(start)) <= 1e-10 * scale) ++stop;
    if (stop - start > 1) {
      out.degenerate = true;
      out.vectors.middleCols(start, stop - start) =
          canonical_basis(out.vectors.middleCols(start, stop - start));
    }
    start = stop;
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    Vec col = out.vectors.col(j);
    sign_normalize(col);
    out.vectors.col(j) = col;
  }
  return out;
}

Mat canonical_basis(const Mat& Q) {
  const Eigen::Index n = Q.rows();
  const Eigen::Index k = Q.cols();
  Mat out(n, k);
  // Projections of the canonical axes onto range(Q); pivoted Gram-Schmidt
  // always takes the axis with the largest remaining component.
  Mat cand = Q * Q.transpose();
  for (Eigen::Index found = 0; found < k; ++found) {
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double nv = cand.col(i).norm();
      if (nv > best_norm * (1.0 + 1e-9)) {
        best_norm = nv;
        best = i;
      }
    }
    Vec v = cand.col(best);
    for (Eigen::Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
    out.col(found) = v / v.norm();
    for (Eigen::Index i = 0; i < n; ++i) {
      cand.col(i) -= out.col(found).dot(cand.col(i)) * out.col(found);
    }
  }
  return out;
}

}  // namespace lqrlab
