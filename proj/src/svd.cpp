#include "lpcfg/svd.hpp"

#include <algorithm>
#include <cmath>

#include "lpcfg/rng.hpp"

namespace lpcfg {

namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() *
         Eigen::MatrixXd::Identity(y.rows(), std::min(y.rows(), y.cols()));
}

void apply_sign_convention(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (int j = 0; j < u.cols(); ++j) {
    int arg = 0;
    double best = std::abs(u(0, j));
    for (int i = 1; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > best) {
        best = std::abs(u(i, j));
        arg = i;
      }
    }
    if (u(arg, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
}

}  // namespace

ProjectionPair truncated_svd(const SparseMatrix& matrix, int k, uint64_t seed) {
  const int rows = matrix.rows();
  const int cols = matrix.cols();
  if (k < 1 || k > std::min(rows, cols)) {
    throw Error("svd rank k=" + std::to_string(k) + " out of range for " +
                std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
  const int oversample = 10;
  const int l = std::min(k + oversample, std::min(rows, cols));

  RandomSource rng(derive_seed(seed, "svd-range-finder"));
  Eigen::MatrixXd gauss(cols, l);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < l; ++j) gauss(i, j) = rng.normal();

  Eigen::MatrixXd q = orthonormalize(matrix.multiply(gauss));

  // Power iterations with re-orthonormalization. Seven sweeps up front, then
  // keep sweeping until the retained singular values stop moving.
  auto sweep = [&]() {
    Eigen::MatrixXd w = orthonormalize(matrix.transpose_multiply(q));
    q = orthonormalize(matrix.multiply(w));
  };
  for (int i = 0; i < 7; ++i) sweep();

  Eigen::JacobiSVD<Eigen::MatrixXd> small_svd;
  Eigen::VectorXd prev;
  const int max_extra_sweeps = 300;
  for (int it = 0;; ++it) {
    // B = Q^T A via A^T Q.
    Eigen::MatrixXd b = matrix.transpose_multiply(q).transpose();
    small_svd.compute(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = small_svd.singularValues().head(std::min<int>(k, l));
    if (prev.size() == s.size()) {
      double scale = std::max(1e-300, s(0));
      if ((s - prev).cwiseAbs().maxCoeff() <= 1e-12 * scale) break;
    }
    prev = s;
    if (it >= max_extra_sweeps) break;
    sweep();
  }

  Eigen::MatrixXd ub = small_svd.matrixU();
  Eigen::MatrixXd vb = small_svd.matrixV();
  Eigen::VectorXd s = small_svd.singularValues();

  // Drop numerically-zero singular values: the factorization rank is
  // min(k, rank(matrix)).
  double tol = 1e-12 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int rank = 0;
  while (rank < std::min<int>(k, s.size()) && s(rank) > tol) ++rank;

  ProjectionPair out;
  out.U = q * ub.leftCols(rank);
  out.V = vb.leftCols(rank);
  out.singular_values = s.head(rank);
  apply_sign_convention(out.U, out.V);
  return out;
}

}  // namespace lpcfg
