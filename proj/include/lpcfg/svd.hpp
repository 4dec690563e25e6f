#ifndef LPCFG_SVD_HPP
#define LPCFG_SVD_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "lpcfg/sparse_matrix.hpp"

namespace lpcfg {

// Thin-SVD factors used to project inside/outside instances.
struct ProjectionPair {
  Eigen::MatrixXd U;                // d x k, orthonormal columns
  Eigen::MatrixXd V;                // d' x k, orthonormal columns
  Eigen::VectorXd singular_values;  // length k, nonincreasing

  int rank() const { return static_cast<int>(singular_values.size()); }
};

// Rank-k truncated SVD of a sparse matrix by a randomized range finder
// (oversampling 10, power iterations with re-orthonormalization; iterated
// past the initial 7 sweeps until the retained singular values stabilize).
// Deterministic given the seed. The returned rank is min(k, numerical rank).
// Sign convention: each U column's largest-magnitude entry is positive.
// Throws on k < 1 or k > min(rows, cols).
ProjectionPair truncated_svd(const SparseMatrix& matrix, int k, uint64_t seed);

}  // namespace lpcfg

#endif  // LPCFG_SVD_HPP
