#ifndef LPCFG_SPARSE_MATRIX_HPP
#define LPCFG_SPARSE_MATRIX_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <iosfwd>
#include <vector>

#include "lpcfg/errors.hpp"

namespace lpcfg {

// Coordinate-format sparse matrix. Duplicate coordinates are summed when the
// triplet list is compacted.
class SparseMatrix {
 public:
  struct Triplet {
    int row;
    int col;
    double value;
  };

  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}

  void add(int row, int col, double value) {
    if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
      throw Error("sparse matrix index out of range");
    }
    triplets_.push_back(Triplet{row, col, value});
    compacted_ = false;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  const std::vector<Triplet>& nonzeros() const {
    compact();
    return triplets_;
  }

  double value(int row, int col) const {
    compact();
    for (const Triplet& t : triplets_) {
      if (t.row == row && t.col == col) return t.value;
    }
    return 0.0;
  }

  // this * dense
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& dense) const {
    compact();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, dense.cols());
    for (const Triplet& t : triplets_) {
      out.row(t.row) += t.value * dense.row(t.col);
    }
    return out;
  }

  // transpose(this) * dense
  Eigen::MatrixXd transpose_multiply(const Eigen::MatrixXd& dense) const {
    compact();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cols_, dense.cols());
    for (const Triplet& t : triplets_) {
      out.row(t.col) += t.value * dense.row(t.row);
    }
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    compact();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
    for (const Triplet& t : triplets_) out(t.row, t.col) += t.value;
    return out;
  }

  double frobenius_squared() const {
    compact();
    double s = 0.0;
    for (const Triplet& t : triplets_) s += t.value * t.value;
    return s;
  }

  // `row col value` records, for oracle cross-checks.
  void dump(std::ostream& os) const;

 private:
  void compact() const {
    if (compacted_) return;
    std::sort(triplets_.begin(), triplets_.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::tie(a.row, a.col) < std::tie(b.row, b.col);
              });
    std::vector<Triplet> merged;
    for (const Triplet& t : triplets_) {
      if (!merged.empty() && merged.back().row == t.row &&
          merged.back().col == t.col) {
        merged.back().value += t.value;
      } else {
        merged.push_back(t);
      }
    }
    triplets_ = std::move(merged);
    compacted_ = true;
  }

  int rows_;
  int cols_;
  mutable std::vector<Triplet> triplets_;
  mutable bool compacted_ = true;
};

}  // namespace lpcfg

#endif  // LPCFG_SPARSE_MATRIX_HPP
