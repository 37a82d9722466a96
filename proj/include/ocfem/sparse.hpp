#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ocfem/errors.hpp"

namespace ocfem {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed-row sparse matrix. Duplicate triplets are summed in their
/// original order, so assembly results are independent of any parallel
/// element-evaluation schedule as long as triplet emission order is fixed.
class SparseOperator {
 public:
  SparseOperator() = default;

  static SparseOperator from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix dimension");
    SparseOperator op;
    op.rows_ = rows;
    op.cols_ = cols;
    // bucket by row, keeping emission order within each row
    std::vector<int> counts(rows + 1, 0);
    for (const auto& t : trips) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw InvalidArgument("triplet index out of range");
      ++counts[t.row + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    std::vector<std::pair<int, double>> bucketed(trips.size());
    {
      std::vector<int> cursor(counts.begin(), counts.end() - 1);
      for (const auto& t : trips) bucketed[cursor[t.row]++] = {t.col, t.value};
    }
    op.row_ptr_.assign(rows + 1, 0);
    op.col_.reserve(trips.size());
    op.val_.reserve(trips.size());
    std::vector<std::pair<int, double>> row_entries;
    for (int r = 0; r < rows; ++r) {
      row_entries.assign(bucketed.begin() + counts[r], bucketed.begin() + counts[r + 1]);
      std::stable_sort(row_entries.begin(), row_entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [c, v] : row_entries) {
        if (static_cast<int>(op.col_.size()) > op.row_ptr_[r] && op.col_.back() == c)
          op.val_.back() += v;
        else {
          op.col_.push_back(c);
          op.val_.push_back(v);
        }
      }
      op.row_ptr_[r + 1] = static_cast<int>(op.col_.size());
    }
    return op;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  /// Dimension of a square operator.
  int dim() const {
    if (rows_ != cols_) throw InvalidArgument("dim() on non-square operator");
    return rows_;
  }
  long nnz() const { return static_cast<long>(val_.size()); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_indices() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != cols_) throw InvalidArgument("apply: dimension mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows_);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[r] = acc;
    }
    return y;
  }

  double quadratic_form(const Eigen::VectorXd& x) const { return x.dot(apply(x)); }

  std::vector<double> row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s[r] += val_[k];
    return s;
  }

  double coeff(int r, int c) const {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] == c) return val_[k];
    return 0.0;
  }

  /// Largest |a_ij - a_ji| over stored entries.
  double max_asymmetry() const {
    if (rows_ != cols_) throw InvalidArgument("max_asymmetry on non-square operator");
    double dev = 0.0;
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        dev = std::max(dev, std::abs(val_[k] - coeff(col_[k], r)));
    return dev;
  }

  /// In-place sum with a same-shaped operator, merging sorted CSR rows.
  void add(const SparseOperator& other, double scale = 1.0) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
      throw InvalidArgument("add: operator shapes differ");
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;
    col.reserve(col_.size() + other.col_.size());
    val.reserve(col.capacity());
    for (int r = 0; r < rows_; ++r) {
      int a = row_ptr_[r], b = other.row_ptr_[r];
      const int a_end = row_ptr_[r + 1], b_end = other.row_ptr_[r + 1];
      while (a < a_end || b < b_end) {
        if (b >= b_end || (a < a_end && col_[a] < other.col_[b])) {
          col.push_back(col_[a]);
          val.push_back(val_[a++]);
        } else if (a >= a_end || other.col_[b] < col_[a]) {
          col.push_back(other.col_[b]);
          val.push_back(scale * other.val_[b++]);
        } else {
          col.push_back(col_[a]);
          val.push_back(val_[a++] + scale * other.val_[b++]);
        }
      }
      row_ptr.push_back(static_cast<int>(col.size()));
    }
    row_ptr_ = std::move(row_ptr);
    col_ = std::move(col);
    val_ = std::move(val);
  }

  /// Principal submatrix on the (sorted, unique) kept index set.
  SparseOperator restricted(const std::vector<int>& keep) const {
    if (rows_ != cols_) throw InvalidArgument("restricted on non-square operator");
    std::vector<int> local(rows_, -1);
    for (size_t i = 0; i < keep.size(); ++i) local[keep[i]] = static_cast<int>(i);
    std::vector<Triplet> trips;
    for (int r = 0; r < rows_; ++r) {
      if (local[r] < 0) continue;
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (local[col_[k]] >= 0) trips.push_back({local[r], local[col_[k]], val_[k]});
    }
    const int n = static_cast<int>(keep.size());
    return from_triplets(n, n, trips);
  }

  Eigen::SparseMatrix<double> to_eigen() const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(val_.size());
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        trips.emplace_back(r, col_[k], val_[k]);
    Eigen::SparseMatrix<double> A(rows_, cols_);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    return A;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) A(r, col_[k]) = val_[k];
    return A;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
};

}  // namespace ocfem
