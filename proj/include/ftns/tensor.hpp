#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace ftns {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Multi-index over {0..D-1}. The file format and reports use 1-based labels.
using Index = std::vector<int>;

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

long ipow(int base, int exp);
long binomial(int n, int k);

long flat_index(const Index& idx, int D);
Index unflatten(long flat, int D, int k);
Index canonical(Index idx);
// Number of distinct orderings of a multiset given as a sorted tuple.
long multiplicity(const Index& canon);
// Product s_{i1} ... s_{ik}.
double direction_power(const RVec& s, const Index& idx);

// Dense tensor with matrix-valued slots: D^k entries of shape rows x cols.
class MultiIndexTensor {
 public:
  MultiIndexTensor() = default;
  MultiIndexTensor(int D, int rank, int rows, int cols);

  static MultiIndexTensor constant(int D, const Mat& m);

  int dim() const { return D_; }
  int rank() const { return rank_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long size() const { return static_cast<long>(entries_.size()); }

  const Mat& at(const Index& idx) const;
  Mat& at(const Index& idx);
  const Mat& flat(long k) const { return entries_.at(k); }
  Mat& flat(long k) { return entries_.at(k); }

  double max_abs() const;
  bool is_zero(double tol = 0.0) const { return max_abs() <= tol; }
  bool same_shape(const MultiIndexTensor& o) const;

  MultiIndexTensor operator+(const MultiIndexTensor& o) const;
  MultiIndexTensor operator-(const MultiIndexTensor& o) const;
  MultiIndexTensor operator*(cplx a) const;

 private:
  int D_ = 1;
  int rank_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Mat> entries_;
};

// Positions are 0-based slot numbers.
MultiIndexTensor symmetrize(const MultiIndexTensor& t, const std::vector<int>& positions);
MultiIndexTensor alternate_part(const MultiIndexTensor& t, const std::vector<int>& positions);

inline constexpr double kUnitTol = 1e-12;

// Contracts every listed slot with s; the remaining slots keep their order.
MultiIndexTensor contract_direction(const MultiIndexTensor& t, const RVec& s,
                                    const std::vector<int>& positions,
                                    double unit_tol = kUnitTol);
// t(s, ..., s) as a single matrix. No unit check.
Mat contract_all(const MultiIndexTensor& t, const RVec& s);

MultiIndexTensor levi_civita(int D);

// Canonical non-decreasing k-tuples, lexicographically sorted.
std::vector<Index> sym_index_basis(int D, int k);
// Position of a tuple (any order) in sym_index_basis(D, k).
long sym_index_position(const Index& idx, int D);

class PermutationTable {
 public:
  explicit PermutationTable(int m);
  int degree() const { return m_; }
  const std::vector<std::vector<int>>& elements() const { return elements_; }
  const std::vector<int>& signs() const { return signs_; }

 private:
  int m_;
  std::vector<std::vector<int>> elements_;
  std::vector<int> signs_;
};

RVec normalized(const RVec& s);
void require_unit(const RVec& s, double tol = kUnitTol);

}  // namespace ftns
