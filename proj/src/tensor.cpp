#include "ftns/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ftns {

long ipow(int base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long flat_index(const Index& idx, int D) {
  long f = 0;
  for (int i : idx) f = f * D + i;
  return f;
}

Index unflatten(long flat, int D, int k) {
  Index idx(k);
  for (int a = k - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % D);
    flat /= D;
  }
  return idx;
}

Index canonical(Index idx) {
  std::sort(idx.begin(), idx.end());
  return idx;
}

long multiplicity(const Index& canon) {
  long total = 1;
  int run = 0;
  for (std::size_t a = 0; a < canon.size(); ++a) {
    run = (a > 0 && canon[a] == canon[a - 1]) ? run + 1 : 1;
    total = total * static_cast<long>(a + 1) / run;
  }
  return total;
}

double direction_power(const RVec& s, const Index& idx) {
  double r = 1.0;
  for (int i : idx) r *= s(i);
  return r;
}

MultiIndexTensor::MultiIndexTensor(int D, int rank, int rows, int cols)
    : D_(D), rank_(rank), rows_(rows), cols_(cols) {
  if (D < 1) throw TensorError("spatial dimension must be positive");
  if (rank < 0) throw TensorError("rank must be non-negative");
  entries_.assign(ipow(D, rank), Mat::Zero(rows, cols));
}

MultiIndexTensor MultiIndexTensor::constant(int D, const Mat& m) {
  MultiIndexTensor t(D, 0, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  t.entries_[0] = m;
  return t;
}

const Mat& MultiIndexTensor::at(const Index& idx) const {
  if (static_cast<int>(idx.size()) != rank_) throw TensorError("index length does not match rank");
  for (int i : idx)
    if (i < 0 || i >= D_) throw TensorError("index component out of range");
  return entries_[flat_index(idx, D_)];
}

Mat& MultiIndexTensor::at(const Index& idx) {
  return const_cast<Mat&>(static_cast<const MultiIndexTensor&>(*this).at(idx));
}

double MultiIndexTensor::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_)
    if (e.size() > 0) m = std::max(m, e.cwiseAbs().maxCoeff());
  return m;
}

bool MultiIndexTensor::same_shape(const MultiIndexTensor& o) const {
  return D_ == o.D_ && rank_ == o.rank_ && rows_ == o.rows_ && cols_ == o.cols_;
}

MultiIndexTensor MultiIndexTensor::operator+(const MultiIndexTensor& o) const {
  if (!same_shape(o)) throw TensorError("shape mismatch in tensor sum");
  MultiIndexTensor r = *this;
  for (long k = 0; k < size(); ++k) r.entries_[k] += o.entries_[k];
  return r;
}

MultiIndexTensor MultiIndexTensor::operator-(const MultiIndexTensor& o) const {
  return *this + o * cplx(-1.0);
}

MultiIndexTensor MultiIndexTensor::operator*(cplx a) const {
  MultiIndexTensor r = *this;
  for (auto& e : r.entries_) e *= a;
  return r;
}

namespace {

void check_positions(const MultiIndexTensor& t, const std::vector<int>& positions) {
  std::vector<int> seen;
  for (int p : positions) {
    if (p < 0 || p >= t.rank())
      throw TensorError("slot " + std::to_string(p) + " out of range for rank " +
                        std::to_string(t.rank()));
    if (std::find(seen.begin(), seen.end(), p) != seen.end())
      throw TensorError("repeated slot " + std::to_string(p));
    seen.push_back(p);
  }
}

MultiIndexTensor signed_average(const MultiIndexTensor& t, const std::vector<int>& positions,
                                bool use_sign) {
  check_positions(t, positions);
  const int m = static_cast<int>(positions.size());
  MultiIndexTensor r(t.dim(), t.rank(), t.rows(), t.cols());
  if (m == 0) return t;
  PermutationTable perms(m);
  const double weight = 1.0 / static_cast<double>(perms.elements().size());
  for (long f = 0; f < t.size(); ++f) {
    const Index idx = unflatten(f, t.dim(), t.rank());
    Mat acc = Mat::Zero(t.rows(), t.cols());
    for (std::size_t q = 0; q < perms.elements().size(); ++q) {
      const auto& pi = perms.elements()[q];
      Index src = idx;
      for (int a = 0; a < m; ++a) src[positions[a]] = idx[positions[pi[a]]];
      const double sgn = use_sign ? perms.signs()[q] : 1.0;
      acc += sgn * t.flat(flat_index(src, t.dim()));
    }
    r.flat(f) = weight * acc;
  }
  return r;
}

}  // namespace

MultiIndexTensor symmetrize(const MultiIndexTensor& t, const std::vector<int>& positions) {
  return signed_average(t, positions, false);
}

MultiIndexTensor alternate_part(const MultiIndexTensor& t, const std::vector<int>& positions) {
  return signed_average(t, positions, true);
}

RVec normalized(const RVec& s) {
  const double n = s.norm();
  if (n == 0.0) throw TensorError("zero direction vector");
  return s / n;
}

void require_unit(const RVec& s, double tol) {
  if (std::abs(s.norm() - 1.0) > tol)
    throw TensorError("direction is not a unit vector (|s| = " + std::to_string(s.norm()) + ")");
}

MultiIndexTensor contract_direction(const MultiIndexTensor& t, const RVec& s,
                                    const std::vector<int>& positions, double unit_tol) {
  check_positions(t, positions);
  if (s.size() != t.dim()) throw TensorError("direction has wrong dimension");
  require_unit(s, unit_tol);
  std::vector<int> keep;
  for (int a = 0; a < t.rank(); ++a)
    if (std::find(positions.begin(), positions.end(), a) == positions.end()) keep.push_back(a);
  MultiIndexTensor r(t.dim(), static_cast<int>(keep.size()), t.rows(), t.cols());
  for (long f = 0; f < t.size(); ++f) {
    const Index idx = unflatten(f, t.dim(), t.rank());
    double w = 1.0;
    for (int p : positions) w *= s(idx[p]);
    if (w == 0.0) continue;
    Index out(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) out[a] = idx[keep[a]];
    r.flat(flat_index(out, t.dim())) += w * t.flat(f);
  }
  return r;
}

Mat contract_all(const MultiIndexTensor& t, const RVec& s) {
  Mat acc = Mat::Zero(t.rows(), t.cols());
  for (long f = 0; f < t.size(); ++f) {
    const double w = direction_power(s, unflatten(f, t.dim(), t.rank()));
    if (w != 0.0) acc += w * t.flat(f);
  }
  return acc;
}

MultiIndexTensor levi_civita(int D) {
  if (D != 3) throw TensorError("Levi-Civita symbol is only provided for D = 3");
  MultiIndexTensor e(3, 3, 1, 1);
  PermutationTable perms(3);
  for (std::size_t q = 0; q < perms.elements().size(); ++q) {
    const auto& p = perms.elements()[q];
    e.at({p[0], p[1], p[2]})(0, 0) = perms.signs()[q];
  }
  return e;
}

std::vector<Index> sym_index_basis(int D, int k) {
  std::vector<Index> out;
  Index cur(k, 0);
  if (k == 0) return {Index{}};
  while (true) {
    out.push_back(cur);
    int a = k - 1;
    while (a >= 0 && cur[a] == D - 1) --a;
    if (a < 0) break;
    ++cur[a];
    for (int b = a + 1; b < k; ++b) cur[b] = cur[a];
  }
  return out;
}

long sym_index_position(const Index& idx, int D) {
  const Index c = canonical(idx);
  const int k = static_cast<int>(c.size());
  long rank = 0;
  int prev = 0;
  for (int a = 0; a < k; ++a) {
    const int rest = k - a - 1;
    for (int v = prev; v < c[a]; ++v) rank += binomial(D - v + rest - 1, rest);
    prev = c[a];
  }
  return rank;
}

PermutationTable::PermutationTable(int m) : m_(m) {
  if (m < 0) throw TensorError("negative permutation degree");
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  do {
    elements_.push_back(p);
    int inversions = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (p[a] > p[b]) ++inversions;
    signs_.push_back(inversions % 2 == 0 ? 1 : -1);
  } while (std::next_permutation(p.begin(), p.end()));
}

}  // namespace ftns
