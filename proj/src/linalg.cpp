#include "ftns/linalg.hpp"

#include <Eigen/SVD>

#include <array>

#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace ftns {

namespace {

// Gram matrix of the shorter side, scaled so that the entries stay bounded.
Mat scaled_gram(const Mat& m, double& scale) {
  scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Mat::Zero(1, 1);
  const Mat a = m / scale;
  return a.rows() >= a.cols() ? Mat(a.adjoint() * a) : Mat(a * a.adjoint());
}

}  // namespace

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  double scale = 0.0;
  const Mat g = scaled_gram(m, scale);
  if (scale == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  return scale * std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1)));
}

double spectral_norm(const RMat& m) { return spectral_norm(Mat(m.cast<cplx>())); }

double min_singular_value(const Mat& m) {
  if (m.size() == 0) return 0.0;
  double scale = 0.0;
  const Mat g = scaled_gram(m, scale);
  if (scale == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  return scale * std::sqrt(std::max(0.0, es.eigenvalues()(0)));
}

double condition_number(const Mat& m) {
  if (m.size() == 0) return 1.0;
  const Eigen::PartialPivLU<Mat> lu(m);
  const Mat inv = lu.inverse();
  if (!inv.allFinite()) return std::numeric_limits<double>::infinity();
  return spectral_norm(m) * spectral_norm(inv);
}

Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

double min_hermitian_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_hermitian(const Mat& m, double tol) {
  return m.rows() == m.cols() && (m - m.adjoint()).norm() <= tol;
}

RMat nullspace(const RMat& a, double rel_tol, int* rank) {
  const long n = a.cols();
  if (a.rows() == 0) {
    if (rank) *rank = 0;
    return RMat::Identity(n, n);
  }
  RVec sv;
  RMat V;
  Eigen::BDCSVD<RMat> svd(a, Eigen::ComputeFullV);
  sv = svd.singularValues();
  V = svd.matrixV();
  // BDCSVD occasionally returns NaN or a non-orthonormal V on rank-deficient input.
  if (!sv.allFinite() || !V.allFinite() || (V.transpose() * V - RMat::Identity(n, n)).norm() > 1e-10) {
    Eigen::JacobiSVD<RMat> jac(a, Eigen::ComputeFullV);
    sv = jac.singularValues();
    V = jac.matrixV();
  }
  const double cut = rel_tol * (sv.size() ? std::max(sv(0), 1e-300) : 1.0);
  int r = 0;
  for (long k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++r;
  if (rank) *rank = r;
  return V.rightCols(n - r);
}

LeastNormSolution least_norm_solve(const RMat& a, const RVec& b, double rel_tol) {
  Eigen::CompleteOrthogonalDecomposition<RMat> cod;
  cod.setThreshold(rel_tol);
  cod.compute(a);
  LeastNormSolution out;
  out.x = cod.solve(b);
  out.residual = (a * out.x - b).norm();
  out.rank = static_cast<int>(cod.rank());
  return out;
}

RMat realify(const Mat& m) {
  RMat r(2 * m.rows(), 2 * m.cols());
  r << m.real(), -m.imag(), m.imag(), m.real();
  return r;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

RVec random_unit_vector(int D, Rng& rng) {
  RVec v(D);
  do {
    for (int i = 0; i < D; ++i) v(i) = gaussian(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

Mat random_complex(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = cplx(uniform(rng), uniform(rng));
  return m;
}

RMat random_real(int rows, int cols, Rng& rng) {
  RMat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = uniform(rng);
  return m;
}

Mat random_unitary(int n, Rng& rng) {
  Eigen::HouseholderQR<Mat> qr(random_complex(n, n, rng));
  return qr.householderQ() * Mat::Identity(n, n);
}

Mat random_hpd(int n, Rng& rng, double lo, double hi) {
  const Mat U = random_unitary(n, rng);
  RVec ev(n);
  for (int k = 0; k < n; ++k) ev(k) = uniform(rng, lo, hi);
  Mat H = U * ev.cast<cplx>().asDiagonal() * U.adjoint();
  return hermitian_part(H);
}

std::vector<RVec> icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<RVec> v;
  auto add = [&](double x, double y, double z) {
    RVec p(3);
    p << x, y, z;
    v.push_back(p / p.norm());
  };
  add(-1, t, 0), add(1, t, 0), add(-1, -t, 0), add(1, -t, 0);
  add(0, -1, t), add(0, 1, t), add(0, -1, -t), add(0, 1, -t);
  add(t, 0, -1), add(t, 0, 1), add(-t, 0, -1), add(-t, 0, 1);
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const RVec p = v[a] + v[b];
      v.push_back(p / p.norm());
      const int id = static_cast<int>(v.size()) - 1;
      mid[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& f : faces) {
      const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  return v;
}

std::vector<RVec> fibonacci_sphere(int count) {
  std::vector<RVec> out;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    RVec p(3);
    p << r * std::cos(golden * k), r * std::sin(golden * k), z;
    out.push_back(p / p.norm());
  }
  return out;
}

}  // namespace ftns
