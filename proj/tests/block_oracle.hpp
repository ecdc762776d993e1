#pragma once

// Hand-written principal matrices for N = 2 and N = 3 over the full (all
// orderings) state basis, written block by block, plus the symbol obtained by
// the diag(s_i s_j, s_i, 1) contraction. Used as an independent oracle for the
// generic builder.

#include "ftns/system.hpp"

#include <vector>

namespace oracle {

using namespace ftns;

inline const Mat& coef(const FTNSSystem& s, int mu, int nu, const Index& idx) {
  static const Mat empty;
  const MultiIndexTensor* t = s.A_find(mu, nu);
  return t ? t->at(idx) : empty;
}

inline void add(Mat& M, long r0, long c0, const Mat& blk, double w = 1.0) {
  if (blk.size()) M.block(r0, c0, blk.rows(), blk.cols()) += w * blk;
}

inline double kd(int a, int b) { return a == b ? 1.0 : 0.0; }

// Rows (u_i, v), columns (u_j, v).
inline std::vector<Mat> principal_n2(const FTNSSystem& s) {
  const int D = s.D, n0 = s.dims[0], n1 = s.dims[1];
  const long off1 = static_cast<long>(D) * n0;
  std::vector<Mat> out;
  for (int p = 0; p < D; ++p) {
    Mat M = Mat::Zero(off1 + n1, off1 + n1);
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < D; ++j) add(M, i * n0, j * n0, coef(s, 0, 0, {j}), kd(p, i));
      add(M, i * n0, off1, coef(s, 0, 1, {}), kd(p, i));
    }
    for (int j = 0; j < D; ++j) add(M, off1, j * n0, coef(s, 1, 0, {p, j}));
    add(M, off1, off1, coef(s, 1, 1, {p}));
    out.push_back(M);
  }
  return out;
}

// Rows (u_kl, v_k, w), columns (u_mn, v_m, w); symmetrization over (kl) and (mn).
inline std::vector<Mat> principal_n3(const FTNSSystem& s) {
  const int D = s.D, n0 = s.dims[0], n1 = s.dims[1], n2 = s.dims[2];
  const long off1 = static_cast<long>(D) * D * n0, off2 = off1 + static_cast<long>(D) * n1;
  const long n = off2 + n2;
  auto u = [&](int k, int l) { return static_cast<long>(k * D + l) * n0; };
  auto v = [&](int k) { return off1 + static_cast<long>(k) * n1; };
  std::vector<Mat> out;
  for (int p = 0; p < D; ++p) {
    Mat M = Mat::Zero(n, n);
    for (int k = 0; k < D; ++k)
      for (int l = 0; l < D; ++l) {
        // u row: delta^p_(k delta^(m_l) A^n), averaged over both orderings of (kl) and (mn).
        for (int m = 0; m < D; ++m)
          for (int q = 0; q < D; ++q) {
            const double w = 0.25 * (kd(p, k) * kd(m, l) + kd(p, l) * kd(m, k));
            const double w2 = 0.25 * (kd(p, k) * kd(q, l) + kd(p, l) * kd(q, k));
            add(M, u(k, l), u(m, q), coef(s, 0, 0, {q}), w);
            add(M, u(k, l), u(m, q), coef(s, 0, 0, {m}), w2);
          }
        for (int m = 0; m < D; ++m)
          add(M, u(k, l), v(m), coef(s, 0, 1, {}), 0.5 * (kd(p, k) * kd(m, l) + kd(p, l) * kd(m, k)));
      }
    for (int k = 0; k < D; ++k) {
      for (int m = 0; m < D; ++m)
        for (int q = 0; q < D; ++q)
          add(M, v(k), u(m, q), 0.5 * (coef(s, 1, 0, {m, q}) + coef(s, 1, 0, {q, m})), kd(p, k));
      for (int m = 0; m < D; ++m) add(M, v(k), v(m), coef(s, 1, 1, {m}), kd(p, k));
      add(M, v(k), off2, coef(s, 1, 2, {}), kd(p, k));
    }
    for (int m = 0; m < D; ++m) {
      for (int q = 0; q < D; ++q)
        add(M, off2, u(m, q), 0.5 * (coef(s, 2, 0, {p, m, q}) + coef(s, 2, 0, {p, q, m})));
      add(M, off2, v(m), coef(s, 2, 1, {p, m}));
    }
    add(M, off2, off2, coef(s, 2, 2, {p}));
    out.push_back(M);
  }
  return out;
}

// S^N lift over the full basis: u_I = s_I v.
inline Mat full_lift(const FTNSSystem& s, const RVec& dir) {
  const int D = s.D;
  long rows = 0;
  for (int mu = 0; mu < s.N; ++mu) {
    long c = 1;
    for (int a = 0; a < s.N - mu - 1; ++a) c *= D;
    rows += c * s.dims[mu];
  }
  Mat R = Mat::Zero(rows, s.total_dim());
  long r = 0;
  int col = 0;
  for (int mu = 0; mu < s.N; ++mu) {
    const int L = s.N - mu - 1;
    long c = 1;
    for (int a = 0; a < L; ++a) c *= D;
    for (long f = 0; f < c; ++f) {
      double w = 1.0;
      long g = f;
      for (int a = 0; a < L; ++a) {
        w *= dir(g % D);
        g /= D;
      }
      for (int a = 0; a < s.dims[mu]; ++a) R(r + f * s.dims[mu] + a, col + a) = w;
    }
    r += c * s.dims[mu];
    col += s.dims[mu];
  }
  return R;
}

inline Mat symbol_from(const std::vector<Mat>& Ap, const FTNSSystem& s, const RVec& dir) {
  const Mat R = full_lift(s, dir);
  Mat P = Mat::Zero(R.cols(), R.cols());
  for (int p = 0; p < s.D; ++p) P += dir(p) * (R.transpose() * Ap[p] * R);
  return P;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double rel_entrywise(const Mat& a, const Mat& b) {
  return max_abs(a - b) / std::max(1.0, max_abs(b));
}

}  // namespace oracle
