#include "ftns/polynomial.hpp"

#include <Eigen/QR>

#include <algorithm>

namespace ftns {

namespace {

void enumerate_exponents(int D, int degree, Index& cur, int var, int left, std::vector<Index>& out) {
  if (var == D) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[var] = e;
    enumerate_exponents(D, degree, cur, var + 1, left - e, out);
  }
  cur[var] = 0;
}

}  // namespace

MonomialTable::MonomialTable(int D, int degree) : D_(D), degree_(degree) {
  Index cur(D, 0);
  enumerate_exponents(D, degree, cur, 0, degree, exps_);
  std::sort(exps_.begin(), exps_.end());
  for (int i = 0; i < D; ++i) {
    Mat op = Mat::Zero(size(), size());
    for (int k = 0; k < size(); ++k) {
      Index e = exps_[k];
      if (e[i] == 0) continue;
      const double factor = e[i];
      --e[i];
      op(k, position(e)) = factor;
    }
    deriv_.push_back(op);
  }
}

int MonomialTable::position(const Index& e) const {
  auto it = std::lower_bound(exps_.begin(), exps_.end(), e);
  if (it == exps_.end() || *it != e) return -1;
  return static_cast<int>(it - exps_.begin());
}

PolyField derivative(const MonomialTable& tab, const PolyField& f, int i) {
  return f * tab.derivative_operator(i);
}

PolyField derivative(const MonomialTable& tab, const PolyField& f, const Index& idx) {
  PolyField g = f;
  for (int i : idx) g = g * tab.derivative_operator(i);
  return g;
}

PolyField random_poly_field(int comps, const MonomialTable& tab, Rng& rng) {
  return random_complex(comps, tab.size(), rng);
}

PolyField apply_system(const FTNSSystem& sys, const MonomialTable& tab, const PolyField& state) {
  PolyField out = PolyField::Zero(state.rows(), state.cols());
  auto accumulate = [&](int mu, int nu, const MultiIndexTensor& t) {
    const PolyField src = state.middleRows(sys.block_offset(nu), sys.dims[nu]);
    for (long f = 0; f < t.size(); ++f) {
      if (t.flat(f).isZero(0.0)) continue;
      const Index idx = unflatten(f, t.dim(), t.rank());
      out.middleRows(sys.block_offset(mu), sys.dims[mu]) += t.flat(f) * derivative(tab, src, idx);
    }
  };
  for (const auto& [key, t] : sys.A) accumulate(key.first, key.second, t);
  for (const auto& [key, t] : sys.B) accumulate(std::get<0>(key), std::get<2>(key), t);
  return out;
}

double span_residual(const MonomialTable& tab, const std::vector<PolyField>& features,
                     const std::vector<PolyField>& targets, int order) {
  std::vector<Index> alphas;
  for (int k = 0; k <= order; ++k)
    for (const Index& a : sym_index_basis(tab.D(), k)) alphas.push_back(a);
  const long nf = features.empty() ? 0 : features[0].rows();
  const long nt = targets.empty() ? 0 : targets[0].rows();
  const long m = tab.size();
  const long samples = static_cast<long>(features.size());
  Mat phi(samples * m, nf * static_cast<long>(alphas.size()));
  Mat y(samples * m, nt);
  for (long t = 0; t < samples; ++t) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const PolyField d = derivative(tab, features[t], alphas[a]);
      phi.block(t * m, static_cast<long>(a) * nf, m, nf) = d.transpose();
    }
    y.middleRows(t * m, m) = targets[t].transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(phi);
  const Mat coeff = cod.solve(y);
  return (phi * coeff - y).norm() / std::max(1.0, y.norm());
}

}  // namespace ftns
