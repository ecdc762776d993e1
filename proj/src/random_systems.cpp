#include "ftns/random_systems.hpp"

#include "ftns/symmetrizer.hpp"

namespace ftns {

namespace {

Mat scalar(double x) { return Mat::Constant(1, 1, cplx(x, 0.0)); }

}  // namespace

FTNSSystem wave_system(int D) {
  FTNSSystem s = FTNSSystem::zero(2, D, {1, 1}, "wave");
  s.A_ref(0, 1).at({}) = scalar(1.0);
  MultiIndexTensor& a = s.A_ref(1, 0);
  for (int i = 0; i < D; ++i) a.at({i, i}) = scalar(1.0);
  s.fields = {{"u", 0, 0, 1}, {"v", 1, 0, 1}};
  return s;
}

FTNSSystem companion_chain(int D, int axis) {
  if (axis < 0) axis = D - 1;
  FTNSSystem s = FTNSSystem::zero(3, D, {1, 1, 1}, "companion chain");
  s.A_ref(0, 1).at({}) = scalar(1.0);
  s.A_ref(1, 2).at({}) = scalar(1.0);
  s.A_ref(2, 0).at({axis, axis, axis}) = scalar(1.0);
  s.fields = {{"u", 0, 0, 1}, {"v", 1, 0, 1}, {"w", 2, 0, 1}};
  return s;
}

FTNSSystem advection_system(int N, const RVec& c, const std::vector<int>& dims) {
  const int D = static_cast<int>(c.size());
  FTNSSystem s = FTNSSystem::zero(N, D, dims, "advection");
  for (int mu = 0; mu < N; ++mu) {
    MultiIndexTensor& a = s.A_ref(mu, mu);
    for (int k = 0; k < D; ++k) a.at({k}) = c(k) * Mat::Identity(dims[mu], dims[mu]);
  }
  return s;
}

FTNSSystem random_system(int N, int D, const std::vector<int>& dims, Rng& rng, bool with_lower) {
  FTNSSystem s = FTNSSystem::zero(N, D, dims, "random");
  for (int mu = 0; mu < N; ++mu)
    for (int nu = 0; nu <= std::min(mu + 1, N - 1); ++nu) {
      MultiIndexTensor& a = s.A_ref(mu, nu);
      for (long f = 0; f < a.size(); ++f) a.flat(f) = random_real(a.rows(), a.cols(), rng).cast<cplx>();
      if (!with_lower) continue;
      for (int rho = 1; rho <= mu - nu + 1; ++rho) {
        MultiIndexTensor& b = s.B_ref(mu, rho, nu);
        for (long f = 0; f < b.size(); ++f) b.flat(f) = random_real(b.rows(), b.cols(), rng).cast<cplx>();
      }
    }
  return s;
}

ReverseEngineered reverse_engineered_system(int N, int D, const std::vector<int>& dims, Rng& rng) {
  const StateBasis cb(N, D, dims, true);
  const int n = cb.size();
  // Isotropic in the derivative indices (Gram of delta x ... x delta) times a
  // random positive definite matrix per field. A dense random G admits almost no
  // couplings between fields.
  RMat G = RMat::Zero(n, n);
  const RVec mult = cb.multiplicities();
  for (int mu = 0; mu < N; ++mu) {
    const RMat q = random_real(dims[mu], dims[mu], rng);
    const RMat h = q * q.transpose() + 0.5 * RMat::Identity(dims[mu], dims[mu]);
    for (std::size_t t = 0; t < cb.tuples(mu).size(); ++t) {
      const int r = cb.index(mu, static_cast<long>(t), 0);
      G.block(r, r, dims[mu], dims[mu]) = mult(r) * h;
    }
  }
  const Mat Gc = G.cast<cplx>();

  // One unknown per (mu, nu, canonical tuple, a, b); the tensor entry is spread
  // over all orderings so that A stays symmetric in its derivative indices.
  struct Unknown {
    int mu, nu, a, b;
    Index tuple;
  };
  std::vector<Unknown> unknowns;
  for (int mu = 0; mu < N; ++mu)
    for (int nu = 0; nu <= std::min(mu + 1, N - 1); ++nu)
      for (const Index& t : sym_index_basis(D, FTNSSystem::A_rank(mu, nu)))
        for (int a = 0; a < dims[mu]; ++a)
          for (int b = 0; b < dims[nu]; ++b) unknowns.push_back({mu, nu, a, b, t});

  auto system_of = [&](const RVec& x) {
    FTNSSystem s = FTNSSystem::zero(N, D, dims, "reverse engineered");
    for (std::size_t u = 0; u < unknowns.size(); ++u) {
      if (x(static_cast<long>(u)) == 0.0) continue;
      const Unknown& k = unknowns[u];
      MultiIndexTensor& A = s.A_ref(k.mu, k.nu);
      const int r = A.rank();
      for (long f = 0; f < A.size(); ++f) {
        const Index idx = unflatten(f, D, r);
        if (canonical(idx) == k.tuple) A.flat(f)(k.a, k.b) += x(static_cast<long>(u));
      }
    }
    return s;
  };

  const long nu_count = static_cast<long>(unknowns.size());
  RMat L;
  for (long u = 0; u < nu_count; ++u) {
    RVec e = RVec::Zero(nu_count);
    e(u) = 1.0;
    const Vec d = candidate_defect(principal_matrix(system_of(e)), Gc);
    if (u == 0) L = RMat::Zero(2 * d.size(), nu_count);
    L.col(u).head(d.size()) = d.real();
    L.col(u).tail(d.size()) = d.imag();
  }
  const RMat Z = nullspace(L, 1e-10);
  RVec coeff(Z.cols());
  for (long k = 0; k < coeff.size(); ++k) coeff(k) = gaussian(rng);
  RVec x = Z * coeff;
  if (x.norm() > 0.0) x *= std::sqrt(static_cast<double>(n)) / x.norm();

  ReverseEngineered out;
  out.sys = system_of(x);
  for (int mu = 0; mu < N; ++mu)
    for (int nu = 0; nu <= mu; ++nu)
      for (int rho = 1; rho <= mu - nu + 1; ++rho) {
        MultiIndexTensor& b = out.sys.B_ref(mu, rho, nu);
        for (long f = 0; f < b.size(); ++f) b.flat(f) = random_real(b.rows(), b.cols(), rng).cast<cplx>();
      }
  out.G = Gc;
  out.nullity = static_cast<int>(Z.cols());
  return out;
}

}  // namespace ftns
