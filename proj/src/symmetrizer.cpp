#include "ftns/symmetrizer.hpp"

#include "ftns/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace ftns {

namespace {

Index concat(const Index& a, const Index& b) {
  Index out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Index drop(const Index& idx, int pos) {
  Index out = idx;
  out.erase(out.begin() + pos);
  return out;
}

Positivity classify_positivity(const Mat& G) {
  if (G.size() == 0) return Positivity::positive_definite;
  const double lo = min_hermitian_eigenvalue(G);
  const double scale = std::max(1e-300, spectral_norm(G));
  return lo > 1e-12 * scale ? Positivity::positive_definite : Positivity::indefinite;
}

}  // namespace

std::string to_string(Positivity p) {
  switch (p) {
    case Positivity::positive_definite: return "positive_definite";
    case Positivity::indefinite: return "indefinite";
    case Positivity::unknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(CandidateSolution::Status s) {
  switch (s) {
    case CandidateSolution::symmetric_hyperbolic: return "symmetric_hyperbolic";
    case CandidateSolution::candidate_only: return "candidate_only";
    case CandidateSolution::infeasible: return "infeasible";
  }
  return "infeasible";
}

SymCandidate SymCandidate::from_gram(int N, const Mat& G) {
  if (G.rows() != G.cols()) throw TensorError("symmetrizer must be square");
  if (!is_hermitian(G, 1e-12 * std::max(1.0, G.norm())))
    throw TensorError("symmetrizer is not Hermitian");
  SymCandidate c;
  c.N = N;
  c.G = 0.5 * (G + G.adjoint());
  c.positivity = classify_positivity(c.G);
  return c;
}

SymCandidate SymCandidate::from_components(const StateBasis& basis, const Mat& Hc) {
  if (Hc.rows() != basis.size() || Hc.cols() != basis.size())
    throw TensorError("symmetrizer does not match the state basis");
  const Eigen::VectorXcd m = basis.multiplicities().cast<cplx>();
  return from_gram(basis.N(), m.asDiagonal() * Hc * m.asDiagonal());
}

Mat SymCandidate::components(const StateBasis& basis) const {
  if (G.rows() != basis.size()) throw TensorError("symmetrizer does not match the state basis");
  const Eigen::VectorXcd inv = basis.multiplicities().cwiseInverse().cast<cplx>();
  return inv.asDiagonal() * G * inv.asDiagonal();
}

double SymCandidate::min_eigenvalue() const { return G.size() == 0 ? 0.0 : min_hermitian_eigenvalue(G); }

Vec candidate_defect(const PrincipalObjects& po, const Mat& G) {
  const StateBasis& cb = po.basis;
  if (G.rows() != cb.size() || G.cols() != cb.size())
    throw TensorError("symmetrizer does not match the state basis");
  const int D = cb.D(), B = cb.blocks();
  std::vector<Mat> X;
  for (const Mat& Ap : po.Ap) X.push_back(G * Ap);
  // coef[(mu, nu)][m] = block coefficient of s^m.
  std::map<std::pair<int, int>, std::vector<Mat>> coef;
  for (int mu = 0; mu < B; ++mu)
    for (int nu = 0; nu < B; ++nu) {
      const int L = cb.tuple_length(mu) + cb.tuple_length(nu) + 1;
      std::vector<Mat> c(static_cast<std::size_t>(binomial(D + L - 1, L)),
                         Mat::Zero(cb.dim(mu), cb.dim(nu)));
      for (std::size_t i = 0; i < cb.tuples(mu).size(); ++i)
        for (std::size_t j = 0; j < cb.tuples(nu).size(); ++j)
          for (int p = 0; p < D; ++p) {
            const long m = sym_index_position(concat(concat(cb.tuples(mu)[i], {p}), cb.tuples(nu)[j]), D);
            c[m] += X[p].block(cb.index(mu, static_cast<long>(i), 0), cb.index(nu, static_cast<long>(j), 0),
                               cb.dim(mu), cb.dim(nu));
          }
      coef[{mu, nu}] = std::move(c);
    }
  std::vector<cplx> out;
  for (int mu = 0; mu < B; ++mu)
    for (int nu = mu; nu < B; ++nu) {
      const auto& a = coef[{mu, nu}];
      const auto& b = coef[{nu, mu}];
      for (std::size_t m = 0; m < a.size(); ++m) {
        const Mat d = a[m] - b[m].adjoint();
        for (long k = 0; k < d.size(); ++k) out.push_back(d.data()[k]);
      }
    }
  return Eigen::Map<Vec>(out.data(), static_cast<long>(out.size()));
}

CandidateCheck is_candidate(const PrincipalObjects& po, const Mat& G, double tol) {
  if (!is_hermitian(G, 1e-12 * std::max(1.0, G.norm()))) throw TensorError("symmetrizer is not Hermitian");
  CandidateCheck c;
  c.residual = candidate_defect(po, G).norm();
  double a = 0.0;
  for (const Mat& Ap : po.Ap) a = std::max(a, spectral_norm(Ap));
  c.scale = spectral_norm(G) * a;
  c.ok = c.residual <= tol * std::max(1.0, c.scale);
  return c;
}

CandidateCheck is_candidate(const FTNSSystem& sys, const SymCandidate& H, double tol) {
  return is_candidate(principal_matrix(sys), H.G, tol);
}

Mat hermitian_from_coords(const RVec& x, int n) {
  if (x.size() != static_cast<long>(n) * n) throw TensorError("coordinate vector has the wrong length");
  Mat H = Mat::Zero(n, n);
  long k = 0;
  for (int i = 0; i < n; ++i) H(i, i) = x(k++);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const cplx z(x(k), x(k + 1));
      k += 2;
      H(i, j) = z;
      H(j, i) = std::conj(z);
    }
  return H;
}

RVec hermitian_coords(const Mat& H) {
  const int n = static_cast<int>(H.rows());
  RVec x(static_cast<long>(n) * n);
  long k = 0;
  for (int i = 0; i < n; ++i) x(k++) = H(i, i).real();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      x(k++) = H(i, j).real();
      x(k++) = H(i, j).imag();
    }
  return x;
}

namespace {

RMat real_stack(const Vec& v) {
  RMat out(2 * v.size(), 1);
  out.col(0).head(v.size()) = v.real();
  out.col(0).tail(v.size()) = v.imag();
  return out;
}

// Columns: images of the coordinate basis under a linear map on Hermitian matrices.
template <class F>
RMat assemble_hermitian_map(int n, F&& map) {
  const long dim = static_cast<long>(n) * n;
  RMat out;
  for (long k = 0; k < dim; ++k) {
    RVec e = RVec::Zero(dim);
    e(k) = 1.0;
    const RMat col = real_stack(map(hermitian_from_coords(e, n)));
    if (k == 0) out = RMat::Zero(col.rows(), dim);
    out.col(k) = col.col(0);
  }
  return out;
}

struct PDSearch {
  RVec c;
  double lambda = -1e300;
  int iterations = 0;
};

// Maximizes lambda_min(sum_k c_k B_k) over the unit ball. lambda_min is concave,
// so projected supergradient steps converge; seeds come from the caller.
PDSearch search_pd(const std::vector<Mat>& basis, const std::vector<RVec>& seeds, int max_iter) {
  const long k = static_cast<long>(basis.size());
  auto eval = [&](const RVec& c, Vec* vec) {
    Mat G = Mat::Zero(basis[0].rows(), basis[0].cols());
    for (long i = 0; i < k; ++i) G += c(i) * basis[i];
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.adjoint()));
    if (vec) *vec = es.eigenvectors().col(0);
    return es.eigenvalues()(0);
  };
  PDSearch best;
  for (const RVec& s : seeds) {
    if (s.norm() == 0.0) continue;
    const RVec c = s / s.norm();
    const double l = eval(c, nullptr);
    if (l > best.lambda) {
      best.lambda = l;
      best.c = c;
    }
  }
  if (best.c.size() == 0) return best;
  RVec c = best.c;
  for (int it = 0; it < max_iter && best.lambda <= 1e-8; ++it) {
    Vec v;
    eval(c, &v);
    RVec g(k);
    for (long i = 0; i < k; ++i) g(i) = (v.adjoint() * basis[i] * v)(0, 0).real();
    if (g.norm() == 0.0) break;
    c += (0.5 / std::sqrt(1.0 + it)) * g / g.norm();
    if (c.norm() > 1.0) c /= c.norm();
    const double l = eval(c, nullptr);
    best.iterations = it + 1;
    if (l > best.lambda) {
      best.lambda = l;
      best.c = c;
    }
  }
  return best;
}

}  // namespace

CandidateSolution solve_candidate(const FTNSSystem& sys) {
  require_valid(sys);
  const PrincipalObjects po = principal_matrix(sys);
  const int n = po.basis.size();
  const RMat L = assemble_hermitian_map(n, [&](const Mat& H) { return candidate_defect(po, H); });
  int rank = 0;
  const RMat Z = L.rows() == 0 ? RMat::Identity(L.cols(), L.cols()) : nullspace(L, 1e-10, &rank);
  CandidateSolution sol;
  sol.nullity = static_cast<int>(Z.cols());
  if (Z.cols() == 0) {
    sol.status = CandidateSolution::infeasible;
    return sol;
  }
  std::vector<Mat> basis;
  for (long k = 0; k < Z.cols(); ++k) basis.push_back(hermitian_from_coords(Z.col(k), n));
  // Seeds: the projection of H = identity (Gram M^2), then every basis element.
  const RVec m = po.basis.multiplicities();
  const Mat ident_gram = m.cwiseProduct(m).cast<cplx>().asDiagonal();
  const RVec proj = Z.transpose() * hermitian_coords(ident_gram);
  const Mat proj_gram = hermitian_from_coords(Z * proj, n);
  if (proj.norm() > 0.0 && min_hermitian_eigenvalue(proj_gram) > 1e-10 * spectral_norm(proj_gram)) {
    sol.status = CandidateSolution::symmetric_hyperbolic;
    sol.H = SymCandidate::from_gram(sys.N, proj_gram);
    sol.min_eigenvalue = sol.H.min_eigenvalue() / spectral_norm(proj_gram);
    return sol;
  }
  std::vector<RVec> seeds{proj};
  for (long k = 0; k < Z.cols(); ++k) {
    RVec e = RVec::Zero(Z.cols());
    e(k) = 1.0;
    seeds.push_back(e);
    seeds.push_back(-e);
  }
  const PDSearch best = search_pd(basis, seeds, 2000);
  sol.iterations = best.iterations;
  Mat G = hermitian_from_coords(Z * best.c, n);
  const double norm = spectral_norm(G);
  if (norm > 0.0) G /= norm;
  sol.H = SymCandidate::from_gram(sys.N, G);
  sol.min_eigenvalue = sol.H.min_eigenvalue();
  sol.status = sol.min_eigenvalue > 1e-8 ? CandidateSolution::symmetric_hyperbolic
                                         : CandidateSolution::candidate_only;
  return sol;
}

SymCandidate extract_HN_from_H1(const Mat& H1, const DirectReductionVars& vars) {
  if (H1.rows() != vars.size() || H1.cols() != vars.size())
    throw TensorError("H1 does not match the direct reduction partition");
  const int off = vars.second_offset(), n2 = vars.second_size();
  return SymCandidate::from_gram(vars.N, H1.block(off, off, n2, n2));
}

Mat build_H1(const DirectReductionVars& vars, const Mat& G) {
  const int off = vars.second_offset(), n2 = vars.second_size();
  if (G.rows() != n2 || G.cols() != n2) throw TensorError("symmetrizer does not match the second group");
  Mat H1 = Mat::Zero(vars.size(), vars.size());
  for (const auto& v : vars.vars) {
    if (v.second_group) continue;
    for (std::size_t t = 0; t < v.tuples.size(); ++t)
      for (int a = 0; a < v.n; ++a) {
        const int r = v.index(static_cast<long>(t), a);
        H1(r, r) = static_cast<double>(multiplicity(v.tuples[t]));
      }
  }
  H1.block(off, off, n2, n2) = G;
  return H1;
}

std::vector<Mat> compute_T(const PrincipalObjects& po, const Mat& G) {
  std::vector<Mat> T;
  for (const Mat& Ap : po.Ap) T.push_back(G * Ap);
  return T;
}

std::vector<Mat> compute_V(const PrincipalObjects& po, const Mat& G) {
  std::vector<Mat> V;
  for (const Mat& T : compute_T(po, G)) V.push_back(T - T.adjoint());
  return V;
}

namespace {

// Real basis of {y over (p, J) : sum over the distinct p in m of count_p(m) y[p, m - p] = 0}
// for canonical J of length S. Rows ordered p-major.
RMat dbar_structure(int D, int S) {
  const auto tails = sym_index_basis(D, S);
  const auto heads = sym_index_basis(D, S + 1);
  const long nt = static_cast<long>(tails.size());
  RMat Q = RMat::Zero(static_cast<long>(heads.size()), D * nt);
  for (std::size_t r = 0; r < heads.size(); ++r) {
    const Index& m = heads[r];
    for (std::size_t q = 0; q < m.size(); ++q)
      Q(static_cast<long>(r), m[q] * nt + sym_index_position(drop(m, static_cast<int>(q)), D)) += 1.0;
  }
  return nullspace(Q, 1e-12);
}

// Re-projects each (row, nu, b) slice of C onto the structure space.
void project_structure(std::vector<Mat>& C, const StateBasis& cb, const std::vector<RMat>& Z) {
  const int D = cb.D(), n2 = cb.size();
  for (int nu = 0; nu + 1 < cb.blocks(); ++nu) {
    const long nt = static_cast<long>(cb.tuples(nu).size());
    const RMat P = Z[nu] * Z[nu].transpose();
    for (int r = 0; r < n2; ++r)
      for (int b = 0; b < cb.dim(nu); ++b) {
        Vec y(D * nt);
        for (int p = 0; p < D; ++p)
          for (long j = 0; j < nt; ++j)
            y(p * nt + j) = C[p](r, cb.index(nu, j, b)) / static_cast<double>(multiplicity(cb.tuples(nu)[j]));
        const Vec py = P.cast<cplx>() * y;
        for (int p = 0; p < D; ++p)
          for (long j = 0; j < nt; ++j)
            C[p](r, cb.index(nu, j, b)) = py(p * nt + j) * static_cast<double>(multiplicity(cb.tuples(nu)[j]));
      }
  }
}

// Least-norm solve of K - K^dagger = -V over structured K.
bool solve_least_norm(const StateBasis& cb, const std::vector<Mat>& V, std::vector<Mat>& K,
                      std::vector<RMat>& Z, JSolution& out) {
  const int D = cb.D(), n2 = cb.size(), B = cb.blocks();
  Z.clear();
  std::vector<long> nt;
  for (int nu = 0; nu + 1 < B; ++nu) {
    Z.push_back(dbar_structure(D, cb.tuple_length(nu)));
    nt.push_back(static_cast<long>(cb.tuples(nu).size()));
  }
  // Unknown layout: row r, then nu, then b, then (re, im) per structure column.
  std::vector<long> row_off(n2 + 1, 0);
  long per_row = 0;
  std::vector<long> nu_off;
  for (int nu = 0; nu + 1 < B; ++nu) {
    nu_off.push_back(per_row);
    per_row += 2 * Z[nu].cols() * cb.dim(nu);
  }
  const long unknowns = per_row * n2;
  // Entry K^p(r, c) as a sparse real-linear form: list of (unknown, coefficient) for re and im.
  auto entry_terms = [&](int p, int r, int c, std::vector<std::pair<long, cplx>>& terms) {
    terms.clear();
    int nu = 0;
    while (nu + 1 < B && c >= cb.block_offset(nu + 1)) ++nu;
    if (nu + 1 >= B) return;  // v^{N-1} columns carry no parameters
    const int local = c - cb.block_offset(nu);
    const long j = local / cb.dim(nu);
    const int b = local % cb.dim(nu);
    const double mult = static_cast<double>(multiplicity(cb.tuples(nu)[j]));
    const long base = r * per_row + nu_off[nu] + 2 * Z[nu].cols() * b;
    for (long z = 0; z < Z[nu].cols(); ++z) {
      const double w = mult * Z[nu](p * nt[nu] + j, z);
      if (w == 0.0) continue;
      terms.push_back({base + 2 * z, cplx(w, 0.0)});
      terms.push_back({base + 2 * z + 1, cplx(0.0, w)});
    }
  };
  const long eqs = 2L * D * n2 * (n2 + 1) / 2;
  RMat A = RMat::Zero(eqs, unknowns);
  RVec rhs = RVec::Zero(eqs);
  long e = 0;
  std::vector<std::pair<long, cplx>> t1, t2;
  for (int p = 0; p < D; ++p)
    for (int r = 0; r < n2; ++r)
      for (int c = r; c < n2; ++c, e += 2) {
        entry_terms(p, r, c, t1);
        entry_terms(p, c, r, t2);
        for (const auto& [u, w] : t1) {
          A(e, u) += w.real();
          A(e + 1, u) += w.imag();
        }
        for (const auto& [u, w] : t2) {
          const cplx cw = std::conj(w);
          A(e, u) -= cw.real();
          A(e + 1, u) -= cw.imag();
        }
        rhs(e) = -V[p](r, c).real();
        rhs(e + 1) = -V[p](r, c).imag();
      }
  out.unknowns = static_cast<int>(unknowns);
  out.equations = static_cast<int>(eqs);
  if (unknowns == 0) {
    K.assign(D, Mat::Zero(n2, n2));
    out.lin_residual = rhs.norm();
    return out.lin_residual <= 1e-10 * std::max(1.0, rhs.norm());
  }
  const LeastNormSolution sol = least_norm_solve(A, rhs, 1e-12);
  out.rank = sol.rank;
  out.lin_residual = sol.residual;
  K.assign(D, Mat::Zero(n2, n2));
  for (int p = 0; p < D; ++p)
    for (int r = 0; r < n2; ++r)
      for (int c = 0; c < n2; ++c) {
        entry_terms(p, r, c, t1);
        cplx z = 0.0;
        for (const auto& [u, w] : t1) z += w * sol.x(u);
        K[p](r, c) = z;
      }
  return sol.residual <= 1e-10 * std::max(1.0, rhs.norm());
}

// Slot permutation of a full-index tensor: out[idx] = t[idx o perm].
MultiIndexTensor permute_slots(const MultiIndexTensor& t, const std::vector<int>& perm) {
  MultiIndexTensor out(t.dim(), t.rank(), t.rows(), t.cols());
  for (long f = 0; f < t.size(); ++f) {
    const Index idx = unflatten(f, t.dim(), t.rank());
    Index src(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) src[a] = idx[perm[a]];
    out.flat(f) = t.at(src);
  }
  return out;
}

// Full-index V_{mu nu}[p, i.., j..] from the compressed V^p.
MultiIndexTensor full_block(const StateBasis& cb, const std::vector<Mat>& V, int mu, int nu) {
  const int D = cb.D(), Li = cb.tuple_length(mu), Lj = cb.tuple_length(nu);
  MultiIndexTensor t(D, 1 + Li + Lj, cb.dim(mu), cb.dim(nu));
  for (long f = 0; f < t.size(); ++f) {
    const Index idx = unflatten(f, D, 1 + Li + Lj);
    const Index I(idx.begin() + 1, idx.begin() + 1 + Li), J(idx.begin() + 1 + Li, idx.end());
    const long i = sym_index_position(I, D), j = sym_index_position(J, D);
    const double w = static_cast<double>(multiplicity(canonical(I)) * multiplicity(canonical(J)));
    t.flat(f) = V[idx[0]].block(cb.index(mu, i, 0), cb.index(nu, j, 0), cb.dim(mu), cb.dim(nu)) / w;
  }
  return t;
}

// Permutation ansatz J_{mu nu} = sum_pi x_pi pi(V_{mu nu}) with complex x_pi.
bool solve_permutation_ansatz(const StateBasis& cb, const std::vector<Mat>& V, std::vector<Mat>& K,
                              JSolution& out) {
  const int D = cb.D(), B = cb.blocks(), n2 = cb.size();
  std::map<std::pair<int, int>, MultiIndexTensor> Vfull;
  for (int mu = 0; mu < B; ++mu)
    for (int nu = 0; nu < B; ++nu) Vfull[{mu, nu}] = full_block(cb, V, mu, nu);
  struct Unknown {
    int mu, nu;
    MultiIndexTensor term;
    bool imag;
  };
  std::vector<Unknown> unknowns;
  for (int mu = 0; mu < B; ++mu)
    for (int nu = 0; nu + 1 < B; ++nu) {
      const MultiIndexTensor& v = Vfull[{mu, nu}];
      PermutationTable perms(v.rank());
      for (const auto& pi : perms.elements()) {
        const MultiIndexTensor t = permute_slots(v, pi);
        unknowns.push_back({mu, nu, t, false});
        unknowns.push_back({mu, nu, t * cplx(0.0, 1.0), true});
      }
    }
  // Condition vector for a given J family (missing blocks are zero).
  auto conditions = [&](const std::map<std::pair<int, int>, MultiIndexTensor>& J, bool with_v) {
    std::vector<cplx> out;
    auto get = [&](int mu, int nu) -> const MultiIndexTensor* {
      auto it = J.find({mu, nu});
      return it == J.end() ? nullptr : &it->second;
    };
    for (int mu = 0; mu < B; ++mu)
      for (int nu = 0; nu < B; ++nu) {
        const int Li = cb.tuple_length(mu), Lj = cb.tuple_length(nu), L = 1 + Li + Lj;
        const MultiIndexTensor* j = get(mu, nu);
        const MultiIndexTensor* jt = get(nu, mu);
        const MultiIndexTensor& v = Vfull[{mu, nu}];
        for (long f = 0; f < ipow(D, L); ++f) {
          const Index idx = unflatten(f, D, L);
          // Conservation: J_mu_nu[p,I,J] - J_nu_mu[p,J,I]^dagger + V = 0.
          Index swapped{idx[0]};
          swapped.insert(swapped.end(), idx.begin() + 1 + Li, idx.end());
          swapped.insert(swapped.end(), idx.begin() + 1, idx.begin() + 1 + Li);
          Mat c = Mat::Zero(cb.dim(mu), cb.dim(nu));
          if (j) c += j->at(idx);
          if (jt) c -= jt->at(swapped).adjoint();
          if (with_v) c += v.at(idx);
          for (long k = 0; k < c.size(); ++k) out.push_back(c.data()[k]);
        }
        if (!j) continue;
        std::vector<int> head_pos, tail_pos{0};
        for (int a = 1; a <= Li; ++a) head_pos.push_back(a);
        for (int a = Li + 1; a < L; ++a) tail_pos.push_back(a);
        std::vector<int> jpos(tail_pos.begin() + 1, tail_pos.end());
        const MultiIndexTensor d1 = *j - symmetrize(*j, head_pos);
        const MultiIndexTensor d2 = *j - symmetrize(*j, jpos);
        const MultiIndexTensor d3 = symmetrize(*j, tail_pos);
        for (const auto* d : {&d1, &d2, &d3})
          for (long f = 0; f < d->size(); ++f)
            for (long k = 0; k < d->flat(f).size(); ++k) out.push_back(d->flat(f).data()[k]);
      }
    return Eigen::Map<Vec>(out.data(), static_cast<long>(out.size())).eval();
  };
  std::map<std::pair<int, int>, MultiIndexTensor> zeros;
  for (int mu = 0; mu < B; ++mu)
    for (int nu = 0; nu + 1 < B; ++nu) {
      const MultiIndexTensor& v = Vfull[{mu, nu}];
      zeros[{mu, nu}] = MultiIndexTensor(D, v.rank(), v.rows(), v.cols());
    }
  const Vec base = conditions(zeros, true);
  RMat A(2 * base.size(), static_cast<long>(unknowns.size()));
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    auto J = zeros;
    J[{unknowns[u].mu, unknowns[u].nu}] = unknowns[u].term;
    const Vec col = conditions(J, false);
    A.col(static_cast<long>(u)).head(col.size()) = col.real();
    A.col(static_cast<long>(u)).tail(col.size()) = col.imag();
  }
  RVec rhs(2 * base.size());
  rhs.head(base.size()) = -base.real();
  rhs.tail(base.size()) = -base.imag();
  const LeastNormSolution sol = least_norm_solve(A, rhs, 1e-12);
  out.unknowns = static_cast<int>(unknowns.size());
  out.equations = static_cast<int>(A.rows());
  out.rank = sol.rank;
  out.lin_residual = sol.residual;
  // Assemble J and compress: K[(mu, I), (nu, J)] = mult(I) mult(J) J_full[p, I, J].
  auto J = zeros;
  for (std::size_t u = 0; u < unknowns.size(); ++u)
    J[{unknowns[u].mu, unknowns[u].nu}] = J[{unknowns[u].mu, unknowns[u].nu}] + unknowns[u].term * sol.x(static_cast<long>(u));
  K.assign(D, Mat::Zero(n2, n2));
  for (const auto& [key, t] : J) {
    const auto [mu, nu] = key;
    for (std::size_t i = 0; i < cb.tuples(mu).size(); ++i)
      for (std::size_t j = 0; j < cb.tuples(nu).size(); ++j)
        for (int p = 0; p < D; ++p) {
          const Index idx = concat(concat({p}, cb.tuples(mu)[i]), cb.tuples(nu)[j]);
          const double w = static_cast<double>(multiplicity(cb.tuples(mu)[i]) * multiplicity(cb.tuples(nu)[j]));
          K[p].block(cb.index(mu, static_cast<long>(i), 0), cb.index(nu, static_cast<long>(j), 0), cb.dim(mu),
                     cb.dim(nu)) = w * t.at(idx);
        }
  }
  return sol.residual <= 1e-10 * std::max(1.0, rhs.norm());
}

}  // namespace

JSolution solve_J(const FTNSSystem& sys, const SymCandidate& H, JMode mode) {
  require_valid(sys);
  const PrincipalObjects po = principal_matrix(sys);
  const StateBasis& cb = po.basis;
  if (H.G.rows() != cb.size()) throw TensorError("symmetrizer does not match the state basis");
  JSolution out;
  const CandidateCheck chk = is_candidate(po, H.G);
  out.v_sym_residual = chk.residual;
  if (!chk.ok) {
    out.note = "not a candidate symmetrizer";
    return out;
  }
  const std::vector<Mat> V = compute_V(po, H.G);
  std::vector<Mat> K;
  std::vector<RMat> Z;
  bool solved = false;
  if (mode == JMode::least_norm) {
    solved = solve_least_norm(cb, V, K, Z, out);
  } else {
    solved = solve_permutation_ansatz(cb, V, K, out);
    Z.clear();
    for (int nu = 0; nu + 1 < cb.blocks(); ++nu) Z.push_back(dbar_structure(cb.D(), cb.tuple_length(nu)));
  }
  out.J = K;
  if (!solved) {
    out.note = "linear system for J has no solution (rank " + std::to_string(out.rank) + " of " +
               std::to_string(out.unknowns) + " unknowns, residual " + std::to_string(out.lin_residual) + ")";
    if (sys.N <= 4) out.note += "; unexpected for N <= 4";
    return out;
  }
  Eigen::PartialPivLU<Mat> lu(H.G);
  out.CDbar.clear();
  for (const Mat& k : K) out.CDbar.push_back(lu.solve(k));
  project_structure(out.CDbar, cb, Z);
  out.params = partial_choice_direct(sys);
  set_top_dbar(out.params, out.CDbar);
  out.ft1s = build_direct_ft1s(sys, out.params);
  out.H1 = build_H1(out.params, H.G);
  const std::vector<Mat> A1 = first_order_matrices(out.ft1s);
  const double nh = spectral_norm(out.H1);
  for (const Mat& a : A1) {
    const Mat X = out.H1 * a;
    const double na = spectral_norm(a);
    if (na == 0.0) continue;
    out.herm_residual = std::max(out.herm_residual, spectral_norm(Mat(X - X.adjoint())) / (nh * na));
  }
  out.ok = out.herm_residual <= 1e-10;
  if (sys.N > 4 && out.ok)
    out.note = "symmetric hyperbolic first order reduction constructed (beyond the verified range N <= 4)";
  if (!out.ok) out.note = "reconstructed H1 does not symmetrize the reduction";
  return out;
}

double energy_density(const Vec& u, const SymCandidate& H) {
  if (u.size() != H.G.rows()) throw TensorError("state dimension does not match the symmetrizer");
  return (u.adjoint() * H.G * u)(0, 0).real();
}

std::vector<Mat> first_order_matrices(const FTNSSystem& ft1s) {
  if (ft1s.N != 1 || ft1s.dims.size() != 1) throw TensorError("expected a first order single-block system");
  const int n = ft1s.dims[0];
  std::vector<Mat> out(ft1s.D, Mat::Zero(n, n));
  if (const MultiIndexTensor* A = ft1s.A_find(0, 0))
    for (int p = 0; p < ft1s.D; ++p) out[p] = A->at({p});
  return out;
}

RMat first_order_candidate_space(const std::vector<Mat>& Ap) {
  if (Ap.empty()) throw TensorError("no principal matrices");
  const int n = static_cast<int>(Ap[0].rows());
  const RMat L = assemble_hermitian_map(n, [&](const Mat& H) {
    Vec out(static_cast<long>(Ap.size()) * n * n);
    for (std::size_t p = 0; p < Ap.size(); ++p) {
      const Mat X = H * Ap[p];
      const Mat d = X - X.adjoint();
      out.segment(static_cast<long>(p) * n * n, n * n) = Eigen::Map<const Vec>(d.data(), n * n);
    }
    return out;
  });
  return nullspace(L, 1e-10);
}

Mat project_first_order_candidate(const std::vector<Mat>& Ap, const Mat& H) {
  const RMat Z = first_order_candidate_space(Ap);
  return hermitian_from_coords(Z * (Z.transpose() * hermitian_coords(H)), static_cast<int>(H.rows()));
}

}  // namespace ftns
