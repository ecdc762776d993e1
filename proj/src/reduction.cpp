#include "ftns/reduction.hpp"

#include "ftns/polynomial.hpp"
#include "ftns/system_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ftns {

namespace {

void add_block(MultiIndexTensor& t, const Index& idx, int r0, int c0, const Mat& m) {
  t.at(idx).block(r0, c0, m.rows(), m.cols()) += m;
}

Index append(Index idx, int j) {
  idx.push_back(j);
  return idx;
}

std::vector<Index> all_tuples(int D, int k) {
  std::vector<Index> out;
  for (long f = 0; f < ipow(D, k); ++f) out.push_back(unflatten(f, D, k));
  return out;
}

void check_shape(std::vector<Violation>& out, const std::string& name, const MultiIndexTensor& t,
                 int D, int rank, int rows, int cols) {
  if (t.dim() != D || t.rank() != rank || t.rows() != rows || t.cols() != cols)
    out.push_back({name, "expected rank " + std::to_string(rank) + " with block " +
                             std::to_string(rows) + "x" + std::to_string(cols) + ", got rank " +
                             std::to_string(t.rank()) + " with block " + std::to_string(t.rows()) +
                             "x" + std::to_string(t.cols())});
}

void check_antisym(std::vector<Violation>& out, const std::string& name, const MultiIndexTensor& t,
                   int a, int b, double tol) {
  if (t.rank() <= std::max(a, b)) return;
  const double defect = (t - alternate_part(t, {a, b})).max_abs();
  if (defect > tol * (1.0 + t.max_abs()))
    out.push_back({name, "not antisymmetric in its last two indices"});
}

}  // namespace

IterativeReductionParams IterativeReductionParams::zero(const FTNSSystem& parent) {
  const int D = parent.D, n0 = parent.dims.at(0);
  IterativeReductionParams p;
  p.D0 = MultiIndexTensor(D, 1, n0, n0);
  p.D = MultiIndexTensor(D, 2, n0, n0);
  p.Dbar0 = MultiIndexTensor(D, 2, n0, n0);
  p.Dbar = MultiIndexTensor(D, 3, n0, n0);
  p.Dmu.resize(parent.N);
  p.Dbarmu.resize(parent.N);
  for (int mu = 1; mu < parent.N; ++mu) {
    p.Dmu[mu] = MultiIndexTensor(D, mu, parent.dims[mu], n0);
    p.Dbarmu[mu] = MultiIndexTensor(D, mu + 1, parent.dims[mu], n0);
  }
  return p;
}

std::vector<Violation> IterativeReductionParams::check(const FTNSSystem& parent,
                                                       double antisym_tol) const {
  std::vector<Violation> out;
  const int D = parent.D, n0 = parent.dims.at(0);
  check_shape(out, "D0", D0, D, 1, n0, n0);
  check_shape(out, "D", this->D, D, 2, n0, n0);
  check_shape(out, "Dbar0", Dbar0, D, 2, n0, n0);
  check_shape(out, "Dbar", Dbar, D, 3, n0, n0);
  if (static_cast<int>(Dmu.size()) != parent.N || static_cast<int>(Dbarmu.size()) != parent.N) {
    out.push_back({"Dmu", "expected one tensor per field mu = 1..N-1"});
    return out;
  }
  for (int mu = 1; mu < parent.N; ++mu) {
    check_shape(out, "Dmu[" + std::to_string(mu) + "]", Dmu[mu], D, mu, parent.dims[mu], n0);
    check_shape(out, "Dbarmu[" + std::to_string(mu) + "]", Dbarmu[mu], D, mu + 1, parent.dims[mu],
                n0);
  }
  if (!out.empty()) return out;
  check_antisym(out, "Dbar0", Dbar0, 0, 1, antisym_tol);
  check_antisym(out, "Dbar", Dbar, 1, 2, antisym_tol);
  for (int mu = 1; mu < parent.N; ++mu)
    check_antisym(out, "Dbarmu[" + std::to_string(mu) + "]", Dbarmu[mu], mu - 1, mu, antisym_tol);
  return out;
}

std::string serialize_params(const IterativeReductionParams& p) {
  using nlohmann::json;
  json j;
  j["D0"] = detail::tensor_to_json(p.D0);
  j["D"] = detail::tensor_to_json(p.D);
  j["Dbar0"] = detail::tensor_to_json(p.Dbar0);
  j["Dbar"] = detail::tensor_to_json(p.Dbar);
  json dm = json::object(), dbm = json::object();
  for (std::size_t mu = 1; mu < p.Dmu.size(); ++mu) {
    dm[std::to_string(mu)] = detail::tensor_to_json(p.Dmu[mu]);
    dbm[std::to_string(mu)] = detail::tensor_to_json(p.Dbarmu[mu]);
  }
  j["Dmu"] = dm;
  j["Dbarmu"] = dbm;
  return j.dump(1) + "\n";
}

IterativeReductionParams parse_params(const std::string& text, const FTNSSystem& parent) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("syntax error in parameter file: ") + e.what(), 0, 0);
  }
  if (!j.is_object()) throw ParseError("parameter file must be an object", 0, 0);
  IterativeReductionParams p = IterativeReductionParams::zero(parent);
  auto read = [&](const json& obj, MultiIndexTensor& t) {
    MultiIndexTensor tmp;
    if (detail::tensor_from_json(obj, parent.D, tmp)) t = tmp;
  };
  if (j.contains("D0")) read(j["D0"], p.D0);
  if (j.contains("D")) read(j["D"], p.D);
  if (j.contains("Dbar0")) read(j["Dbar0"], p.Dbar0);
  if (j.contains("Dbar")) read(j["Dbar"], p.Dbar);
  for (const char* key : {"Dmu", "Dbarmu"}) {
    if (!j.contains(key)) continue;
    auto& vec = std::string(key) == "Dmu" ? p.Dmu : p.Dbarmu;
    for (auto it = j[key].begin(); it != j[key].end(); ++it) {
      const int mu = std::stoi(it.key());
      if (mu < 1 || mu >= parent.N)
        throw ParseError(std::string(key) + "[" + it.key() + "] outside 1..N-1", 0, 0);
      read(it.value(), vec[mu]);
    }
  }
  return p;
}

ReducedSystem reduce_once(const FTNSSystem& sys, const IterativeReductionParams& params) {
  require_valid(sys);
  if (sys.N < 2) throw TensorError("reduction needs N >= 2");
  const auto viol = params.check(sys);
  if (!viol.empty()) {
    std::string msg = "invalid reduction parameters:";
    for (const auto& v : viol) msg += " " + v.where + ": " + v.message + ";";
    throw TensorError(msg);
  }
  const int N = sys.N, D = sys.D, n0 = sys.dims[0], n1 = sys.dims[1];
  const int V0 = 0, DD = n0, V1 = n0 + D * n0;
  auto dcol = [&](int j) { return DD + j * n0; };

  std::vector<int> dims{n0 + D * n0 + n1};
  for (int mu = 2; mu < N; ++mu) dims.push_back(sys.dims[mu]);
  FTNSSystem out = FTNSSystem::zero(N - 1, D, dims, sys.label.empty() ? "reduced" : sys.label + " reduced");

  const MultiIndexTensor* A00 = sys.A_find(0, 0);
  const MultiIndexTensor* A01 = sys.A_find(0, 1);
  const MultiIndexTensor* B010 = sys.B_find(0, 1, 0);

  // Row block v0 and d_i of the merged block.
  {
    MultiIndexTensor& P = out.A_ref(0, 0);
    MultiIndexTensor& L = out.B_ref(0, 1, 0);
    for (int k = 0; k < D; ++k) {
      if (A00) add_block(P, {k}, V0, V0, A00->at({k}));
      add_block(P, {k}, V0, V0, params.D0.at({k}));
      for (int j = 0; j < D; ++j) add_block(P, {k}, V0, dcol(j), params.Dbar0.at({k, j}));
      for (int i = 0; i < D; ++i) {
        if (B010 && i == k) add_block(P, {k}, dcol(i), V0, B010->at({}));
        add_block(P, {k}, dcol(i), V0, params.D.at({i, k}));
        for (int j = 0; j < D; ++j) {
          if (A00 && i == k) add_block(P, {k}, dcol(i), dcol(j), A00->at({j}));
          add_block(P, {k}, dcol(i), dcol(j), params.Dbar.at({i, k, j}));
        }
        if (A01 && i == k) add_block(P, {k}, dcol(i), V1, A01->at({}));
      }
    }
    if (B010) add_block(L, {}, V0, V0, B010->at({}));
    if (A01) add_block(L, {}, V0, V1, A01->at({}));
    for (int k = 0; k < D; ++k) {
      add_block(L, {}, V0, dcol(k), -params.D0.at({k}));
      for (int i = 0; i < D; ++i) add_block(L, {}, dcol(i), dcol(k), -params.D.at({i, k}));
    }
  }

  // Row block v^mu, mu >= 1. For mu = 1 it is the tail of the merged block,
  // otherwise it is block mu - 1 of the reduced system.
  for (int mu = 1; mu < N; ++mu) {
    const int row_block = mu == 1 ? 0 : mu - 1;
    const int r0 = mu == 1 ? V1 : 0;
    const MultiIndexTensor* Bm10 = sys.B_find(mu, 1, 0);
    const MultiIndexTensor* Am0 = sys.A_find(mu, 0);
    const MultiIndexTensor* Am1 = sys.A_find(mu, 1);
    MultiIndexTensor& P = out.A_ref(row_block, 0);
    for (const Index& k : all_tuples(D, mu)) {
      if (Bm10) add_block(P, k, r0, V0, Bm10->at(k));
      add_block(P, k, r0, V0, params.Dmu[mu].at(k));
      for (int j = 0; j < D; ++j) {
        if (Am0) add_block(P, k, r0, dcol(j), Am0->at(append(k, j)));
        add_block(P, k, r0, dcol(j), params.Dbarmu[mu].at(append(k, j)));
      }
      if (Am1) add_block(P, k, r0, V1, Am1->at(k));
    }
    // Couplings to the unreduced blocks keep their coefficients.
    for (int nu = 2; nu <= std::min(mu + 1, N - 1); ++nu)
      if (const MultiIndexTensor* A = sys.A_find(mu, nu)) {
        MultiIndexTensor& T = out.A_ref(row_block, nu - 1);
        for (long f = 0; f < A->size(); ++f) T.flat(f).block(r0, 0, A->rows(), A->cols()) += A->flat(f);
      }
    // -D^mu d^{mu-1} d_k from the c_k addition.
    {
      MultiIndexTensor& L = out.B_ref(row_block, 1, 0);
      for (const Index& k : all_tuples(D, mu - 1))
        for (int j = 0; j < D; ++j) add_block(L, k, r0, dcol(j), -params.Dmu[mu].at(append(k, j)));
    }
    for (const auto& [key, B] : sys.B) {
      const auto [bm, rho, nu] = key;
      if (bm != mu) continue;
      if (nu == 0) {
        if (rho == 1) continue;  // principal, handled above
        MultiIndexTensor& L = out.B_ref(row_block, rho - 1, 0);
        for (long f = 0; f < B.size(); ++f) L.flat(f).block(r0, V0, B.rows(), B.cols()) += B.flat(f);
      } else if (nu == 1) {
        MultiIndexTensor& L = out.B_ref(row_block, rho, 0);
        for (long f = 0; f < B.size(); ++f) L.flat(f).block(r0, V1, B.rows(), B.cols()) += B.flat(f);
      } else {
        MultiIndexTensor& L = out.B_ref(row_block, rho, nu - 1);
        for (long f = 0; f < B.size(); ++f) L.flat(f).block(r0, 0, B.rows(), B.cols()) += B.flat(f);
      }
    }
  }

  // Field metadata.
  const auto pf = sys.field_list();
  std::string base;
  for (const auto& f : pf)
    if (f.block == 0) base += (base.empty() ? "" : ",") + f.name;
  for (const auto& f : pf) {
    if (f.block == 0) out.fields.push_back({f.name, 0, f.offset, f.size});
  }
  out.fields.push_back({"d(" + base + ")", 0, DD, D * n0});
  for (const auto& f : pf) {
    if (f.block == 1) out.fields.push_back({f.name, 0, V1 + f.offset, f.size});
    else if (f.block >= 2) out.fields.push_back({f.name, f.block - 1, f.offset, f.size});
  }

  ReducedSystem red;
  red.sys = std::move(out);
  red.params = params;
  red.parent = sys;
  red.constraints = {"c_i := partial_i " + base + " - d_i",
                     "c_ij := partial_i d_j - partial_(i d_j)",
                     "c_{i1..is} := partial_{i1..i(s-1)} d_is - partial_(i1..i(s-1) d_is) (s > 2, redundant)"};
  return red;
}

IterativeReductionParams partial_choice(const FTNSSystem& sys) {
  require_valid(sys);
  if (sys.N < 2) throw TensorError("partial choice needs N >= 2");
  IterativeReductionParams p = IterativeReductionParams::zero(sys);
  if (const auto* A00 = sys.A_find(0, 0)) p.D0 = *A00 * cplx(-1.0);
  if (const auto* B = sys.B_find(0, 1, 0))
    for (int i = 0; i < sys.D; ++i) p.D.at({i, i}) = -B->at({});
  for (int mu = 1; mu < sys.N; ++mu)
    if (const auto* B = sys.B_find(mu, 1, 0)) p.Dmu[mu] = *B * cplx(-1.0);
  return p;
}

MultiIndexTensor epsilon_choice(double lambda, int n0) {
  const MultiIndexTensor eps = levi_civita(3);
  MultiIndexTensor out(3, 3, n0, n0);
  for (long f = 0; f < eps.size(); ++f)
    out.flat(f) = cplx(0.0, lambda) * eps.flat(f)(0, 0) * Mat::Identity(n0, n0);
  return out;
}

double choose_lambda(const FTNSSystem& sys, const DirectionSample& sample) {
  const PrincipalObjects po = principal_matrix(sys);
  double m = 0.0;
  for (const auto& s : sample.directions) m = std::max(m, spectral_norm(po.symbol(s)));
  return 1.0 + m;
}

RMat transverse_frame(const RVec& s) {
  const int D = static_cast<int>(s.size());
  std::vector<int> axes(D);
  std::iota(axes.begin(), axes.end(), 0);
  std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return std::abs(s(a)) < std::abs(s(b)); });
  std::vector<RVec> basis{s};
  RMat frame(D, D - 1);
  int found = 0;
  for (int ax : axes) {
    if (found == D - 1) break;
    RVec v = RVec::Unit(D, ax);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    if (v.norm() < 1e-8) continue;
    v.normalize();
    basis.push_back(v);
    frame.col(found++) = v;
  }
  return frame;
}

Decomposition21 decompose_21(const ReducedSystem& red, const RVec& s) {
  require_unit(s);
  const int D = red.parent.D, n0 = red.n0();
  const Mat P = principal_symbol(red.sys, s);
  const int n = static_cast<int>(P.rows());
  Decomposition21 dec;
  dec.s = s;
  dec.n0 = n0;
  dec.frame = transverse_frame(s);
  dec.q = RMat::Identity(D, D) - s * s.transpose();
  Mat R = Mat::Zero(n, n);
  for (int a = 0; a < n0; ++a) R(a, a) = 1.0;
  for (int A = 0; A < D - 1; ++A)
    for (int i = 0; i < D; ++i)
      for (int a = 0; a < n0; ++a) R(n0 + i * n0 + a, n0 + A * n0 + a) = dec.frame(i, A);
  for (int i = 0; i < D; ++i)
    for (int a = 0; a < n0; ++a) R(n0 + i * n0 + a, n0 + (D - 1) * n0 + a) = s(i);
  for (int k = n0 + D * n0; k < n; ++k) R(k, k) = 1.0;
  dec.rotation = R;
  dec.rotated = R.adjoint() * P * R;
  const int nx = (D - 1) * n0, x0 = n0, p0 = n0 + nx, np = n - p0;
  dec.X = dec.rotated.block(x0, x0, nx, nx);
  dec.Y = dec.rotated.block(p0, x0, np, nx);
  dec.PN = dec.rotated.block(p0, p0, np, np);
  double defect = 0.0;
  if (n0 > 0) {
    defect = std::max(defect, dec.rotated.topRows(n0).cwiseAbs().maxCoeff());
    defect = std::max(defect, dec.rotated.leftCols(n0).cwiseAbs().maxCoeff());
  }
  if (nx > 0 && np > 0) defect = std::max(defect, dec.rotated.block(x0, p0, nx, np).cwiseAbs().maxCoeff());
  dec.triangular_defect = defect;
  return dec;
}

LiftResult lift_diagonalizer(const Mat& T_N, const Vec& lambda_N, const Decomposition21& dec,
                             double resonance_cond) {
  const int n0 = dec.n0;
  const int nx = static_cast<int>(dec.X.rows()), np = static_cast<int>(dec.PN.rows());
  const int n = n0 + nx + np;
  if (T_N.rows() != np || lambda_N.size() != np) throw TensorError("T_N does not match P_N");
  const Eigenstructure ex = eigenstructure(dec.X);
  if (!ex.ok || ex.defective) throw TensorError("X block is not diagonalizable");
  LiftResult res;
  Mat Tr = Mat::Zero(n, n);
  Tr.topLeftCorner(n0, n0) = Mat::Identity(n0, n0);
  Tr.block(n0, n0, nx, nx) = ex.T;
  Tr.bottomRightCorner(np, np) = T_N;
  const Mat IN = Mat::Identity(np, np);
  // X usually has few distinct eigenvalues; one factorization per value.
  std::vector<std::pair<cplx, Eigen::PartialPivLU<Mat>>> lus;
  const double same = 1e-14 * (1.0 + ex.eigenvalues.cwiseAbs().maxCoeff());
  for (int b = 0; b < nx && np > 0; ++b) {
    const cplx mu = ex.eigenvalues(b);
    auto it = std::find_if(lus.begin(), lus.end(), [&](const auto& e) { return std::abs(e.first - mu) <= same; });
    if (it == lus.end()) {
      const Mat M = mu * IN - dec.PN;
      if (!(condition_number(M) <= resonance_cond)) res.resonant = true;
      lus.emplace_back(mu, M.partialPivLu());
      it = lus.end() - 1;
    }
    Tr.block(n0 + nx, n0 + b, np, 1) = it->second.solve(dec.Y * ex.T.col(b));
  }
  res.T = dec.rotation * Tr;
  res.T_inv = res.T.partialPivLu().inverse();
  res.lambda = Vec::Zero(n);
  res.lambda.segment(n0, nx) = ex.eigenvalues;
  res.lambda.tail(np) = lambda_N;
  const Mat P = dec.rotation * dec.rotated * dec.rotation.adjoint();
  const Mat L = res.T_inv * P * res.T;
  Mat diff = L;
  diff.diagonal() -= res.lambda;
  res.residual = diff.norm() / std::max(1.0, spectral_norm(P));
  res.norm_T = spectral_norm(res.T);
  res.norm_T_inv = spectral_norm(res.T_inv);
  return res;
}

bool lambda_resonant(const FTNSSystem& sys, const DirectionSample& sample, double lambda,
                     double cond_max) {
  const PrincipalObjects po = principal_matrix(sys);
  for (const auto& s : sample.directions) {
    const Mat P = po.symbol(s);
    const Mat I = Mat::Identity(P.rows(), P.cols());
    for (double sign : {1.0, -1.0}) {
      if (P.size() && !(condition_number(sign * lambda * I - P) <= cond_max)) return true;
    }
  }
  return false;
}

std::vector<ReductionLevel> iterate_to_first_order(const FTNSSystem& sys,
                                                   const ReductionStrategy& strategy,
                                                   const DirectionSample& sample,
                                                   int target_order) {
  require_valid(sys);
  if (target_order < 1) throw TensorError("target order must be at least 1");
  std::vector<ReductionLevel> levels;
  FTNSSystem cur = sys;
  int level = 0;
  while (cur.N > target_order) {
    ReductionLevel lv;
    IterativeReductionParams p;
    switch (strategy.kind) {
      case ReductionStrategy::zero:
        p = IterativeReductionParams::zero(cur);
        break;
      case ReductionStrategy::explicit_params:
        if (level >= static_cast<int>(strategy.params.size()))
          throw TensorError("no reduction parameters supplied for level " + std::to_string(level + 1));
        p = strategy.params[level];
        break;
      case ReductionStrategy::partial_epsilon: {
        if (cur.D != 3) throw TensorError("the epsilon choice needs D = 3");
        p = partial_choice(cur);
        double lambda = strategy.lambda_override > 0.0 ? strategy.lambda_override : choose_lambda(cur, sample);
        while (lambda_resonant(cur, sample, lambda) && lv.retries < 5) {
          lambda = 2.0 * lambda + 1.0;
          ++lv.retries;
        }
        lv.lambda = lambda;
        p.Dbar = epsilon_choice(lambda, cur.dims[0]);
        break;
      }
    }
    lv.red = reduce_once(cur, p);
    cur = lv.red.sys;
    levels.push_back(std::move(lv));
    ++level;
  }
  return levels;
}

namespace {

// c_i rows (i, a) and c_ij rows (i, j, a) for all ordered pairs.
void constraint_fields(const ReducedSystem& red, const MonomialTable& tab, const PolyField& F,
                       PolyField& ci, PolyField& cij) {
  const int D = red.parent.D, n0 = red.n0();
  ci = PolyField::Zero(D * n0, F.cols());
  cij = PolyField::Zero(D * D * n0, F.cols());
  const PolyField v0 = F.topRows(n0);
  for (int i = 0; i < D; ++i)
    ci.middleRows(i * n0, n0) = derivative(tab, v0, i) - F.middleRows(red.d_offset() + i * n0, n0);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      cij.middleRows((i * D + j) * n0, n0) =
          0.5 * (derivative(tab, F.middleRows(red.d_offset() + j * n0, n0), i) -
                 derivative(tab, F.middleRows(red.d_offset() + i * n0, n0), j));
}

}  // namespace

ClosureReport constraint_evolution(const ReducedSystem& red, unsigned long long seed) {
  const int D = red.parent.D, n0 = red.n0();
  const MonomialTable tab(D, red.parent.N + 1);
  const int pairs = D * (D - 1) / 2;
  const int unknowns = (D * n0 + pairs * n0) * (1 + D);
  const int samples = (3 * unknowns) / tab.size() + 2;
  Rng rng(seed);
  const IterativeReductionParams& p = red.params;
  const MultiIndexTensor* A00 = red.parent.A_find(0, 0);
  std::vector<PolyField> features, targets;
  double num = 0.0, den = 0.0;
  for (int t = 0; t < samples; ++t) {
    const PolyField F = random_poly_field(red.sys.total_dim(), tab, rng);
    const PolyField U = apply_system(red.sys, tab, F);
    PolyField ci, cij, dci, dcij;
    constraint_fields(red, tab, F, ci, cij);
    constraint_fields(red, tab, U, dci, dcij);
    auto c_k = [&](int k) { return ci.middleRows(k * n0, n0); };
    auto c_kj = [&](int k, int j) { return cij.middleRows((k * D + j) * n0, n0); };
    // Closed form of the constraint evolution.
    PolyField ei = PolyField::Zero(ci.rows(), ci.cols());
    for (int i = 0; i < D; ++i) {
      PolyField acc = PolyField::Zero(n0, ci.cols());
      for (int k = 0; k < D; ++k) {
        Mat a = p.D0.at({k});
        if (A00) a += A00->at({k});
        acc += a * derivative(tab, c_k(k), i) - p.D.at({i, k}) * c_k(k);
        for (int j = 0; j < D; ++j)
          acc += p.Dbar0.at({k, j}) * derivative(tab, c_kj(k, j), i) - p.Dbar.at({i, k, j}) * c_kj(k, j);
      }
      ei.middleRows(i * n0, n0) = acc;
    }
    PolyField eij = PolyField::Zero(cij.rows(), cij.cols());
    auto term = [&](int j) {
      PolyField acc = PolyField::Zero(n0, ci.cols());
      for (int k = 0; k < D; ++k) {
        acc += p.D.at({j, k}) * c_k(k);
        for (int l = 0; l < D; ++l) acc += p.Dbar.at({j, k, l}) * c_kj(k, l);
      }
      return acc;
    };
    std::vector<PolyField> terms;
    for (int j = 0; j < D; ++j) terms.push_back(term(j));
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        eij.middleRows((i * D + j) * n0, n0) =
            0.5 * (derivative(tab, terms[j], i) - derivative(tab, terms[i], j));
    num += (dci - ei).squaredNorm() + (dcij - eij).squaredNorm();
    den += dci.squaredNorm() + dcij.squaredNorm();

    PolyField feat(D * n0 + pairs * n0, tab.size());
    feat.topRows(D * n0) = ci;
    int r = D * n0;
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j, r += n0) feat.middleRows(r, n0) = c_kj(i, j);
    PolyField targ(dci.rows() + pairs * n0, tab.size());
    targ.topRows(dci.rows()) = dci;
    r = static_cast<int>(dci.rows());
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j, r += n0)
        targ.middleRows(r, n0) = dcij.middleRows((i * D + j) * n0, n0);
    features.push_back(feat);
    targets.push_back(targ);
  }
  ClosureReport rep;
  rep.samples = samples;
  rep.explicit_residual = std::sqrt(num) / std::max(1.0, std::sqrt(den));
  rep.span_residual = span_residual(tab, features, targets, 1);
  return rep;
}

double redundancy_residual(int D, int sigma, unsigned long long seed) {
  if (sigma < 2) throw TensorError("redundancy identity needs sigma >= 2");
  const MonomialTable tab(D, sigma + 2);
  Rng rng(seed);
  const PolyField d = random_poly_field(D, tab, rng);
  auto dd = [&](const Index& idx, int comp) { return derivative(tab, PolyField(d.row(comp)), idx); };
  auto c2 = [&](int a, int b) {
    return PolyField(0.5 * (derivative(tab, PolyField(d.row(b)), a) - derivative(tab, PolyField(d.row(a)), b)));
  };
  auto without = [](const Index& idx, std::vector<int> drop) {
    std::sort(drop.rbegin(), drop.rend());
    Index out = idx;
    for (int k : drop) out.erase(out.begin() + k);
    return out;
  };
  double worst = 0.0;
  for (const Index& I : all_tuples(D, sigma)) {
    // Definition: derivative of d_{i_s} minus its full symmetrization.
    PolyField c = dd(without(I, {sigma - 1}), I[sigma - 1]);
    PolyField sym = PolyField::Zero(1, tab.size());
    for (int m = 0; m < sigma; ++m) sym += dd(without(I, {m}), I[m]);
    c -= sym / static_cast<double>(sigma);
    PolyField rebuilt = PolyField::Zero(1, tab.size());
    for (int m = 0; m < sigma - 1; ++m)
      rebuilt += derivative(tab, c2(I[m], I[sigma - 1]), without(I, {m, sigma - 1}));
    rebuilt *= 2.0 / static_cast<double>(sigma);
    worst = std::max(worst, (c - rebuilt).norm() / std::max(1.0, c.norm()));
  }
  return worst;
}

}  // namespace ftns
