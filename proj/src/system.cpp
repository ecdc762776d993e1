#include "ftns/system.hpp"

#include <sstream>

namespace ftns {

FTNSSystem FTNSSystem::zero(int N, int D, std::vector<int> dims, std::string label) {
  FTNSSystem s;
  s.N = N;
  s.D = D;
  s.dims = std::move(dims);
  s.label = std::move(label);
  return s;
}

MultiIndexTensor& FTNSSystem::A_ref(int mu, int nu) {
  auto it = A.find({mu, nu});
  if (it != A.end()) return it->second;
  if (mu < 0 || mu >= N || nu < 0 || nu > mu + 1 || nu >= N)
    throw TensorError("A[" + std::to_string(mu) + "][" + std::to_string(nu) + "] is not allowed");
  return A.emplace(std::make_pair(mu, nu), MultiIndexTensor(D, A_rank(mu, nu), dims[mu], dims[nu]))
      .first->second;
}

MultiIndexTensor& FTNSSystem::B_ref(int mu, int rho, int nu) {
  auto it = B.find({mu, rho, nu});
  if (it != B.end()) return it->second;
  if (mu < 0 || mu >= N || nu < 0 || nu >= N || rho < 1 || B_rank(mu, rho, nu) < 0)
    throw TensorError("B[" + std::to_string(mu) + "][" + std::to_string(rho) + "][" +
                      std::to_string(nu) + "] is not allowed");
  return B.emplace(std::make_tuple(mu, rho, nu),
                   MultiIndexTensor(D, B_rank(mu, rho, nu), dims[mu], dims[nu]))
      .first->second;
}

const MultiIndexTensor* FTNSSystem::A_find(int mu, int nu) const {
  auto it = A.find({mu, nu});
  return it == A.end() ? nullptr : &it->second;
}

const MultiIndexTensor* FTNSSystem::B_find(int mu, int rho, int nu) const {
  auto it = B.find({mu, rho, nu});
  return it == B.end() ? nullptr : &it->second;
}

int FTNSSystem::total_dim() const {
  int t = 0;
  for (int n : dims) t += n;
  return t;
}

int FTNSSystem::block_offset(int mu) const {
  int t = 0;
  for (int a = 0; a < mu; ++a) t += dims[a];
  return t;
}

std::vector<FieldInfo> FTNSSystem::field_list() const {
  if (!fields.empty()) return fields;
  std::vector<FieldInfo> out;
  for (int mu = 0; mu < static_cast<int>(dims.size()); ++mu)
    out.push_back({"v" + std::to_string(mu), mu, 0, dims[mu]});
  return out;
}

FTNSSystem FTNSSystem::scaled_principal(double factor) const {
  FTNSSystem r = *this;
  for (auto& [key, t] : r.A) t = t * cplx(factor);
  return r;
}

namespace {

std::string a_name(int mu, int nu) {
  return "A[" + std::to_string(mu) + "][" + std::to_string(nu) + "]";
}

std::string b_name(int mu, int rho, int nu) {
  return "B[" + std::to_string(mu) + "][" + std::to_string(rho) + "][" + std::to_string(nu) + "]";
}

void check_tensor(std::vector<Violation>& out, const std::string& name, const MultiIndexTensor& t,
                  int D, int rank, int rows, int cols) {
  std::ostringstream msg;
  if (t.dim() != D) msg << "spatial dimension " << t.dim() << " != " << D << "; ";
  if (t.rank() != rank) msg << "rank " << t.rank() << " != " << rank << "; ";
  if (t.rows() != rows || t.cols() != cols)
    msg << "block shape " << t.rows() << "x" << t.cols() << " != " << rows << "x" << cols << "; ";
  const std::string m = msg.str();
  if (!m.empty()) out.push_back({name, m.substr(0, m.size() - 2)});
}

}  // namespace

std::vector<Violation> validate(const FTNSSystem& sys) {
  std::vector<Violation> out;
  if (sys.N < 1) out.push_back({"N", "order must be at least 1"});
  if (sys.D < 1) out.push_back({"D", "spatial dimension must be positive"});
  if (static_cast<int>(sys.dims.size()) != sys.N) {
    out.push_back({"dims", "expected " + std::to_string(sys.N) + " block sizes"});
    return out;
  }
  for (int n : sys.dims)
    if (n < 1) out.push_back({"dims", "block sizes must be positive"});
  if (!out.empty()) return out;
  for (const auto& [key, t] : sys.A) {
    const auto [mu, nu] = key;
    if (mu < 0 || mu >= sys.N || nu < 0 || nu >= sys.N || nu > mu + 1) {
      out.push_back({a_name(mu, nu), "index pair outside 0 <= nu <= min(mu+1, N-1)"});
      continue;
    }
    check_tensor(out, a_name(mu, nu), t, sys.D, FTNSSystem::A_rank(mu, nu), sys.dims[mu],
                 sys.dims[nu]);
  }
  for (const auto& [key, t] : sys.B) {
    const auto [mu, rho, nu] = key;
    if (mu < 0 || mu >= sys.N || nu < 0 || nu >= sys.N || rho < 1 ||
        FTNSSystem::B_rank(mu, rho, nu) < 0) {
      out.push_back({b_name(mu, rho, nu), "index triple needs rho >= 1 and mu-nu-rho+1 >= 0"});
      continue;
    }
    check_tensor(out, b_name(mu, rho, nu), t, sys.D, FTNSSystem::B_rank(mu, rho, nu),
                 sys.dims[mu], sys.dims[nu]);
  }
  if (!sys.fields.empty()) {
    std::vector<int> covered(sys.N, 0);
    for (const auto& f : sys.fields) {
      if (f.block < 0 || f.block >= sys.N || f.offset < 0 || f.size < 1 ||
          f.offset + f.size > sys.dims[f.block]) {
        out.push_back({"fields", "field '" + f.name + "' does not fit its block"});
        continue;
      }
      covered[f.block] += f.size;
    }
    for (int mu = 0; mu < sys.N; ++mu)
      if (covered[mu] != sys.dims[mu])
        out.push_back({"fields", "fields do not partition block " + std::to_string(mu)});
  }
  return out;
}

void require_valid(const FTNSSystem& sys) {
  const auto v = validate(sys);
  if (v.empty()) return;
  std::string msg = "invalid system:";
  for (const auto& x : v) msg += " " + x.where + ": " + x.message + ";";
  throw TensorError(msg);
}

StateBasis::StateBasis(int N, int D, std::vector<int> dims, bool compressed)
    : N_(N), D_(D), compressed_(compressed), dims_(std::move(dims)) {
  for (int mu = 0; mu < static_cast<int>(dims_.size()); ++mu) {
    const int L = N_ - mu - 1;
    if (compressed_) {
      tuples_.push_back(sym_index_basis(D_, L));
    } else {
      std::vector<Index> all;
      for (long f = 0; f < ipow(D_, L); ++f) all.push_back(unflatten(f, D_, L));
      tuples_.push_back(std::move(all));
    }
    offset_.push_back(size_);
    size_ += static_cast<int>(tuples_.back().size()) * dims_[mu];
  }
}

int StateBasis::index(int mu, long tuple_pos, int a) const {
  return offset_[mu] + static_cast<int>(tuple_pos) * dims_[mu] + a;
}

long StateBasis::tuple_position(int mu, const Index& idx) const {
  if (static_cast<int>(idx.size()) != tuple_length(mu)) throw TensorError("tuple length mismatch");
  return compressed_ ? sym_index_position(idx, D_) : flat_index(idx, D_);
}

RVec StateBasis::multiplicities() const {
  RVec m = RVec::Ones(size_);
  if (!compressed_) return m;
  for (int mu = 0; mu < blocks(); ++mu)
    for (std::size_t t = 0; t < tuples_[mu].size(); ++t)
      for (int a = 0; a < dims_[mu]; ++a)
        m(index(mu, static_cast<long>(t), a)) = static_cast<double>(multiplicity(tuples_[mu][t]));
  return m;
}

int StateBasis::field_total() const {
  int t = 0;
  for (int n : dims_) t += n;
  return t;
}

Mat StateBasis::direction_lift(const RVec& s) const {
  Mat R = Mat::Zero(size_, field_total());
  int col = 0;
  for (int mu = 0; mu < blocks(); ++mu) {
    for (std::size_t t = 0; t < tuples_[mu].size(); ++t) {
      const double w = direction_power(s, tuples_[mu][t]);
      for (int a = 0; a < dims_[mu]; ++a) R(index(mu, static_cast<long>(t), a), col + a) = w;
    }
    col += dims_[mu];
  }
  return R;
}

StateBasis compressed_basis(const FTNSSystem& sys) { return StateBasis(sys.N, sys.D, sys.dims, true); }
StateBasis full_basis(const FTNSSystem& sys) { return StateBasis(sys.N, sys.D, sys.dims, false); }

Mat embedding_matrix(const StateBasis& full, const StateBasis& comp) {
  Mat E = Mat::Zero(full.size(), comp.size());
  for (int mu = 0; mu < full.blocks(); ++mu)
    for (std::size_t t = 0; t < full.tuples(mu).size(); ++t) {
      const long c = comp.tuple_position(mu, full.tuples(mu)[t]);
      for (int a = 0; a < full.dim(mu); ++a)
        E(full.index(mu, static_cast<long>(t), a), comp.index(mu, c, a)) = 1.0;
    }
  return E;
}

namespace {

// Projector onto symmetric tuples of one block in the full basis.
Mat block_sym_projector(int D, int L, int n) {
  const long size = ipow(D, L);
  RMat P = RMat::Zero(size, size);
  PermutationTable perms(L);
  const double w = 1.0 / static_cast<double>(perms.elements().size());
  for (long f = 0; f < size; ++f) {
    const Index idx = unflatten(f, D, L);
    for (const auto& pi : perms.elements()) {
      Index q(L);
      for (int a = 0; a < L; ++a) q[a] = idx[pi[a]];
      P(f, flat_index(q, D)) += w;
    }
  }
  Mat out = Mat::Zero(size * n, size * n);
  for (long r = 0; r < size; ++r)
    for (long c = 0; c < size; ++c)
      if (P(r, c) != 0.0)
        for (int a = 0; a < n; ++a) out(r * n + a, c * n + a) = P(r, c);
  return out;
}

}  // namespace

std::vector<Mat> principal_matrix_full(const FTNSSystem& sys) {
  require_valid(sys);
  const StateBasis fb = full_basis(sys);
  std::vector<Mat> F(sys.D, Mat::Zero(fb.size(), fb.size()));
  for (const auto& [key, A] : sys.A) {
    const auto [mu, nu] = key;
    const int Li = fb.tuple_length(mu);
    const int Lj = fb.tuple_length(nu);
    const int nm = sys.dims[mu], nn = sys.dims[nu];
    for (int p = 0; p < sys.D; ++p) {
      Mat U = Mat::Zero(fb.block_size(mu), fb.block_size(nu));
      for (std::size_t j = 0; j < fb.tuples(nu).size(); ++j) {
        Index J{p};
        for (int x : fb.tuples(nu)[j]) J.push_back(x);
        // The first Li slots of (p, j) are matched against the row tuple.
        const Index head(J.begin(), J.begin() + Li);
        const Index tail(J.begin() + Li, J.end());
        const long i = flat_index(head, sys.D);
        U.block(i * nm, static_cast<long>(j) * nn, nm, nn) = A.at(tail);
      }
      const Mat Pi = block_sym_projector(sys.D, Li, nm);
      const Mat Pj = block_sym_projector(sys.D, Lj, nn);
      F[p].block(fb.block_offset(mu), fb.block_offset(nu), U.rows(), U.cols()) = Pi * U * Pj;
    }
  }
  return F;
}

PrincipalObjects principal_matrix(const FTNSSystem& sys) {
  const std::vector<Mat> F = principal_matrix_full(sys);
  const StateBasis fb = full_basis(sys);
  const StateBasis cb = compressed_basis(sys);
  const Mat E = embedding_matrix(fb, cb);
  // Rows at the canonical representatives.
  Mat Sel = Mat::Zero(cb.size(), fb.size());
  for (int mu = 0; mu < cb.blocks(); ++mu)
    for (std::size_t t = 0; t < cb.tuples(mu).size(); ++t) {
      const long f = fb.tuple_position(mu, cb.tuples(mu)[t]);
      for (int a = 0; a < cb.dim(mu); ++a)
        Sel(cb.index(mu, static_cast<long>(t), a), fb.index(mu, f, a)) = 1.0;
    }
  PrincipalObjects po{cb, {}};
  for (const auto& Fp : F) po.Ap.push_back(Sel * Fp * E);
  return po;
}

Mat PrincipalObjects::action(const RVec& s) const {
  Mat C = Mat::Zero(basis.size(), basis.size());
  for (std::size_t p = 0; p < Ap.size(); ++p) C += s(static_cast<long>(p)) * Ap[p];
  return C;
}

Mat PrincipalObjects::symbol(const RVec& s) const {
  const Mat R = basis.direction_lift(s);
  const RVec m = basis.multiplicities();
  return R.transpose() * m.cast<cplx>().asDiagonal() * action(s) * R;
}

Mat principal_symbol(const FTNSSystem& sys, const RVec& s) {
  require_unit(s);
  return principal_matrix(sys).symbol(s);
}

Mat principal_symbol_direct(const FTNSSystem& sys, const RVec& s) {
  require_valid(sys);
  require_unit(s);
  Mat P = Mat::Zero(sys.total_dim(), sys.total_dim());
  for (const auto& [key, A] : sys.A) {
    const auto [mu, nu] = key;
    P.block(sys.block_offset(mu), sys.block_offset(nu), sys.dims[mu], sys.dims[nu]) =
        contract_all(A, s);
  }
  return P;
}

}  // namespace ftns
