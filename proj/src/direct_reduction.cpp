#include "ftns/direct_reduction.hpp"

#include "ftns/polynomial.hpp"
#include "ftns/system_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>

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

std::vector<int> iota_vec(int from, int to) {
  std::vector<int> out;
  for (int k = from; k < to; ++k) out.push_back(k);
  return out;
}

std::string tuple_label(const Index& idx) {
  std::string s;
  for (int i : idx) s += std::to_string(i + 1);
  return s;
}

std::string var_name(const DirectVariable& v) {
  if (v.sigma == 0) return "v" + std::to_string(v.mu);
  return "d" + std::to_string(v.mu) + "_" + std::to_string(v.sigma);
}

}  // namespace

DirectReductionVars DirectReductionVars::zero(const FTNSSystem& sys) {
  require_valid(sys);
  DirectReductionVars v;
  v.N = sys.N;
  v.D = sys.D;
  v.dims = sys.dims;
  int offset = 0;
  auto add = [&](int mu, int sigma, bool second) {
    DirectVariable var;
    var.mu = mu;
    var.sigma = sigma;
    var.offset = offset;
    var.n = sys.dims[mu];
    var.tuples = sym_index_basis(sys.D, sigma);
    var.second_group = second;
    offset += var.size();
    v.vars.push_back(var);
  };
  for (int mu = 0; mu + 1 < sys.N; ++mu)
    for (int sigma = 0; sigma < sys.N - mu - 1; ++sigma) add(mu, sigma, false);
  for (int mu = 0; mu < sys.N; ++mu) add(mu, sys.N - mu - 1, true);
  return v;
}

int DirectReductionVars::size() const {
  return vars.empty() ? 0 : vars.back().offset + vars.back().size();
}

int DirectReductionVars::find(int mu, int sigma) const {
  for (std::size_t x = 0; x < vars.size(); ++x)
    if (vars[x].mu == mu && vars[x].sigma == sigma) return static_cast<int>(x);
  return -1;
}

int DirectReductionVars::second_offset() const {
  for (const auto& v : vars)
    if (v.second_group) return v.offset;
  return size();
}

std::vector<int> DirectReductionVars::second_variables() const {
  std::vector<int> out;
  for (std::size_t x = 0; x < vars.size(); ++x)
    if (vars[x].second_group) out.push_back(static_cast<int>(x));
  return out;
}

MultiIndexTensor& DirectReductionVars::Dp_ref(int x, int nu, int sigma) {
  auto it = Dp.find({x, nu, sigma});
  if (it == Dp.end())
    it = Dp.emplace(DirectKey{x, nu, sigma}, MultiIndexTensor(D, sigma, vars.at(x).size(), dims.at(nu)))
             .first;
  return it->second;
}

MultiIndexTensor& DirectReductionVars::Dbar_ref(int x, int nu, int sigma) {
  auto it = Dbar.find({x, nu, sigma});
  if (it == Dbar.end())
    it = Dbar.emplace(DirectKey{x, nu, sigma},
                      MultiIndexTensor(D, sigma + 1, vars.at(x).size(), dims.at(nu)))
             .first;
  return it->second;
}

std::vector<Violation> DirectReductionVars::check(double tol) const {
  std::vector<Violation> out;
  auto where = [](const char* name, const DirectKey& k) {
    return std::string(name) + "[" + std::to_string(std::get<0>(k)) + "][" +
           std::to_string(std::get<1>(k)) + "][" + std::to_string(std::get<2>(k)) + "]";
  };
  auto key_ok = [&](const char* name, const DirectKey& k, const MultiIndexTensor& t, int rank) {
    const auto [x, nu, sigma] = k;
    if (x < 0 || x >= static_cast<int>(vars.size()) || nu < 0 || nu > N - 2 || sigma < 1 ||
        sigma > N - nu - 1) {
      out.push_back({where(name, k), "no such constraint addition"});
      return false;
    }
    if (t.dim() != D || t.rank() != rank || t.rows() != vars[x].size() || t.cols() != dims[nu]) {
      out.push_back({where(name, k), "expected rank " + std::to_string(rank) + " with block " +
                                         std::to_string(vars[x].size()) + "x" +
                                         std::to_string(dims[nu])});
      return false;
    }
    return true;
  };
  for (const auto& [k, t] : Dp) {
    if (!key_ok("D", k, t, std::get<2>(k))) continue;
    const double defect = (t - symmetrize(t, iota_vec(0, t.rank()))).max_abs();
    if (defect > tol * (1.0 + t.max_abs()))
      out.push_back({where("D", k), "not symmetric in its upper indices"});
  }
  for (const auto& [k, t] : Dbar) {
    if (!key_ok("Dbar", k, t, std::get<2>(k) + 1)) continue;
    const double scale = tol * (1.0 + t.max_abs());
    if (symmetrize(t, iota_vec(0, t.rank())).max_abs() > scale)
      out.push_back({where("Dbar", k), "full symmetrization does not vanish"});
    if (t.rank() > 2 && (t - symmetrize(t, iota_vec(1, t.rank()))).max_abs() > scale)
      out.push_back({where("Dbar", k), "not symmetric in its trailing indices"});
  }
  return out;
}

std::vector<std::string> DirectReductionVars::constraint_catalogue() const {
  std::vector<std::string> out;
  for (int nu = 0; nu + 1 < N; ++nu)
    for (int sigma = 1; sigma <= N - nu - 1; ++sigma) {
      const std::string s = std::to_string(sigma), m = std::to_string(sigma - 1);
      const std::string f = std::to_string(nu);
      out.push_back("c" + f + "_" + s + " = d_(i1 d" + f + "_" + m + ") - d" + f + "_" + s);
      out.push_back("cbar" + f + "_" + s + " = d_i1 d" + f + "_" + s + " - d_(i1 d" + f + "_" + s +
                    ")");
    }
  return out;
}

std::vector<std::string> DirectReductionVars::labels() const {
  std::vector<std::string> out;
  for (const auto& v : vars)
    for (const Index& t : v.tuples)
      for (int a = 0; a < v.n; ++a) {
        std::string s = var_name(v);
        if (!t.empty()) s += "[" + tuple_label(t) + "]";
        if (v.n > 1) s += "#" + std::to_string(a + 1);
        out.push_back(s);
      }
  return out;
}

std::string serialize_direct_params(const DirectReductionVars& v) {
  nlohmann::json j;
  j["N"] = v.N;
  j["D"] = v.D;
  auto dump = [&](const std::map<DirectKey, MultiIndexTensor>& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, t] : m) {
      if (t.is_zero()) continue;
      const auto& var = v.vars[std::get<0>(k)];
      nlohmann::json e;
      e["row"] = {var.mu, var.sigma};
      e["nu"] = std::get<1>(k);
      e["sigma"] = std::get<2>(k);
      e["tensor"] = detail::tensor_to_json(t);
      arr.push_back(e);
    }
    return arr;
  };
  j["D_params"] = dump(v.Dp);
  j["Dbar_params"] = dump(v.Dbar);
  return j.dump(1) + "\n";
}

DirectReductionVars parse_direct_params(const std::string& text, const FTNSSystem& parent) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0, 0);
  }
  DirectReductionVars v = DirectReductionVars::zero(parent);
  auto load = [&](const char* key, bool bar) {
    if (!j.contains(key)) return;
    for (const auto& e : j.at(key)) {
      const int x = v.find(e.at("row").at(0).get<int>(), e.at("row").at(1).get<int>());
      if (x < 0) throw TensorError(std::string(key) + ": unknown row variable");
      const int nu = e.at("nu").get<int>(), sigma = e.at("sigma").get<int>();
      MultiIndexTensor t;
      detail::tensor_from_json(e.at("tensor"), parent.D, t);
      (bar ? v.Dbar : v.Dp)[{x, nu, sigma}] = t;
    }
  };
  load("D_params", false);
  load("Dbar_params", true);
  const auto viol = v.check();
  if (!viol.empty()) throw TensorError("direct parameters: " + viol[0].where + ": " + viol[0].message);
  return v;
}

FTNSSystem build_direct_ft1s(const FTNSSystem& sys, const DirectReductionVars& vars) {
  require_valid(sys);
  const auto viol = vars.check();
  if (!viol.empty()) throw TensorError("direct parameters: " + viol[0].where + ": " + viol[0].message);
  const int D = sys.D, N = sys.N, n = vars.size();
  std::vector<Mat> A1(D, Mat::Zero(n, n));
  Mat B1 = Mat::Zero(n, n);

  auto col = [&](int nu, int sigma, const Index& idx, int b) {
    const DirectVariable& v = vars.vars[vars.find(nu, sigma)];
    return v.index(sym_index_position(idx, D), b);
  };

  // Substitutes d_m v^nu (m = row tuple followed by the coefficient tuple).
  auto substitute = [&](int row, const Index& rowt, const Index& k, int nu, const Mat& coeff,
                        int a) {
    const Index m = concat(rowt, k);
    const int L = static_cast<int>(m.size());
    const int S = N - nu - 1;
    if (L <= S) {
      for (int b = 0; b < coeff.cols(); ++b) B1(row, col(nu, L, m, b)) += coeff(a, b);
      return;
    }
    // L = S + 1: one derivative falls on the top variable, taken on the first
    // index and averaged over the row tuple.
    if (rowt.empty()) {
      for (int b = 0; b < coeff.cols(); ++b) A1[k[0]](row, col(nu, S, drop(k, 0), b)) += coeff(a, b);
      return;
    }
    const double w = 1.0 / static_cast<double>(rowt.size());
    for (std::size_t q = 0; q < rowt.size(); ++q) {
      const Index rest = concat(drop(rowt, static_cast<int>(q)), k);
      for (int b = 0; b < coeff.cols(); ++b) A1[rowt[q]](row, col(nu, S, rest, b)) += w * coeff(a, b);
    }
  };

  for (std::size_t x = 0; x < vars.vars.size(); ++x) {
    const DirectVariable& var = vars.vars[x];
    for (std::size_t t = 0; t < var.tuples.size(); ++t) {
      const Index& rowt = var.tuples[t];
      for (int a = 0; a < var.n; ++a) {
        const int row = var.index(static_cast<long>(t), a);
        for (const auto& [key, A] : sys.A) {
          if (key.first != var.mu) continue;
          for (long f = 0; f < A.size(); ++f) {
            if (A.flat(f).row(a).isZero(0.0)) continue;
            substitute(row, rowt, unflatten(f, D, A.rank()), key.second, A.flat(f), a);
          }
        }
        for (const auto& [key, B] : sys.B) {
          if (std::get<0>(key) != var.mu) continue;
          for (long f = 0; f < B.size(); ++f) {
            if (B.flat(f).row(a).isZero(0.0)) continue;
            const Index m = concat(rowt, unflatten(f, D, B.rank()));
            const int nu = std::get<2>(key);
            for (int b = 0; b < B.cols(); ++b)
              B1(row, col(nu, static_cast<int>(m.size()), m, b)) += B.flat(f)(a, b);
          }
        }
      }
    }
  }

  // Constraint additions.
  for (const auto& [k, T] : vars.Dp) {
    const auto [x, nu, sigma] = k;
    const DirectVariable& var = vars.vars[x];
    for (long f = 0; f < T.size(); ++f) {
      if (T.flat(f).isZero(0.0)) continue;
      const Index idx = unflatten(f, D, sigma);
      const Index rest = drop(idx, 0);
      for (int r = 0; r < var.size(); ++r)
        for (int b = 0; b < T.cols(); ++b) {
          A1[idx[0]](var.offset + r, col(nu, sigma - 1, rest, b)) += T.flat(f)(r, b);
          B1(var.offset + r, col(nu, sigma, idx, b)) -= T.flat(f)(r, b);
        }
    }
  }
  for (const auto& [k, T] : vars.Dbar) {
    const auto [x, nu, sigma] = k;
    const DirectVariable& var = vars.vars[x];
    for (long f = 0; f < T.size(); ++f) {
      if (T.flat(f).isZero(0.0)) continue;
      const Index idx = unflatten(f, D, sigma + 1);
      const Index rest = drop(idx, 0);
      for (int r = 0; r < var.size(); ++r)
        for (int b = 0; b < T.cols(); ++b)
          A1[idx[0]](var.offset + r, col(nu, sigma, rest, b)) += T.flat(f)(r, b);
    }
  }

  FTNSSystem out = FTNSSystem::zero(1, D, {n}, sys.label.empty() ? "direct first order"
                                                                  : sys.label + " direct first order");
  MultiIndexTensor& A = out.A_ref(0, 0);
  for (int p = 0; p < D; ++p) A.at({p}) = A1[p];
  if (!B1.isZero(0.0)) out.B_ref(0, 1, 0).at({}) = B1;
  for (const auto& v : vars.vars) out.fields.push_back({var_name(v), 0, v.offset, v.size()});
  return out;
}

DirectReductionVars partial_choice_direct(const FTNSSystem& sys) { return DirectReductionVars::zero(sys); }

void set_top_dbar(DirectReductionVars& vars, const std::vector<Mat>& CDbar) {
  const int D = vars.D, off = vars.second_offset();
  for (int x : vars.second_variables()) {
    const DirectVariable& row = vars.vars[x];
    for (int nu = 0; nu + 1 < vars.N; ++nu) {
      const int S = vars.top_sigma(nu);
      const DirectVariable& colv = vars.vars[vars.find(nu, S)];
      MultiIndexTensor t(D, S + 1, row.size(), colv.n);
      for (long f = 0; f < t.size(); ++f) {
        const Index idx = unflatten(f, D, S + 1);
        const Index rest = drop(idx, 0);
        const long pos = sym_index_position(rest, D);
        const double m = static_cast<double>(multiplicity(canonical(rest)));
        for (int r = 0; r < row.size(); ++r)
          for (int b = 0; b < colv.n; ++b)
            t.flat(f)(r, b) = CDbar[idx[0]](row.offset - off + r, colv.index(pos, b) - off) / m;
      }
      if (t.is_zero()) {
        vars.Dbar.erase({x, nu, S});
      } else {
        vars.Dbar[{x, nu, S}] = t;
      }
    }
  }
}

std::vector<Mat> top_dbar_blocks(const DirectReductionVars& vars) {
  const int D = vars.D, off = vars.second_offset(), n2 = vars.second_size();
  std::vector<Mat> out(D, Mat::Zero(n2, n2));
  for (int x : vars.second_variables()) {
    const DirectVariable& row = vars.vars[x];
    for (int nu = 0; nu + 1 < vars.N; ++nu) {
      const int S = vars.top_sigma(nu);
      auto it = vars.Dbar.find({x, nu, S});
      if (it == vars.Dbar.end()) continue;
      const DirectVariable& colv = vars.vars[vars.find(nu, S)];
      for (long f = 0; f < it->second.size(); ++f) {
        const Index idx = unflatten(f, D, S + 1);
        const long pos = sym_index_position(drop(idx, 0), D);
        for (int r = 0; r < row.size(); ++r)
          for (int b = 0; b < colv.n; ++b)
            out[idx[0]](row.offset - off + r, colv.index(pos, b) - off) += it->second.flat(f)(r, b);
      }
    }
  }
  return out;
}

DirectReductionVars random_direct_params(const FTNSSystem& sys, Rng& rng, double scale) {
  DirectReductionVars v = DirectReductionVars::zero(sys);
  for (std::size_t x = 0; x < v.vars.size(); ++x)
    for (int nu = 0; nu + 1 < sys.N; ++nu)
      for (int sigma = 1; sigma <= sys.N - nu - 1; ++sigma) {
        MultiIndexTensor& d = v.Dp_ref(static_cast<int>(x), nu, sigma);
        for (long f = 0; f < d.size(); ++f) d.flat(f) = scale * random_complex(d.rows(), d.cols(), rng);
        d = symmetrize(d, iota_vec(0, sigma));
        MultiIndexTensor& db = v.Dbar_ref(static_cast<int>(x), nu, sigma);
        for (long f = 0; f < db.size(); ++f)
          db.flat(f) = scale * random_complex(db.rows(), db.cols(), rng);
        if (sigma > 1) db = symmetrize(db, iota_vec(1, sigma + 1));
        db = db - symmetrize(db, iota_vec(0, sigma + 1));
      }
  return v;
}

namespace {

// Constraint rows (c then cbar) evaluated on a polynomial state.
PolyField direct_constraints(const DirectReductionVars& v, const MonomialTable& tab, const PolyField& F) {
  const int D = v.D;
  std::vector<PolyField> rows;
  auto comp = [&](int mu, int sigma, const Index& idx) {
    const DirectVariable& var = v.vars[v.find(mu, sigma)];
    return F.middleRows(var.index(sym_index_position(idx, D), 0), var.n);
  };
  for (int nu = 0; nu + 1 < v.N; ++nu) {
    for (int sigma = 1; sigma <= v.N - nu - 1; ++sigma) {
      for (const Index& I : sym_index_basis(D, sigma)) {
        PolyField c = -comp(nu, sigma, I);
        for (int q = 0; q < sigma; ++q)
          c += derivative(tab, PolyField(comp(nu, sigma - 1, drop(I, q))), I[q]) / static_cast<double>(sigma);
        rows.push_back(c);
      }
      for (int i = 0; i < D; ++i)
        for (const Index& J : sym_index_basis(D, sigma)) {
          const Index m = concat({i}, J);
          PolyField c = derivative(tab, PolyField(comp(nu, sigma, J)), i);
          for (int q = 0; q <= sigma; ++q)
            c -= derivative(tab, PolyField(comp(nu, sigma, drop(m, q))), m[q]) / static_cast<double>(sigma + 1);
          rows.push_back(c);
        }
    }
  }
  long total = 0;
  for (const auto& r : rows) total += r.rows();
  PolyField out(total, tab.size());
  long at = 0;
  for (const auto& r : rows) {
    out.middleRows(at, r.rows()) = r;
    at += r.rows();
  }
  return out;
}

}  // namespace

ClosureReport direct_constraint_evolution(const FTNSSystem& sys, const DirectReductionVars& vars,
                                          unsigned long long seed) {
  const FTNSSystem ft1s = build_direct_ft1s(sys, vars);
  ClosureReport rep;
  if (sys.N < 2) return rep;
  const MonomialTable tab(sys.D, sys.N + 2);
  Rng rng(seed);
  const PolyField probe = direct_constraints(vars, tab, PolyField::Zero(vars.size(), tab.size()));
  const long nf = probe.rows();
  const long unknowns = nf * (1 + sys.D);
  const int samples = static_cast<int>((3 * unknowns) / tab.size() + 2);
  std::vector<PolyField> features, targets;
  for (int t = 0; t < samples; ++t) {
    const PolyField F = random_poly_field(vars.size(), tab, rng);
    const PolyField U = apply_system(ft1s, tab, F);
    features.push_back(direct_constraints(vars, tab, F));
    targets.push_back(direct_constraints(vars, tab, U));
  }
  rep.samples = samples;
  rep.span_residual = span_residual(tab, features, targets, 1);
  return rep;
}

double replacement_residual(const FTNSSystem& sys, const DirectReductionVars& vars,
                            unsigned long long seed) {
  const FTNSSystem ft1s = build_direct_ft1s(sys, vars);
  const MonomialTable tab(sys.D, sys.N + 2);
  Rng rng(seed);
  const PolyField v = random_poly_field(sys.total_dim(), tab, rng);
  const PolyField rhs = apply_system(sys, tab, v);
  PolyField F = PolyField::Zero(vars.size(), tab.size());
  PolyField expect = PolyField::Zero(vars.size(), tab.size());
  for (const auto& var : vars.vars)
    for (std::size_t t = 0; t < var.tuples.size(); ++t) {
      const int r = var.index(static_cast<long>(t), 0);
      F.middleRows(r, var.n) = derivative(tab, PolyField(v.middleRows(sys.block_offset(var.mu), var.n)), var.tuples[t]);
      expect.middleRows(r, var.n) =
          derivative(tab, PolyField(rhs.middleRows(sys.block_offset(var.mu), var.n)), var.tuples[t]);
    }
  const PolyField got = apply_system(ft1s, tab, F);
  return (got - expect).norm() / std::max(1.0, expect.norm());
}

}  // namespace ftns
