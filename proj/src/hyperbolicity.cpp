#include "ftns/hyperbolicity.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace ftns {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

constexpr double kClusterRel = 1e-5;
constexpr double kSemisimpleRel = 1e-10;
constexpr double kClusterVecMin = 1e-6;

std::vector<std::vector<int>> cluster_eigenvalues(const Vec& ev, double tau) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int a) { return parent[a] == a ? a : parent[a] = root(parent[a]); };
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (std::abs(ev(a) - ev(b)) <= tau) parent[root(a)] = root(b);
  std::vector<std::vector<int>> groups;
  std::vector<int> gid(n, -1);
  for (int a = 0; a < n; ++a) {
    const int r = root(a);
    if (gid[r] < 0) {
      gid[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[gid[r]].push_back(a);
  }
  return groups;
}

double min_singular(const Mat& m) { return min_singular_value(m); }

}  // namespace

Eigenstructure eigenstructure(const Mat& P, double tol) {
  if (P.rows() != P.cols()) throw TensorError("eigenstructure needs a square matrix");
  const int n = static_cast<int>(P.rows());
  Eigenstructure es;
  es.T = Mat::Zero(n, n);
  es.eigenvalues = Vec::Zero(n);
  es.cluster.assign(n, 0);
  if (n == 0) return es;
  if (!P.allFinite()) {
    es.ok = false;
    return es;
  }
  Eigen::ComplexEigenSolver<Mat> ces(P, true);
  if (ces.info() != Eigen::Success) {
    es.ok = false;
    return es;
  }
  const Vec ev = ces.eigenvalues();
  const Mat V = ces.eigenvectors();
  const double scale = 1.0 + P.norm();
  const auto groups = cluster_eigenvalues(ev, kClusterRel * scale);
  int col = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& idx = groups[g];
    const int m = static_cast<int>(idx.size());
    cplx mean = 0.0;
    for (int k : idx) mean += ev(k);
    mean /= static_cast<double>(m);
    Mat cols(n, m);
    Vec vals(m);
    bool defective_cluster = false;
    if (m == 1) {
      cols.col(0) = V.col(idx[0]);
      vals(0) = ev(idx[0]);
    } else {
      // null(M) is the orthogonal complement of range(M^dagger); the trailing
      // pivots of a column-pivoted QR of M^dagger reveal its dimension.
      const Mat M = P - mean * Mat::Identity(n, n);
      const Eigen::ColPivHouseholderQR<Mat> qr(M.adjoint());
      const double pivot = std::abs(qr.matrixR()(n - m, n - m));
      Mat Q;
      bool semisimple = false;
      if (pivot <= kSemisimpleRel * scale) {
        Q = qr.householderQ();
        semisimple = (M * Q.rightCols(m)).norm() <= kSemisimpleRel * scale * std::sqrt(static_cast<double>(m));
      }
      if (semisimple) {
        // Degenerate semisimple eigenvalue: orthonormal basis of the eigenspace.
        cols = Q.rightCols(m);
        const Mat B = cols.adjoint() * P * cols;
        for (int k = 0; k < m; ++k) vals(k) = B(k, k);
      } else {
        for (int k = 0; k < m; ++k) {
          cols.col(k) = V.col(idx[k]).normalized();
          vals(k) = ev(idx[k]);
        }
        if (min_singular(cols) < kClusterVecMin) defective_cluster = true;
      }
    }
    for (int k = 0; k < m; ++k) {
      es.T.col(col) = cols.col(k).normalized();
      es.eigenvalues(col) = vals(k);
      es.cluster[col] = static_cast<int>(g);
      // Split defective eigenvalues report the imaginary part of the cluster mean.
      const double im = defective_cluster ? std::abs(mean.imag()) : std::abs(vals(k).imag());
      es.effective_imag.push_back(im);
      es.max_imag = std::max(es.max_imag, im);
      ++col;
    }
    if (defective_cluster) es.defective = true;
  }
  es.T_inv = es.T.partialPivLu().inverse();
  es.kappa = es.T_inv.allFinite() ? spectral_norm(es.T) * spectral_norm(es.T_inv)
                                  : std::numeric_limits<double>::infinity();
  if (!(es.kappa * tol < 1.0)) es.defective = true;
  if (!es.T_inv.allFinite()) es.T_inv = Mat::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  return es;
}

namespace {

bool spectrum_real(const Eigenstructure& es, double real_tol) {
  for (long k = 0; k < es.eigenvalues.size(); ++k)
    if (es.effective_imag[k] > real_tol * (1.0 + std::abs(es.eigenvalues(k)))) return false;
  return true;
}

}  // namespace

Mat build_Hs(const Mat& P, const Eigenstructure& es, double real_tol) {
  if (!es.ok) throw TensorError("eigen-solver failed");
  if (es.defective) throw TensorError("symbol is defective; no symmetrizer exists");
  if (P.size() > 0 && !spectrum_real(es, real_tol)) throw TensorError("symbol has non-real spectrum");
  return build_Hs(P, es.T);
}

Mat build_Hs(const Mat& P, const Mat& T) {
  if (P.rows() != T.rows()) throw TensorError("T does not match P");
  const Mat Tinv = T.partialPivLu().inverse();
  return hermitian_part(Tinv.adjoint() * Tinv);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::strong: return "strong";
    case Verdict::weak: return "weak";
    case Verdict::not_hyperbolic: return "not_hyperbolic";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::strong: return 0;
    case Verdict::weak: return 2;
    case Verdict::not_hyperbolic: return 3;
    case Verdict::inconclusive: return 4;
  }
  return 4;
}

DirectionSample icosphere_sample(int level) {
  return {icosphere(level), "icosphere level " + std::to_string(level)};
}

DirectionSample fibonacci_sample(int count) {
  return {fibonacci_sphere(count), "fibonacci " + std::to_string(count)};
}

DirectionSample explicit_sample(std::vector<RVec> dirs) {
  if (dirs.empty()) throw TensorError("empty direction list");
  for (auto& d : dirs) d = normalized(d);
  return {std::move(dirs), "explicit"};
}

DirectionSample random_sample(int D, int count, unsigned long long seed) {
  Rng rng(seed);
  DirectionSample s;
  for (int k = 0; k < count; ++k) s.directions.push_back(random_unit_vector(D, rng));
  s.scheme = "random " + std::to_string(count) + " (seed " + std::to_string(seed) + ")";
  return s;
}

DirectionSample default_sample(int D, int level, int random_count, unsigned long long seed) {
  DirectionSample s;
  if (D == 3) {
    s = icosphere_sample(level);
  } else if (D == 2) {
    const int count = 10 * static_cast<int>(ipow(4, level)) + 2;
    for (int k = 0; k < count; ++k) {
      RVec v(2);
      v << std::cos(2.0 * M_PI * k / count), std::sin(2.0 * M_PI * k / count);
      s.directions.push_back(v);
    }
    s.scheme = "circle " + std::to_string(count);
  } else if (D == 1) {
    s.directions = {RVec::Ones(1), -RVec::Ones(1)};
    s.scheme = "line";
  } else {
    s.scheme = "none";
  }
  const DirectionSample r = random_sample(D, random_count, seed);
  s.directions.insert(s.directions.end(), r.directions.begin(), r.directions.end());
  s.scheme += " + " + r.scheme;
  if (s.directions.empty()) throw TensorError("empty direction sample");
  return s;
}

DirectionSample with_antipodes(const DirectionSample& s) {
  DirectionSample out = s;
  for (const auto& d : s.directions) out.directions.push_back(-d);
  out.scheme += " with antipodes";
  return out;
}

StrongHypReport classify_symbols(const std::vector<Mat>& symbols, const DirectionSample& sample,
                                 const HypOptions& opt) {
  StrongHypReport rep;
  rep.scheme = sample.scheme;
  rep.real_tol = opt.real_tol;
  rep.kappa_max = opt.kappa_max;
  bool any_complex = false, any_fail = false, any_weak = false;
  double worst = -1.0;
  for (std::size_t d = 0; d < symbols.size(); ++d) {
    const Mat& P = symbols[d];
    DirectionRecord rec;
    rec.s = sample.directions[d];
    const Eigenstructure es = eigenstructure(P);
    rec.ok = es.ok;
    if (!es.ok) {
      any_fail = true;
      rep.records.push_back(rec);
      continue;
    }
    rec.eigenvalues = es.eigenvalues;
    rec.max_imag = es.max_imag;
    rec.kappa = es.kappa;
    rec.defective = es.defective;
    rec.real = P.size() == 0 || spectrum_real(es, opt.real_tol);
    double badness = rec.kappa;
    if (!rec.real) {
      any_complex = true;
      badness = 1e200 + rec.max_imag;
    } else if (rec.defective || !(rec.kappa <= opt.kappa_max)) {
      any_weak = true;
      badness = 1e100;
    } else {
      rec.norm_T = spectral_norm(es.T);
      rec.norm_T_inv = spectral_norm(es.T_inv);
      const Mat H = hermitian_part(es.T_inv.adjoint() * es.T_inv);
      rec.norm_H = rec.norm_T_inv * rec.norm_T_inv;
      rec.norm_H_inv = rec.norm_T * rec.norm_T;
      const double pn = spectral_norm(P);
      const double denom = pn * rec.norm_H;
      rec.herm_residual = denom > 0.0 ? (H * P - P.adjoint() * H).norm() / denom : 0.0;
      rep.M_estimate = std::max({rep.M_estimate, rec.norm_H, rec.norm_H_inv});
      rep.K_estimate = std::max({rep.K_estimate, rec.norm_T, rec.norm_T_inv});
    }
    if (badness > worst) {
      worst = badness;
      rep.worst_direction = static_cast<int>(d);
    }
    rep.records.push_back(rec);
  }
  if (any_complex) rep.verdict = Verdict::not_hyperbolic;
  else if (any_fail) rep.verdict = Verdict::inconclusive;
  else if (any_weak) rep.verdict = Verdict::weak;
  else rep.verdict = Verdict::strong;
  return rep;
}

StrongHypReport classify_strong(const FTNSSystem& sys, const DirectionSample& sample,
                                const HypOptions& opt) {
  require_valid(sys);
  if (sample.directions.empty()) throw TensorError("empty direction sample");
  const PrincipalObjects po = principal_matrix(sys);
  std::vector<Mat> symbols;
  for (const auto& s : sample.directions) {
    if (s.size() != sys.D) throw TensorError("direction dimension does not match the system");
    require_unit(s);
    symbols.push_back(po.symbol(s));
  }
  return classify_symbols(symbols, sample, opt);
}

namespace {

std::vector<cplx> sorted_eigs(const Vec& ev) {
  std::vector<cplx> v(ev.data(), ev.data() + ev.size());
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

std::string vec_text(const RVec& s) {
  std::string out = "(";
  for (long i = 0; i < s.size(); ++i) out += (i ? ", " : "") + fmt(s(i));
  return out + ")";
}

}  // namespace

std::string report_text(const StrongHypReport& r, const std::string& title) {
  std::ostringstream out;
  out << "strong hyperbolicity report: " << title << "\n";
  out << "verdict: " << to_string(r.verdict) << "\n";
  out << "directions: " << r.records.size() << " sampled (" << r.scheme << ")\n";
  out << "realness tolerance: " << fmt(r.real_tol) << " * (1 + |lambda|)\n";
  out << "kappa_max: " << fmt(r.kappa_max) << "\n";
  out << "M estimate (sampled lower bound): " << fmt(r.M_estimate) << "\n";
  out << "K estimate (sampled lower bound): " << fmt(r.K_estimate) << "\n";
  double max_imag = 0.0, max_kappa = 0.0, max_res = 0.0;
  int defective = 0;
  for (const auto& rec : r.records) {
    max_imag = std::max(max_imag, rec.max_imag);
    if (std::isfinite(rec.kappa)) max_kappa = std::max(max_kappa, rec.kappa);
    max_res = std::max(max_res, rec.herm_residual);
    if (rec.defective) ++defective;
  }
  out << "max |Im lambda|: " << fmt(max_imag) << "\n";
  out << "max kappa(T): " << fmt(max_kappa) << "\n";
  out << "defective directions: " << defective << "\n";
  out << "max relative residual |HP - P^H H|: " << fmt(max_res) << "\n";
  if (r.worst_direction >= 0) {
    const auto& w = r.records[r.worst_direction];
    out << "worst direction: " << vec_text(w.s) << " kappa " << fmt(w.kappa) << " max|Im| "
        << fmt(w.max_imag) << "\n";
    out << "worst direction eigenvalues:";
    for (cplx z : sorted_eigs(w.eigenvalues)) out << " " << fmt(z.real()) << (z.imag() < 0 ? "" : "+") << fmt(z.imag()) << "i";
    out << "\n";
  }
  return out.str();
}

std::string report_csv(const StrongHypReport& r) {
  std::ostringstream out;
  const long D = r.records.empty() ? 0 : r.records[0].s.size();
  const long n = r.records.empty() ? 0 : r.records[0].eigenvalues.size();
  out << "index";
  for (long i = 0; i < D; ++i) out << ",s" << i + 1;
  for (long k = 0; k < n; ++k) out << ",re_lambda" << k + 1 << ",im_lambda" << k + 1;
  out << ",max_imag,kappa,herm_residual,norm_T,norm_T_inv,norm_H,norm_H_inv,real,defective\n";
  for (std::size_t d = 0; d < r.records.size(); ++d) {
    const auto& rec = r.records[d];
    out << d;
    for (long i = 0; i < D; ++i) out << "," << fmt(rec.s(i));
    const auto ev = sorted_eigs(rec.eigenvalues);
    for (long k = 0; k < n; ++k) {
      if (k < static_cast<long>(ev.size())) out << "," << fmt(ev[k].real()) << "," << fmt(ev[k].imag());
      else out << ",,";
    }
    out << "," << fmt(rec.max_imag) << "," << fmt(rec.kappa) << "," << fmt(rec.herm_residual) << ","
        << fmt(rec.norm_T) << "," << fmt(rec.norm_T_inv) << "," << fmt(rec.norm_H) << ","
        << fmt(rec.norm_H_inv) << "," << (rec.real ? 1 : 0) << "," << (rec.defective ? 1 : 0)
        << "\n";
  }
  return out.str();
}

}  // namespace ftns
