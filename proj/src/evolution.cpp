#include "ftns/evolution.hpp"

#include "ftns/hyperbolicity.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace ftns {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// m d_x^order applied to one column block, added to one row block.
struct Term {
  int row, col, rows, cols;
  int order;
  Mat m;
};

std::vector<Term> restricted_terms(const FTNSSystem& sys, const RVec& e) {
  std::vector<Term> out;
  auto add = [&](int mu, int nu, const MultiIndexTensor& t) {
    const Mat m = contract_all(t, e);
    if (m.cwiseAbs().maxCoeff() == 0.0) return;
    out.push_back({sys.block_offset(mu), sys.block_offset(nu), sys.dims[mu], sys.dims[nu], t.rank(), m});
  };
  for (const auto& [key, A] : sys.A) add(key.first, key.second, A);
  for (const auto& [key, B] : sys.B) add(std::get<0>(key), std::get<2>(key), B);
  return out;
}

Mat derivative_power(const Mat& f, double h, int k) {
  Mat g = f;
  for (int i = 0; i < k; ++i) g = periodic_d1(g, h);
  return g;
}

Mat apply_restricted(const std::vector<Term>& terms, const Mat& u, double h, int max_order) {
  // dcache[k] holds d_x^k of the whole state; cheap for the small systems used here.
  std::vector<Mat> dcache(max_order + 1);
  dcache[0] = u;
  for (int k = 1; k <= max_order; ++k) dcache[k] = periodic_d1(dcache[k - 1], h);
  Mat out = Mat::Zero(u.rows(), u.cols());
  for (const Term& t : terms)
    out.middleRows(t.row, t.rows) += t.m * dcache[t.order].middleRows(t.col, t.cols);
  return out;
}

double l2(const Mat& u, double h) { return std::sqrt(h * u.squaredNorm()); }

double spectral_radius(const Mat& P) {
  if (P.size() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Mat> es(P, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

RVec default_direction(const RVec& e, int D) {
  if (e.size() == D) return normalized(e);
  RVec d = RVec::Zero(D);
  d(0) = 1.0;
  return d;
}

// Spectral radius of the symbol along +-e.
double lambda_max(const FTNSSystem& sys, const RVec& e) {
  double r = 0.0;
  if (!sys.A.empty()) {
    r = spectral_radius(principal_symbol(sys, e));
    RVec me = -e;
    r = std::max(r, spectral_radius(principal_symbol(sys, me)));
  }
  return r;
}

double choose_dt(const GridRun& run, double lam, double h) {
  if (run.dt > 0.0) return run.dt;
  return run.cfl * h / std::max(lam, 1e-12);
}

}  // namespace

double GrowthRow::growth() const { return std::exp(log_growth); }

GrowthTable fourier_evolve(const FTNSSystem& sys, const FourierModeRun& run) {
  const RVec s = normalized(run.s);
  const Mat P = principal_symbol(sys, s);
  const int n = static_cast<int>(P.rows());
  GrowthTable g;
  const Eigenstructure es = eigenstructure(P);
  double m = 0.0;
  for (long k = 0; k < es.eigenvalues.size(); ++k) m = std::max(m, -es.eigenvalues(k).imag());
  g.rate = m * run.t_final;
  g.exact = es.ok && !es.defective;
  for (double w : run.omegas) {
    const double wt = w * run.t_final;
    // exp(i w t P) with the dominant exponential factored out.
    double lg = 0.0;
    if (n == 0) {
      lg = 0.0;
    } else if (g.exact) {
      Vec d(n);
      for (int k = 0; k < n; ++k) d(k) = std::exp(cplx(0.0, wt) * es.eigenvalues(k) - wt * m);
      const Mat E = es.T * d.asDiagonal() * es.T_inv;
      lg = wt * m + std::log(spectral_norm(E));
    } else {
      const Mat Z = cplx(0.0, wt) * P - cplx(wt * m, 0.0) * Mat::Identity(n, n);
      const Mat E = Z.exp();
      lg = wt * m + std::log(spectral_norm(E));
    }
    g.rows.push_back({w, lg});
  }
  const long r = static_cast<long>(g.rows.size());
  if (r >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const GrowthRow& row : g.rows) {
      sx += row.omega;
      sy += row.log_growth;
      sxx += row.omega * row.omega;
      sxy += row.omega * row.log_growth;
    }
    const double den = static_cast<double>(r) * sxx - sx * sx;
    g.slope = den != 0.0 ? (static_cast<double>(r) * sxy - sx * sy) / den : 0.0;
    g.intercept = (sy - g.slope * sx) / static_cast<double>(r);
  }
  return g;
}

std::string growth_csv(const GrowthTable& g) {
  std::ostringstream os;
  os << "omega,log_growth,growth\n";
  for (const GrowthRow& r : g.rows) os << fmt(r.omega) << ',' << fmt(r.log_growth) << ',' << fmt(r.growth()) << '\n';
  os << "# slope," << fmt(g.slope) << "\n# intercept," << fmt(g.intercept) << "\n# rate," << fmt(g.rate)
     << "\n# exact," << (g.exact ? 1 : 0) << '\n';
  return os.str();
}

Mat ModalData::sample(int points, int derivative) const {
  const double h = kTwoPi / points;
  Mat out = Mat::Zero(coeffs.rows(), points);
  for (std::size_t j = 0; j < wavenumbers.size(); ++j) {
    const int k = wavenumbers[j];
    const cplx factor = std::pow(cplx(0.0, static_cast<double>(k)), derivative);
    for (int x = 0; x < points; ++x) {
      const cplx e = std::exp(cplx(0.0, k * h * x));
      out.col(x) += factor * e * coeffs.col(static_cast<long>(j));
    }
  }
  return out;
}

ModalData sine_mode(int components, int k, Rng& rng) {
  ModalData d;
  d.wavenumbers = {k, -k};
  d.coeffs = Mat::Zero(components, 2);
  for (int c = 0; c < components; ++c) {
    const double a = uniform(rng, 0.5, 1.5), phi = uniform(rng, 0.0, kTwoPi);
    // a sin(kx + phi)
    d.coeffs(c, 0) = a * std::exp(cplx(0.0, phi)) / cplx(0.0, 2.0);
    d.coeffs(c, 1) = -a * std::exp(cplx(0.0, -phi)) / cplx(0.0, 2.0);
  }
  return d;
}

ModalData gaussian_bump(int components, double width, int kmax, Rng& rng) {
  ModalData d;
  for (int k = -kmax; k <= kmax; ++k) d.wavenumbers.push_back(k);
  d.coeffs = Mat::Zero(components, 2 * kmax + 1);
  for (int c = 0; c < components; ++c) {
    const double a = uniform(rng, 0.5, 1.5);
    for (int k = -kmax; k <= kmax; ++k) {
      const double g = width / std::sqrt(kTwoPi) * std::exp(-0.5 * k * k * width * width);
      d.coeffs(c, k + kmax) = a * g * std::exp(cplx(0.0, -k * std::numbers::pi));
    }
  }
  return d;
}

ModalData band_limited(int components, int kmax, Rng& rng) {
  ModalData d;
  for (int k = 1; k <= kmax; ++k) {
    d.wavenumbers.push_back(k);
    d.wavenumbers.push_back(-k);
  }
  d.coeffs = Mat::Zero(components, 2 * kmax);
  for (int c = 0; c < components; ++c)
    for (int k = 1; k <= kmax; ++k) {
      const cplx z(gaussian(rng) / k, gaussian(rng) / k);
      d.coeffs(c, 2 * (k - 1)) = z;
      d.coeffs(c, 2 * (k - 1) + 1) = std::conj(z);
    }
  return d;
}

Mat periodic_d1(const Mat& f, double h) {
  const long n = f.cols();
  Mat g(f.rows(), n);
  for (long x = 0; x < n; ++x) {
    const long p1 = (x + 1) % n, p2 = (x + 2) % n, m1 = (x + n - 1) % n, m2 = (x + n - 2) % n;
    g.col(x) = (8.0 * (f.col(p1) - f.col(m1)) - (f.col(p2) - f.col(m2))) / (12.0 * h);
  }
  return g;
}

namespace {

struct Stepper {
  std::vector<Term> terms;
  int max_order = 0;
  double h = 0.0;

  Mat rhs(const Mat& u) const { return apply_restricted(terms, u, h, max_order); }
  Mat step(const Mat& u, double dt) const {
    const Mat k1 = rhs(u);
    const Mat k2 = rhs(u + 0.5 * dt * k1);
    const Mat k3 = rhs(u + 0.5 * dt * k2);
    const Mat k4 = rhs(u + dt * k3);
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

Stepper make_stepper(const FTNSSystem& sys, const RVec& e, double h) {
  Stepper st;
  st.terms = restricted_terms(sys, e);
  st.h = h;
  for (const Term& t : st.terms) st.max_order = std::max(st.max_order, t.order);
  return st;
}

double grid_energy(const FTNSSystem& sys, const Mat& u, const Mat& Ge, double h) {
  Mat w(u.rows(), u.cols());
  for (int mu = 0; mu < sys.N; ++mu) {
    const int off = sys.block_offset(mu), n = sys.dims[mu];
    w.middleRows(off, n) = derivative_power(u.middleRows(off, n), h, sys.N - mu - 1);
  }
  double e = 0.0;
  for (long x = 0; x < w.cols(); ++x) {
    const Vec c = w.col(x);
    e += (Ge.size() ? (c.adjoint() * Ge * c)(0, 0).real() : c.squaredNorm());
  }
  return e * h;
}

struct Evolution {
  GridSeries series;
  std::vector<Mat> snapshots;
};

Evolution run_grid(const FTNSSystem& sys, const GridRun& run, const Mat& initial, const Mat& G, double dt_in) {
  require_valid(sys);
  const RVec e = default_direction(run.direction, sys.D);
  if (initial.rows() != sys.total_dim() || initial.cols() != run.points)
    throw TensorError("grid_evolve: initial data must be total_dim x points");
  const double h = kTwoPi / run.points;
  Mat Ge;
  if (G.size()) {
    const Mat R = compressed_basis(sys).direction_lift(e);
    if (G.rows() != R.rows()) throw TensorError("grid_evolve: energy form does not match the state basis");
    Ge = R.adjoint() * G * R;
  }
  const Stepper st = make_stepper(sys, e, h);
  double dt = dt_in;
  if (dt <= 0.0) dt = choose_dt(run, lambda_max(sys, e), h);
  int steps = std::max(1, static_cast<int>(std::ceil(run.t_final / dt - 1e-12)));
  dt = run.t_final / steps;

  Evolution ev;
  GridSeries& s = ev.series;
  s.dt = dt;
  s.h = h;
  Mat u = initial;
  auto record = [&](double t) {
    s.t.push_back(t);
    s.norm.push_back(l2(u, h));
    s.energy.push_back(grid_energy(sys, u, Ge, h));
    ev.snapshots.push_back(u);
  };
  record(0.0);
  for (int k = 1; k <= steps; ++k) {
    u = st.step(u, dt);
    const double nrm = l2(u, h);
    if (!std::isfinite(nrm) || nrm > 1e10) {
      s.unstable = true;
      std::ostringstream os;
      os << "instability at step " << k << ", t = " << fmt(k * dt) << ", norm = " << fmt(nrm);
      s.diagnostic = os.str();
      s.steps = k;
      s.t.push_back(k * dt);
      s.norm.push_back(nrm);
      s.energy.push_back(std::numeric_limits<double>::quiet_NaN());
      s.final_state = u;
      return ev;
    }
    if (k == steps || (run.record_every > 0 && k % run.record_every == 0)) record(k * dt);
  }
  s.steps = steps;
  s.final_state = u;
  return ev;
}

}  // namespace

GridSeries grid_evolve(const FTNSSystem& sys, const GridRun& run, const Mat& initial, const Mat& G) {
  return run_grid(sys, run, initial, G, 0.0).series;
}

std::string series_csv(const GridSeries& s) {
  std::ostringstream os;
  os << "t,norm,energy" << (s.constraint.empty() ? "" : ",constraint") << '\n';
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    os << fmt(s.t[k]) << ',' << fmt(s.norm[k]) << ',' << fmt(s.energy[k]);
    if (!s.constraint.empty()) os << ',' << fmt(s.constraint[k]);
    os << '\n';
  }
  os << "# h," << fmt(s.h) << "\n# dt," << fmt(s.dt) << "\n# steps," << s.steps << '\n';
  if (s.unstable) os << "# unstable," << s.diagnostic << '\n';
  return os.str();
}

Mat lift_direct(const DirectReductionVars& vars, const ModalData& data, int points, const RVec& e) {
  Mat out = Mat::Zero(vars.size(), points);
  std::vector<int> field_offset(vars.N, 0);
  for (int mu = 1; mu < vars.N; ++mu) field_offset[mu] = field_offset[mu - 1] + vars.dims[mu - 1];
  for (const DirectVariable& v : vars.vars) {
    const Mat f = data.sample(points, v.sigma).middleRows(field_offset[v.mu], v.n);
    for (std::size_t t = 0; t < v.tuples.size(); ++t)
      out.middleRows(v.index(static_cast<long>(t), 0), v.n) = direction_power(e, v.tuples[t]) * f;
  }
  return out;
}

namespace {

Mat violation(int rows, int points) {
  // A smooth perturbation that no derivative relation absorbs.
  Mat p(rows, points);
  for (int r = 0; r < rows; ++r)
    for (int x = 0; x < points; ++x) p(r, x) = 0.1 * std::cos(kTwoPi * x / points + 0.3 * r);
  return p;
}

Discrepancy compare(const FTNSSystem& parent, const FTNSSystem& child, const GridRun& run,
                    const ModalData& data, const Mat& child_initial,
                    const std::vector<std::pair<int, int>>& v_rows,  // (child row, parent row) per field component
                    const std::function<Mat(const Mat&, double)>& constraint) {
  const RVec e = default_direction(run.direction, parent.D);
  const double h = kTwoPi / run.points;
  double dt = run.dt;
  if (dt <= 0.0) dt = choose_dt(run, std::max(lambda_max(parent, e), lambda_max(child, e)), h);
  GridRun r = run;
  r.direction = e;
  const Evolution p = run_grid(parent, r, data.sample(run.points), Mat(), dt);
  const Evolution c = run_grid(child, r, child_initial, Mat(), dt);
  Discrepancy out;
  out.parent = p.series;
  out.child = c.series;
  const std::size_t m = std::min(p.snapshots.size(), c.snapshots.size());
  for (std::size_t k = 0; k < m; ++k) {
    out.t.push_back(p.series.t[k]);
    Mat diff(static_cast<long>(v_rows.size()), run.points);
    for (std::size_t j = 0; j < v_rows.size(); ++j)
      diff.row(static_cast<long>(j)) = c.snapshots[k].row(v_rows[j].first) - p.snapshots[k].row(v_rows[j].second);
    out.discrepancy.push_back(l2(diff, h));
    out.constraint.push_back(l2(constraint(c.snapshots[k], h), h));
  }
  out.child.constraint = out.constraint;
  return out;
}

}  // namespace

Discrepancy compare_parent_child(const FTNSSystem& parent, const DirectReductionVars& vars, const GridRun& run,
                                 const ModalData& data, bool violate) {
  const RVec e = default_direction(run.direction, parent.D);
  const FTNSSystem child = build_direct_ft1s(parent, vars);
  Mat init = lift_direct(vars, data, run.points, e);
  std::vector<std::pair<int, int>> rows;
  for (const DirectVariable& v : vars.vars) {
    if (v.sigma == 0) {
      for (int a = 0; a < v.n; ++a) rows.push_back({v.index(0, a), parent.block_offset(v.mu) + a});
    } else if (violate) {
      init.middleRows(v.offset, v.size()) += violation(v.size(), run.points);
    }
  }
  auto constraint = [&vars, e](const Mat& u, double h) {
    Mat c = Mat::Zero(u.rows(), u.cols());
    for (const DirectVariable& v : vars.vars) {
      if (v.sigma == 0) continue;
      const DirectVariable& lower = vars.vars[vars.find(v.mu, v.sigma - 1)];
      for (std::size_t t = 0; t < v.tuples.size(); ++t) {
        const Index& I = v.tuples[t];
        const Index rest(I.begin() + 1, I.end());
        const long q = sym_index_position(rest, vars.D);
        const Mat dl = periodic_d1(u.middleRows(lower.index(q, 0), v.n), h);
        c.middleRows(v.index(static_cast<long>(t), 0), v.n) =
            e(I[0]) * dl - u.middleRows(v.index(static_cast<long>(t), 0), v.n);
      }
    }
    return c;
  };
  return compare(parent, child, run, data, init, rows, constraint);
}

Discrepancy compare_parent_child(const ReducedSystem& red, const GridRun& run, const ModalData& data,
                                 bool violate) {
  const FTNSSystem& parent = red.parent;
  const RVec e = default_direction(run.direction, parent.D);
  const int n0 = red.n0(), D = parent.D;
  Mat init = Mat::Zero(red.sys.total_dim(), run.points);
  const Mat v = data.sample(run.points), dv = data.sample(run.points, 1);
  std::vector<std::pair<int, int>> rows;
  // Block 0 of the child: v0, d_1..d_D, v1. Later blocks are the parent's v^{mu+1}.
  init.topRows(n0) = v.topRows(n0);
  for (int a = 0; a < n0; ++a) rows.push_back({a, a});
  for (int i = 0; i < D; ++i) {
    init.middleRows(n0 + i * n0, n0) = e(i) * dv.topRows(n0);
    if (violate) init.middleRows(n0 + i * n0, n0) += violation(n0, run.points);
  }
  for (int mu = 1; mu < parent.N; ++mu) {
    const int child_off = mu == 1 ? red.v1_offset() : red.sys.block_offset(mu - 1);
    init.middleRows(child_off, parent.dims[mu]) = v.middleRows(parent.block_offset(mu), parent.dims[mu]);
    for (int a = 0; a < parent.dims[mu]; ++a) rows.push_back({child_off + a, parent.block_offset(mu) + a});
  }
  auto constraint = [n0, D, e](const Mat& u, double h) {
    Mat c(D * n0, u.cols());
    const Mat dv0 = periodic_d1(u.topRows(n0), h);
    for (int i = 0; i < D; ++i) c.middleRows(i * n0, n0) = e(i) * dv0 - u.middleRows(n0 + i * n0, n0);
    return c;
  };
  return compare(parent, red.sys, run, data, init, rows, constraint);
}

double convergence_order(double coarse_error, double fine_error) {
  return std::log2(coarse_error / fine_error);
}

SelfConvergence self_convergence(const FTNSSystem& sys, const GridRun& run, const ModalData& data) {
  std::vector<Mat> finals;
  for (int f : {1, 2, 4}) {
    GridRun r = run;
    r.points = run.points * f;
    r.dt = run.dt > 0.0 ? run.dt / f : 0.0;
    const GridSeries s = grid_evolve(sys, r, data.sample(r.points));
    if (s.unstable) throw TensorError("self_convergence: " + s.diagnostic);
    Mat coarse(s.final_state.rows(), run.points);
    for (int x = 0; x < run.points; ++x) coarse.col(x) = s.final_state.col(static_cast<long>(x) * f);
    finals.push_back(coarse);
  }
  const double h = kTwoPi / run.points;
  SelfConvergence out;
  out.diff_coarse = l2(finals[0] - finals[1], h);
  out.diff_fine = l2(finals[1] - finals[2], h);
  out.order = convergence_order(out.diff_coarse, out.diff_fine);
  return out;
}

}  // namespace ftns
