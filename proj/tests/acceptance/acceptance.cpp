// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails. argv[1] is the path of the ftns binary.

#include "../block_oracle.hpp"
#include "../test_util.hpp"

#include "ftns/direct_reduction.hpp"
#include "ftns/evolution.hpp"
#include "ftns/hyperbolicity.hpp"
#include "ftns/random_systems.hpp"
#include "ftns/reduction.hpp"
#include "ftns/symmetrizer.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace ftns;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kTolSpecialization = 1e-13;
constexpr double kRuntimeSpecialization = 1.0;
constexpr double kTolSpectrum = 1e-9;
constexpr double kRuntimeSpectrum = 30.0;
constexpr double kTolLift = 1e-10;
constexpr double kTolCommutator = 1e-10;
constexpr double kTolClosure = 1e-12;
constexpr double kTolFirstOrderHerm = 1e-10;
constexpr double kRuntimeSymmetric = 120.0;
constexpr double kTolConverse = 1e-12;
constexpr double kTolCubeRoot = 1e-12;
constexpr double kSlopeRel = 0.05;
constexpr double kTolWaveGrowth = 1e-9;
constexpr double kEnergyDrift = 1e-6;
constexpr double kOrderLo = 3.5, kOrderHi = 4.5;
constexpr double kRuntimeWave = 30.0;

struct Result {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// Strongly hyperbolic test systems, N cycling through 2, 3, 4.
std::vector<FTNSSystem> strong_systems(int count, unsigned long long seed) {
  Rng rng(seed);
  std::vector<FTNSSystem> out;
  for (int k = 0; k < count; ++k) {
    const int N = 2 + k % 3;
    std::vector<int> dims(N, 1);
    if (k % 2 == 1) dims[0] = 2;
    out.push_back(reverse_engineered_system(N, 3, dims, rng).sys);
  }
  return out;
}

// Largest distance in an optimal-by-greedy matching of two real-ish multisets.
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (const cplx& x : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](cplx p, cplx q) { return std::abs(p - x) < std::abs(q - x); });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

std::vector<cplx> eigenvalues(const Mat& P) {
  Eigen::ComplexEigenSolver<Mat> es(P, false);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

IterativeReductionParams partial_epsilon(const FTNSSystem& s, double lambda) {
  IterativeReductionParams p = partial_choice(s);
  p.Dbar = epsilon_choice(lambda, s.dims[0]);
  return p;
}

Result criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const FTNSSystem s2 = testutil::random_complex_system(2, 3, {1 + k % 2, 1}, rng);
    const FTNSSystem s3 = testutil::random_complex_system(3, 3, {1, 1 + k % 2, 1}, rng);
    const auto F2 = principal_matrix_full(s2), H2 = oracle::principal_n2(s2);
    const auto F3 = principal_matrix_full(s3), H3 = oracle::principal_n3(s3);
    for (int p = 0; p < 3; ++p) {
      worst = std::max(worst, oracle::rel_entrywise(F2[p], H2[p]));
      worst = std::max(worst, oracle::rel_entrywise(F3[p], H3[p]));
    }
    const DirectionSample dirs = random_sample(3, 50, 1000 + k);
    for (const RVec& d : dirs.directions) {
      worst = std::max(worst, oracle::rel_entrywise(principal_symbol(s2, d), oracle::symbol_from(H2, s2, d)));
      worst = std::max(worst, oracle::rel_entrywise(principal_symbol(s3, d), oracle::symbol_from(H3, s3, d)));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kTolSpecialization && t < kRuntimeSpecialization,
          "max rel " + num(worst) + ", " + num(t) + " s"};
}

Result criterion2(const std::vector<FTNSSystem>& systems) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    const FTNSSystem& s = systems[k];
    const DirectionSample dirs = random_sample(3, 50, 200 + k);
    const double lambda = choose_lambda(s, dirs);
    const ReducedSystem red = reduce_once(s, partial_epsilon(s, lambda));
    const int n0 = s.dims[0];
    for (const RVec& d : dirs.directions) {
      std::vector<cplx> expect = eigenvalues(principal_symbol(s, d));
      for (int a = 0; a < n0; ++a) {
        expect.push_back(lambda);
        expect.push_back(-lambda);
        expect.push_back(0.0);
      }
      worst = std::max(worst, multiset_distance(expect, eigenvalues(principal_symbol(red.sys, d))));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kTolSpectrum && t < kRuntimeSpectrum, "max mismatch " + num(worst) + ", " + num(t) + " s"};
}

Result criterion3(const std::vector<FTNSSystem>& systems) {
  double lift = 0.0, comm = 0.0;
  int not_strong = 0;
  double kmax = 0.0;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    const DirectionSample dirs = random_sample(3, 50, 300 + k);
    const auto levels = iterate_to_first_order(systems[k], ReductionStrategy{}, dirs);
    for (const auto& lv : levels) {
      const StrongHypReport r = classify_strong(lv.red.sys, dirs);
      if (r.verdict != Verdict::strong || !std::isfinite(r.M_estimate)) ++not_strong;
      for (const RVec& d : dirs.directions) {
        const Decomposition21 dec = decompose_21(lv.red, d);
        const Eigenstructure es = eigenstructure(dec.PN);
        const LiftResult L = lift_diagonalizer(es.T, es.eigenvalues, dec);
        lift = std::max(lift, L.residual);
        kmax = std::max(kmax, L.norm_T * L.norm_T_inv);
        // Lower right block of H(s) for the reduced symbol against the parent symbol.
        const Mat Hr = build_Hs(dec.rotated, eigenstructure(dec.rotated));
        const long m = dec.PN.rows();
        const Mat H22 = Hr.bottomRightCorner(m, m);
        const Mat P = principal_symbol(lv.red.parent, d);
        const double res = (H22 * P - P.adjoint() * H22).norm() / (H22.norm() * std::max(1.0, P.norm()));
        comm = std::max(comm, res);
        if (min_hermitian_eigenvalue(H22) <= 0.0) comm = std::max(comm, 1.0);
      }
    }
  }
  const bool ok = not_strong == 0 && lift <= kTolLift && comm <= kTolCommutator && std::isfinite(kmax);
  return {ok, "non-strong levels " + std::to_string(not_strong) + ", lift residual " + num(lift) +
                  ", max cond(T) " + num(kmax) + ", block commutator " + num(comm)};
}

Result criterion4() {
  Rng rng(404);
  double it = 0.0, dr = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int N = 2 + k % 3;
    std::vector<int> dims(N, 1);
    if (k % 4 == 1) dims[0] = 2;
    const FTNSSystem s = testutil::random_complex_system(N, 3, dims, rng);
    it = std::max(it, constraint_evolution(reduce_once(s, testutil::random_iterative_params(s, rng))).max_residual());
    dr = std::max(dr, direct_constraint_evolution(s, random_direct_params(s, rng)).max_residual());
  }
  return {it <= kTolClosure && dr <= kTolClosure, "iterative " + num(it) + ", direct " + num(dr)};
}

Result criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(505);
  int failures = 0;
  double herm = 0.0;
  bool roundtrip = true;
  for (int N = 2; N <= 4; ++N)
    for (int k = 0; k < 10; ++k) {
      const ReverseEngineered re = reverse_engineered_system(N, 3, std::vector<int>(N, 1), rng);
      const JSolution j = solve_J(re.sys, SymCandidate::from_gram(N, re.G));
      if (!j.ok) {
        ++failures;
        continue;
      }
      for (const Mat& A : first_order_matrices(j.ft1s)) {
        const Mat T = j.H1 * A;
        herm = std::max(herm, (T - T.adjoint()).norm() / (j.H1.norm() * std::max(A.norm(), 1e-300)));
      }
      roundtrip = roundtrip && (extract_HN_from_H1(j.H1, j.params).G - re.G).norm() == 0.0;
    }
  const double t = seconds_since(t0);
  return {failures == 0 && herm <= kTolFirstOrderHerm && roundtrip && t < kRuntimeSymmetric,
          "solve_J failures " + std::to_string(failures) + ", max relative defect " + num(herm) +
              ", round trip " + (roundtrip ? "exact" : "inexact") + ", " + num(t) + " s"};
}

Result criterion6() {
  Rng rng(606);
  double worst = 0.0;
  int failures = 0;
  for (int k = 0; k < 10; ++k) {
    const int N = 2 + k % 2;
    const ReverseEngineered re = reverse_engineered_system(N, 3, std::vector<int>(N, 1), rng);
    const JSolution j = solve_J(re.sys, SymCandidate::from_gram(N, re.G));
    if (!j.ok) {
      ++failures;
      continue;
    }
    const std::vector<Mat> A1 = first_order_matrices(j.ft1s);
    // Random positive definite form projected onto the first order candidates,
    // shifted along H1 until it is positive definite.
    Mat H = project_first_order_candidate(A1, random_hpd(j.H1.rows(), rng));
    const double lo = min_hermitian_eigenvalue(H);
    if (lo <= 0.0) H += (1.0 - lo / min_hermitian_eigenvalue(j.H1)) * j.H1;
    double herm = 0.0;
    for (const Mat& A : A1) herm = std::max(herm, ((H * A) - (H * A).adjoint()).norm());
    if (min_hermitian_eigenvalue(H) <= 0.0 || herm > 1e-10 * H.norm()) ++failures;
    const SymCandidate H22 = extract_HN_from_H1(H, j.params);
    worst = std::max(worst, is_candidate(re.sys, H22).residual);
  }
  return {failures == 0 && worst <= kTolConverse,
          "setup failures " + std::to_string(failures) + ", max candidate residual " + num(worst)};
}

Result criterion7() {
  const FTNSSystem c = companion_chain(3);
  const DirectionSample dirs = default_sample(3, 2, 20, 707);
  const StrongHypReport r = classify_strong(c, dirs);
  // lambda^3 = alpha with alpha = (e.s)^3: lambda = cbrt(alpha) times the cube roots of unity.
  double root_err = 0.0;
  for (const auto& rec : r.records) {
    const double a = std::cbrt(std::pow(rec.s(2), 3));
    std::vector<cplx> expect;
    for (int k = 0; k < 3; ++k) expect.push_back(a * std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0));
    std::vector<cplx> got(rec.eigenvalues.data(), rec.eigenvalues.data() + rec.eigenvalues.size());
    root_err = std::max(root_err, multiset_distance(expect, got));
  }
  const CandidateSolution sol = solve_candidate(c);
  double slope_err = 0.0;
  Rng rng(77);
  for (int k = 0; k < 4; ++k) {
    FourierModeRun run;
    run.s = k == 0 ? testutil::unit(3, 2) : random_unit_vector(3, rng);
    const double expect = std::abs(std::pow(run.s(2), 3.0));
    const double im = std::cbrt(expect) * std::sqrt(3.0) / 2.0 * run.t_final;
    const GrowthTable g = fourier_evolve(c, run);
    slope_err = std::max(slope_err, std::abs(g.slope - im) / im);
  }
  const bool ok = r.verdict == Verdict::not_hyperbolic && root_err <= kTolCubeRoot &&
                  sol.status != CandidateSolution::symmetric_hyperbolic && slope_err <= kSlopeRel;
  return {ok, "verdict " + to_string(r.verdict) + ", cube root error " + num(root_err) + ", symmetrizer " +
                  to_string(sol.status) + ", slope rel error " + num(slope_err)};
}

double wave_error(int points) {
  const int k = 2;
  const double t = 1.0;
  ModalData d;
  d.wavenumbers = {k, -k};
  d.coeffs = Mat::Zero(2, 2);
  d.coeffs(0, 0) = 1.0 / cplx(0.0, 2.0);
  d.coeffs(0, 1) = -1.0 / cplx(0.0, 2.0);
  GridRun run;
  run.points = points;
  run.t_final = t;
  const GridSeries g = grid_evolve(wave_system(3), run, d.sample(points));
  const double h = 2.0 * std::numbers::pi / points;
  Mat exact(2, points);
  for (int x = 0; x < points; ++x) {
    exact(0, x) = std::sin(k * h * x) * std::cos(k * t);
    exact(1, x) = -k * std::sin(k * h * x) * std::sin(k * t);
  }
  return std::sqrt(h) * (g.final_state - exact).norm();
}

Result criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const FTNSSystem w = wave_system(3);
  double growth = 0.0;
  for (const RVec& s : random_sample(3, 20, 808).directions) {
    FourierModeRun run;
    run.s = s;
    for (const auto& row : fourier_evolve(w, run).rows) growth = std::max(growth, std::abs(row.growth() - 1.0));
  }
  Rng rng(88);
  GridRun run;
  run.points = 256;
  run.t_final = 1.0;
  run.record_every = 1;
  const GridSeries g = grid_evolve(w, run, gaussian_bump(2, 0.5, 32, rng).sample(256));
  double drift = 0.0;
  for (double e : g.energy) drift = std::max(drift, std::abs(e - g.energy.front()) / g.energy.front());
  const double order = convergence_order(wave_error(128), wave_error(256));
  const double t = seconds_since(t0);
  const bool ok = growth <= kTolWaveGrowth && drift <= kEnergyDrift && order >= kOrderLo && order <= kOrderHi &&
                  !g.unstable && t < kRuntimeWave;
  return {ok, "growth error " + num(growth) + ", energy drift " + num(drift) + ", order " + num(order) + ", " +
                  num(t) + " s"};
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result criterion9(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const fs::path base = fs::temp_directory_path() / ("ftns_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  int files = 0, differ = 0, bad_exit = 0;
  std::vector<fs::path> dirs{base / "a", base / "b"};
  for (const fs::path& d : dirs) {
    fs::create_directories(d);
    const std::string out = " --out " + d.string();
    const std::string sample = " --sample random --count 60 --seed 9";
    for (const char* name : {"wave", "companion", "random"})
      if (run_cli(cli, std::string("example ") + name + " --seed 4" + out) != 0) ++bad_exit;
    const std::string w = (d / "wave.json").string(), c = (d / "companion.json").string(),
                      r = (d / "random.json").string();
    run_cli(cli, "analyze " + w + " " + c + " " + r + sample + out);
    run_cli(cli, "reduce " + r + " --first-order" + sample + out);
    run_cli(cli, "reduce " + r + " --direct" + sample + out);
    run_cli(cli, "symmetrize " + r + " --seed 9" + out);
    run_cli(cli, "symmetrize " + c + " --seed 9" + out);
    run_cli(cli, "evolve " + c + " --direction 0,0,1" + out);
    run_cli(cli, "evolve " + w + " --mode grid --points 64 --data band --seed 9" + out);
    run_cli(cli, "report " + w + " " + c + " " + r + sample + out);
  }
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path other = dirs[1] / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  for (const auto& e : fs::directory_iterator(dirs[1]))
    if (!fs::exists(dirs[0] / e.path().filename())) ++differ;
  fs::remove_all(base);
  return {bad_exit == 0 && files > 10 && differ == 0,
          std::to_string(files) + " files compared, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<FTNSSystem> systems = strong_systems(20, 2024);
  std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"1 specialization agreement", [] { return criterion1(); }},
      {"2 spectrum union", [&] { return criterion2(systems); }},
      {"3 strong hyperbolicity equivalence", [&] { return criterion3(systems); }},
      {"4 constraint closure", [] { return criterion4(); }},
      {"5 symmetric hyperbolicity N <= 4", [] { return criterion5(); }},
      {"6 converse symmetric direction", [] { return criterion6(); }},
      {"7 negative control", [] { return criterion7(); }},
      {"8 wave well-posedness", [] { return criterion8(); }},
      {"9 determinism", [&] { return criterion9(cli); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %s: %s\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
