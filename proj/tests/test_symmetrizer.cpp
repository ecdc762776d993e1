#include "test_util.hpp"

#include "ftns/hyperbolicity.hpp"
#include "ftns/random_systems.hpp"
#include "ftns/symmetrizer.hpp"

#include <doctest.h>

using namespace ftns;
using namespace testutil;

namespace {

double herm_defect(const Mat& m) { return (m - m.adjoint()).norm(); }

// Sampled form of the condition: R(s)^dagger G R(s) P(s) Hermitian.
double sampled_defect(const FTNSSystem& sys, const Mat& G, const RVec& s) {
  const StateBasis b(sys.N, sys.D, sys.dims, true);
  const Mat R = b.direction_lift(s);
  return herm_defect(R.adjoint() * G * R * principal_symbol(sys, s));
}

FTNSSystem fuzz_lower(FTNSSystem s, Rng& rng) {
  for (int mu = 0; mu < s.N; ++mu)
    for (int nu = 0; nu <= mu; ++nu)
      for (int rho = 1; rho <= mu - nu + 1; ++rho) {
        MultiIndexTensor& b = s.B_ref(mu, rho, nu);
        for (long f = 0; f < b.size(); ++f) b.flat(f) = random_complex(b.rows(), b.cols(), rng);
      }
  return s;
}

}  // namespace

TEST_CASE("candidate examples") {
  const FTNSSystem w = wave_system(3);
  CHECK(is_candidate(w, SymCandidate::from_gram(2, Mat::Identity(4, 4))).ok);

  Rng rng(1);
  const FTNSSystem z = FTNSSystem::zero(3, 3, {1, 1, 1});
  const int n = principal_matrix(z).basis.size();
  CHECK(is_candidate(z, SymCandidate::from_gram(3, random_hpd(n, rng))).ok);

  const FTNSSystem c = companion_chain(3);
  const int m = principal_matrix(c).basis.size();
  const CandidateCheck r = is_candidate(c, SymCandidate::from_gram(3, Mat::Identity(m, m)));
  CHECK_FALSE(r.ok);
  CHECK(r.residual > 0.1);
}

TEST_CASE("candidates symmetrize the sampled symbols") {
  Rng rng(2);
  for (int N = 2; N <= 3; ++N) {
    const ReverseEngineered re = reverse_engineered_system(N, 3, std::vector<int>(N, 1), rng);
    REQUIRE(is_candidate(re.sys, SymCandidate::from_gram(N, re.G)).ok);
    for (int k = 0; k < 200; ++k) {
      const RVec s = random_unit_vector(3, rng);
      CHECK(sampled_defect(re.sys, re.G, s) <= 1e-12 * (1.0 + re.G.norm()));
    }
  }
  // The companion chain with the identity fails on the sample.
  const FTNSSystem c = companion_chain(3);
  const int m = principal_matrix(c).basis.size();
  double worst = 0.0;
  for (int k = 0; k < 200; ++k)
    worst = std::max(worst, sampled_defect(c, Mat::Identity(m, m), random_unit_vector(3, rng)));
  CHECK(worst > 0.1);
}

TEST_CASE("V is anti-Hermitian and vanishes in symmetrized form for candidates") {
  Rng rng(3);
  const ReverseEngineered re = reverse_engineered_system(3, 3, {1, 1, 1}, rng);
  const PrincipalObjects po = principal_matrix(re.sys);
  const auto V = compute_V(po, re.G);
  const auto T = compute_T(po, re.G);
  for (int p = 0; p < 3; ++p) {
    CHECK((V[p] + V[p].adjoint()).norm() < 1e-14);
    CHECK((V[p] - (T[p] - T[p].adjoint())).norm() < 1e-14);
  }
  CHECK(candidate_defect(po, re.G).norm() < 1e-12 * (1.0 + re.G.norm()));
}

TEST_CASE("candidate defect is linear in G") {
  Rng rng(4);
  const PrincipalObjects po = principal_matrix(random_complex_system(3, 3, {1, 1, 1}, rng));
  const int n = po.basis.size();
  const Mat a = random_hpd(n, rng), b = random_hpd(n, rng);
  const Vec lhs = candidate_defect(po, 2.0 * a - 0.5 * b);
  const Vec rhs = 2.0 * candidate_defect(po, a) - 0.5 * candidate_defect(po, b);
  CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
}

TEST_CASE("lower order terms do not affect candidacy") {
  Rng rng(5);
  const ReverseEngineered re = reverse_engineered_system(2, 3, {1, 2}, rng);
  const SymCandidate H = SymCandidate::from_gram(2, re.G);
  CHECK(is_candidate(fuzz_lower(re.sys, rng), H).ok);
  const FTNSSystem c = companion_chain(3);
  const int m = principal_matrix(c).basis.size();
  const SymCandidate I = SymCandidate::from_gram(3, Mat::Identity(m, m));
  CHECK(is_candidate(c, I).residual == doctest::Approx(is_candidate(fuzz_lower(c, rng), I).residual));
}

TEST_CASE("hermitian coordinates round trip") {
  Rng rng(6);
  const Mat H = random_hpd(4, rng);
  const RVec x = hermitian_coords(H);
  CHECK(x.size() == 16);
  CHECK((hermitian_from_coords(x, 4) - H).norm() < 1e-14);
}

TEST_CASE("component and Gram forms agree") {
  Rng rng(7);
  const StateBasis b(3, 3, {1, 1, 1}, true);
  const Mat Hc = random_hpd(b.size(), rng);
  const SymCandidate H = SymCandidate::from_components(b, Hc);
  const RVec m = b.multiplicities();
  CHECK((H.G - m.cast<cplx>().asDiagonal() * Hc * m.cast<cplx>().asDiagonal()).norm() < 1e-13);
  CHECK((H.components(b) - Hc).norm() < 1e-13);
}

TEST_CASE("solve_candidate") {
  const CandidateSolution w = solve_candidate(wave_system(3));
  CHECK(w.status == CandidateSolution::symmetric_hyperbolic);
  CHECK(w.H.min_eigenvalue() > 0.0);
  CHECK(is_candidate(wave_system(3), w.H).ok);

  const CandidateSolution c = solve_candidate(companion_chain(3));
  CHECK(c.status != CandidateSolution::symmetric_hyperbolic);
  CHECK(c.min_eigenvalue <= 0.0);

  Rng rng(8);
  for (int N = 2; N <= 3; ++N) {
    const ReverseEngineered re = reverse_engineered_system(N, 3, std::vector<int>(N, 1), rng);
    const CandidateSolution s = solve_candidate(re.sys);
    CHECK(s.status == CandidateSolution::symmetric_hyperbolic);
    CHECK(s.nullity >= 1);
    CHECK(is_candidate(re.sys, s.H).ok);
  }
}

TEST_CASE("solve_J on the wave system") {
  const FTNSSystem w = wave_system(3);
  const JSolution j = solve_J(w, SymCandidate::from_gram(2, Mat::Identity(4, 4)));
  REQUIRE(j.ok);
  CHECK(j.herm_residual <= 1e-10);
  CHECK(j.lin_residual <= 1e-10);
  CHECK(classify_strong(j.ft1s, default_sample(3, 1, 10, 1)).verdict == Verdict::strong);
  for (int p = 0; p < 3; ++p) CHECK((j.J[p] - j.H1.bottomRightCorner(4, 4) * j.CDbar[p]).norm() < 1e-12);
}

TEST_CASE("solve_J on reverse-engineered systems") {
  Rng rng(9);
  for (int N = 2; N <= 3; ++N)
    for (int trial = 0; trial < 3; ++trial) {
      const ReverseEngineered re = reverse_engineered_system(N, 3, std::vector<int>(N, 1), rng);
      const JSolution j = solve_J(re.sys, SymCandidate::from_gram(N, re.G));
      REQUIRE(j.ok);
      CHECK(j.herm_residual <= 1e-10);
      CHECK(j.v_sym_residual <= 1e-10);
      CHECK(j.params.check().empty());
      CHECK(direct_constraint_evolution(re.sys, j.params).max_residual() <= 1e-10);
      const FTNSSystem rebuilt = build_direct_ft1s(re.sys, j.params);
      CHECK((rebuilt.A_find(0, 0)->at({1}) - j.ft1s.A_find(0, 0)->at({1})).norm() == 0.0);
    }
}

TEST_CASE("permutation ansatz for N = 3") {
  Rng rng(10);
  const ReverseEngineered re = reverse_engineered_system(3, 3, {1, 1, 1}, rng);
  const SymCandidate H = SymCandidate::from_gram(3, re.G);
  const JSolution perm = solve_J(re.sys, H, JMode::permutation_ansatz);
  const JSolution ln = solve_J(re.sys, H, JMode::least_norm);
  REQUIRE(ln.ok);
  REQUIRE(perm.ok);
  CHECK(perm.herm_residual <= 1e-10);
  CHECK(direct_constraint_evolution(re.sys, perm.params).max_residual() <= 1e-10);
}

TEST_CASE("solve_J refuses a non-candidate") {
  const FTNSSystem c = companion_chain(3);
  const int m = principal_matrix(c).basis.size();
  const JSolution j = solve_J(c, SymCandidate::from_gram(3, Mat::Identity(m, m)));
  CHECK_FALSE(j.ok);
  CHECK(j.v_sym_residual > 1e-3);
}

TEST_CASE("H1 block structure and extraction") {
  Rng rng(11);
  const FTNSSystem s = random_complex_system(3, 3, {1, 2, 1}, rng);
  const DirectReductionVars v = DirectReductionVars::zero(s);
  const Mat G = random_hpd(v.second_size(), rng);
  const Mat H1 = build_H1(v, G);
  CHECK(H1.rows() == v.size());
  CHECK((extract_HN_from_H1(H1, v).G - G).norm() == 0.0);
  CHECK(H1.topRightCorner(v.second_offset(), v.second_size()).norm() == 0.0);
  CHECK(min_hermitian_eigenvalue(H1) > 0.0);
}

TEST_CASE("energy density") {
  Vec u(4);
  u << 1.0, 2.0, cplx(0.0, 3.0), 4.0;
  CHECK(energy_density(u, SymCandidate::from_gram(2, Mat::Identity(4, 4))) == doctest::Approx(30.0));
  Mat G = Mat::Identity(4, 4);
  G(0, 0) = 2.0;
  CHECK(energy_density(u, SymCandidate::from_gram(2, G)) == doctest::Approx(31.0));
}

TEST_CASE("first order candidate projection") {
  Rng rng(12);
  std::vector<Mat> Ap;
  for (int p = 0; p < 3; ++p) {
    const Mat r = random_real(3, 3, rng).cast<cplx>();
    Ap.push_back(r + r.transpose());
  }
  const Mat I = Mat::Identity(3, 3);
  CHECK((project_first_order_candidate(Ap, I) - I).norm() < 1e-12);
  const Mat H = random_hpd(3, rng);
  const Mat P = project_first_order_candidate(Ap, H);
  for (const Mat& a : Ap) CHECK(herm_defect(P * a) < 1e-12);
  CHECK(first_order_candidate_space(Ap).cols() >= 1);
}
