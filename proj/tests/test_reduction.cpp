#include "test_util.hpp"

#include "ftns/random_systems.hpp"
#include "ftns/reduction.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ftns;
using namespace testutil;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Sorted real parts; the spectra compared here are real.
std::vector<double> real_spectrum(const Mat& P) {
  Eigen::ComplexEigenSolver<Mat> es(P, false);
  std::vector<double> out;
  for (long k = 0; k < es.eigenvalues().size(); ++k) out.push_back(es.eigenvalues()(k).real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("zero parameters keep the parent symbol in the lower right block") {
  const FTNSSystem c = companion_chain(3);
  const ReducedSystem red = reduce_once(c, IterativeReductionParams::zero(c));
  CHECK(validate(red.sys).empty());
  CHECK(red.sys.N == 2);
  CHECK(red.sys.dims == std::vector<int>{5, 1});
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const RVec s = random_unit_vector(3, rng);
    CHECK(max_abs(decompose_21(red, s).PN - principal_symbol(c, s)) < 1e-14);
  }
}

TEST_CASE("wave reduced with zero parameters") {
  const FTNSSystem w = wave_system(3);
  const ReducedSystem red = reduce_once(w, IterativeReductionParams::zero(w));
  CHECK(red.sys.N == 1);
  CHECK(red.sys.total_dim() == 5);
  Rng rng(2);
  const auto ev = real_spectrum(principal_symbol(red.sys, random_unit_vector(3, rng)));
  const std::vector<double> expect{-1.0, 0.0, 0.0, 0.0, 1.0};
  for (int k = 0; k < 5; ++k) CHECK(std::abs(ev[k] - expect[k]) < 1e-12);
}

TEST_CASE("v0 row of a zero parameter reduction carries only A00") {
  Rng rng(3);
  const FTNSSystem s = random_complex_system(3, 3, {2, 1, 1}, rng);
  const ReducedSystem red = reduce_once(s, IterativeReductionParams::zero(s));
  const int n0 = 2;
  const MultiIndexTensor* A = red.sys.A_find(0, 0);
  REQUIRE(A);
  for (int i = 0; i < 3; ++i) {
    const Mat row = A->at({i}).topRows(n0);
    CHECK(max_abs(row.leftCols(n0) - s.A_find(0, 0)->at({i})) == 0.0);
    CHECK(max_abs(row.rightCols(row.cols() - n0)) == 0.0);
  }
}

TEST_CASE("partial choice") {
  FTNSSystem s = FTNSSystem::zero(3, 3, {1, 1, 1});
  s.B_ref(0, 1, 0).at({}) = Mat::Constant(1, 1, 0.7);
  const IterativeReductionParams p = partial_choice(s);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) CHECK(p.D.at({i, k})(0, 0) == cplx(i == k ? -0.7 : 0.0));

  Rng rng(4);
  FTNSSystem t = random_complex_system(3, 3, {1, 1, 1}, rng);
  t.B.clear();
  const IterativeReductionParams q = partial_choice(t);
  CHECK(max_abs(q.D0.at({1}) + t.A_find(0, 0)->at({1})) == 0.0);
  CHECK(q.D.is_zero());
  CHECK(q.Dbar.is_zero());
  CHECK(q.Dbar0.is_zero());
  for (int mu = 1; mu < 3; ++mu) CHECK(q.Dmu[mu].is_zero());

  const FTNSSystem u = random_complex_system(3, 3, {1, 2, 1}, rng);
  const ReducedSystem red = reduce_once(u, partial_choice(u));
  for (int k = 0; k < 50; ++k) {
    const Decomposition21 d = decompose_21(red, random_unit_vector(3, rng));
    CHECK(max_abs(d.rotated.topRows(1)) < 1e-14);
    CHECK(max_abs(d.rotated.leftCols(1)) < 1e-14);
    CHECK(d.triangular_defect < 1e-14);
  }
}

TEST_CASE("epsilon choice gives X eigenvalues +-lambda") {
  const MultiIndexTensor e = epsilon_choice(2.0);
  CHECK(max_diff(symmetrize(e, {1, 2}), MultiIndexTensor(3, 3, 1, 1)) == 0.0);
  Rng rng(5);
  const FTNSSystem w = wave_system(3);
  IterativeReductionParams p = partial_choice(w);
  p.Dbar = e;
  const ReducedSystem red = reduce_once(w, p);
  for (int k = 0; k < 20; ++k) {
    const auto ev = real_spectrum(decompose_21(red, random_unit_vector(3, rng)).X);
    REQUIRE(ev.size() == 2);
    CHECK(std::abs(ev[0] + 2.0) < 1e-12);
    CHECK(std::abs(ev[1] - 2.0) < 1e-12);
  }
  p.Dbar = epsilon_choice(0.0);
  CHECK(max_abs(decompose_21(reduce_once(w, p), random_unit_vector(3, rng)).X) == 0.0);
  CHECK_THROWS_AS(levi_civita(4), TensorError);
}

TEST_CASE("choose_lambda") {
  const DirectionSample sample = default_sample(3, 1, 10, 1);
  CHECK(choose_lambda(FTNSSystem::zero(2, 3, {1, 1}), sample) == 1.0);
  CHECK(choose_lambda(wave_system(3), sample) == doctest::Approx(2.0).epsilon(1e-14));
  Rng rng(6);
  const FTNSSystem s = random_complex_system(2, 3, {1, 1}, rng);
  const double a = choose_lambda(s, sample) - 1.0;
  const double b = choose_lambda(s.scaled_principal(10.0), sample) - 1.0;
  CHECK(b == doctest::Approx(10.0 * a).epsilon(1e-12));
}

TEST_CASE("projector identities") {
  Rng rng(7);
  const FTNSSystem w = wave_system(3);
  const ReducedSystem red = reduce_once(w, IterativeReductionParams::zero(w));
  for (int k = 0; k < 10; ++k) {
    const RVec s = random_unit_vector(3, rng);
    const Decomposition21 d = decompose_21(red, s);
    CHECK((d.q * s).norm() < 1e-14);
    CHECK((d.q * d.q - d.q).norm() < 1e-14);
    CHECK((d.frame.transpose() * s).norm() < 1e-14);
    CHECK((d.frame.transpose() * d.frame - RMat::Identity(2, 2)).norm() < 1e-14);
    CHECK(max_abs(d.X) == 0.0);
  }
}

TEST_CASE("lifted diagonalizer of the reduced wave system") {
  const FTNSSystem w = wave_system(3);
  IterativeReductionParams p = partial_choice(w);
  const double lambda = 2.0;
  p.Dbar = epsilon_choice(lambda);
  const ReducedSystem red = reduce_once(w, p);
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const RVec s = random_unit_vector(3, rng);
    const Decomposition21 d = decompose_21(red, s);
    const Eigenstructure es = eigenstructure(d.PN);
    const LiftResult L = lift_diagonalizer(es.T, es.eigenvalues, d);
    CHECK(L.residual <= 1e-10);
    CHECK_FALSE(L.resonant);
    std::vector<double> ev;
    for (long j = 0; j < L.lambda.size(); ++j) ev.push_back(L.lambda(j).real());
    std::sort(ev.begin(), ev.end());
    const std::vector<double> expect{-2.0, -1.0, 0.0, 1.0, 2.0};
    for (int j = 0; j < 5; ++j) CHECK(std::abs(ev[j] - expect[j]) < 1e-12);
  }
}

TEST_CASE("lift for a diagonal P_N") {
  // Scalar N = 2 system whose symbol is already diagonal: advection.
  RVec c(3);
  c << 0.2, 0.1, -0.3;
  const FTNSSystem a = advection_system(2, c, {1, 1});
  IterativeReductionParams p = partial_choice(a);
  p.Dbar = epsilon_choice(3.0);
  const ReducedSystem red = reduce_once(a, p);
  Rng rng(9);
  const RVec s = random_unit_vector(3, rng);
  const Decomposition21 d = decompose_21(red, s);
  CHECK(max_abs(d.PN - Mat::Identity(2, 2) * cplx(c.dot(s))) < 1e-14);
  const Eigenstructure es = eigenstructure(d.PN);
  const LiftResult L = lift_diagonalizer(es.T, es.eigenvalues, d);
  CHECK(L.residual <= 1e-12);
  CHECK(L.norm_T * L.norm_T_inv >= 1.0 - 1e-12);
}

TEST_CASE("random strongly hyperbolic system lifts with small residual") {
  Rng rng(10);
  const FTNSSystem s = reverse_engineered_system(2, 3, {2, 1}, rng).sys;
  const DirectionSample sample = random_sample(3, 20, 10);
  IterativeReductionParams p = partial_choice(s);
  p.Dbar = epsilon_choice(choose_lambda(s, sample), 2);
  const ReducedSystem red = reduce_once(s, p);
  for (const RVec& dir : sample.directions) {
    const Decomposition21 d = decompose_21(red, dir);
    const Eigenstructure es = eigenstructure(d.PN);
    CHECK(lift_diagonalizer(es.T, es.eigenvalues, d).residual <= 1e-10);
  }
}

TEST_CASE("iterate to first order") {
  const DirectionSample sample = default_sample(3, 1, 10, 11);
  const auto w = iterate_to_first_order(wave_system(3), ReductionStrategy{}, sample);
  REQUIRE(w.size() == 1);
  CHECK(w[0].red.sys.total_dim() == 5);
  CHECK(w[0].lambda == doctest::Approx(2.0).epsilon(1e-12));

  const FTNSSystem c = companion_chain(3);
  const auto levels = iterate_to_first_order(c, ReductionStrategy{}, sample);
  REQUIRE(levels.size() == 2);
  // dims recurrence: (n0, n1, ..., n_{N-1}) -> (n0 + D n0 + n1, n2, ...)
  std::vector<int> dims = c.dims;
  for (const auto& lv : levels) {
    std::vector<int> next{dims[0] + 3 * dims[0] + dims[1]};
    next.insert(next.end(), dims.begin() + 2, dims.end());
    CHECK(lv.red.sys.dims == next);
    dims = next;
  }
  CHECK(dims == std::vector<int>{21});

  Rng rng(11);
  const FTNSSystem r = reverse_engineered_system(3, 3, {1, 1, 1}, rng).sys;
  for (const auto& lv : iterate_to_first_order(r, ReductionStrategy{}, sample))
    CHECK(classify_strong(lv.red.sys, sample).verdict == Verdict::strong);

  ReductionStrategy z;
  z.kind = ReductionStrategy::zero;
  CHECK(iterate_to_first_order(c, z, sample, 2).size() == 1);
  ReductionStrategy f;
  f.kind = ReductionStrategy::explicit_params;
  CHECK_THROWS_AS(iterate_to_first_order(c, f, sample), TensorError);
}

TEST_CASE("constraint evolution closes") {
  Rng rng(12);
  for (int N = 2; N <= 4; ++N) {
    const FTNSSystem s = random_complex_system(N, 3, std::vector<int>(N, 1), rng);
    const ClosureReport z = constraint_evolution(reduce_once(s, IterativeReductionParams::zero(s)));
    CHECK(z.max_residual() <= 1e-12);
    const ClosureReport r = constraint_evolution(reduce_once(s, random_iterative_params(s, rng)));
    CHECK(r.max_residual() <= 1e-12);
  }
}

TEST_CASE("closure check detects a term that is not a constraint addition") {
  Rng rng(13);
  const FTNSSystem s = random_complex_system(2, 3, {1, 1}, rng);
  ReducedSystem red = reduce_once(s, partial_choice(s));
  // d_1 picks up d_2 v1, which is not a multiple of any constraint.
  MultiIndexTensor& A = red.sys.A_ref(0, 0);
  A.at({1})(1, 4) += 1.0;
  const ClosureReport r = constraint_evolution(red);
  CHECK(r.span_residual > 1e-3);
  CHECK(r.explicit_residual > 1e-3);
}

TEST_CASE("redundant constraints are derivatives of the pair constraints") {
  for (int sigma = 2; sigma <= 4; ++sigma) CHECK(redundancy_residual(3, sigma) <= 1e-12);
}

TEST_CASE("parameter checks and file round trip") {
  Rng rng(14);
  const FTNSSystem s = random_complex_system(3, 3, {1, 2, 1}, rng);
  IterativeReductionParams p = random_iterative_params(s, rng);
  CHECK(p.check(s).empty());
  const IterativeReductionParams back = parse_params(serialize_params(p), s);
  CHECK(back.check(s).empty());
  CHECK(max_diff(back.Dbar, p.Dbar) == 0.0);
  CHECK(max_diff(back.Dbarmu[2], p.Dbarmu[2]) == 0.0);

  p.Dbar.at({0, 1, 2}) += Mat::Constant(1, 1, 1.0);
  const auto v = p.check(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].where == "Dbar");
  p.Dmu[1] = MultiIndexTensor(3, 2, 2, 1);
  CHECK_FALSE(p.check(s).empty());
}
