#include "block_oracle.hpp"
#include "test_util.hpp"

#include "ftns/direct_reduction.hpp"
#include "ftns/random_systems.hpp"

#include <doctest.h>

using namespace ftns;
using namespace testutil;

namespace {

// Compressed principal blocks from the full-basis hand oracle: rows taken at a
// representative ordering, columns summed over all orderings of the tuple.
std::vector<Mat> compress_oracle(const FTNSSystem& s, const std::vector<Mat>& F) {
  const StateBasis full(s.N, s.D, s.dims, false), comp(s.N, s.D, s.dims, true);
  std::vector<Mat> out;
  for (const Mat& f : F) {
    Mat c = Mat::Zero(comp.size(), comp.size());
    for (int mu = 0; mu < s.N; ++mu)
      for (std::size_t t = 0; t < comp.tuples(mu).size(); ++t)
        for (int a = 0; a < s.dims[mu]; ++a) {
          const int r = comp.index(mu, static_cast<long>(t), a);
          const int rf = full.index(mu, full.tuple_position(mu, comp.tuples(mu)[t]), a);
          for (int nu = 0; nu < s.N; ++nu)
            for (std::size_t u = 0; u < full.tuples(nu).size(); ++u)
              for (int b = 0; b < s.dims[nu]; ++b) {
                const int cc = comp.index(nu, comp.tuple_position(nu, full.tuples(nu)[u]), b);
                c(r, cc) += f(rf, full.index(nu, static_cast<long>(u), b));
              }
        }
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("variable catalogue") {
  const DirectReductionVars v2 = DirectReductionVars::zero(wave_system(3));
  // (u), then (d^0 = d_i u, v)
  CHECK(v2.vars.size() == 3);
  CHECK(v2.size() == 1 + 3 + 1);
  CHECK(v2.second_offset() == 1);
  CHECK(v2.labels().size() == 5);

  const DirectReductionVars v3 = DirectReductionVars::zero(FTNSSystem::zero(3, 3, {1, 2, 1}));
  CHECK(v3.size() == (1 + 3) + 2 + (6 + 3 * 2 + 1));
  CHECK(v3.second_size() == 13);
  CHECK(v3.find(0, 1) == 1);
  CHECK(v3.find(2, 1) == -1);
  CHECK(v3.constraint_catalogue().size() == 2 * 3);
}

TEST_CASE("zero parameters: hand oracle for N = 3") {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const FTNSSystem s = random_complex_system(3, 3, {1, 1, 1}, rng);
    const DirectReductionVars v = DirectReductionVars::zero(s);
    const FTNSSystem f = build_direct_ft1s(s, v);
    REQUIRE(f.N == 1);
    REQUIRE(f.total_dim() == v.size());
    const int so = v.second_offset(), ss = v.second_size();
    const auto expect = compress_oracle(s, oracle::principal_n3(s));
    const MultiIndexTensor& A = *f.A_find(0, 0);
    for (int p = 0; p < 3; ++p) {
      const Mat& a = A.at({p});
      // First group variables never appear under a derivative.
      CHECK(oracle::max_abs(a.topRows(so)) == 0.0);
      CHECK(oracle::max_abs(a.leftCols(so)) == 0.0);
      CHECK(oracle::rel_entrywise(a.block(so, so, ss, ss), expect[p]) < 1e-13);
    }
    // v0 row: A00^i d_i v0 becomes A00^i d^0_1[i]; A01 v1 stays undifferentiated.
    const Mat& B = f.B_find(0, 1, 0)->at({});
    const DirectVariable& d01 = v.vars[v.find(0, 1)];
    for (int i = 0; i < 3; ++i)
      CHECK(B(0, d01.index(sym_index_position({i}, 3), 0)) == s.A_find(0, 0)->at({i})(0, 0));
    CHECK(B(0, v.vars[v.find(1, 0)].offset) == s.A_find(0, 1)->at({})(0, 0));
  }
}

TEST_CASE("zero parameters: N = 2 layout (u, d_i u, v)") {
  const FTNSSystem w = wave_system(3);
  const FTNSSystem f = build_direct_ft1s(w, DirectReductionVars::zero(w));
  const MultiIndexTensor& A = *f.A_find(0, 0);
  for (int p = 0; p < 3; ++p) {
    Mat e = Mat::Zero(5, 5);
    e(1 + p, 4) = 1.0;  // d_t d_p u = d_p v
    e(4, 1 + p) = 1.0;  // d_t v = d_p d_p u
    CHECK(oracle::max_abs(A.at({p}) - e) == 0.0);
  }
  const Mat& B = f.B_find(0, 1, 0)->at({});
  CHECK(B(0, 4) == cplx(1.0));
  CHECK(oracle::max_abs(B) == 1.0);
}

TEST_CASE("second group block equals the compressed principal matrix") {
  Rng rng(2);
  for (int N = 2; N <= 4; ++N) {
    const FTNSSystem s = random_complex_system(N, 3, std::vector<int>(N, 1), rng);
    const DirectReductionVars v = partial_choice_direct(s);
    const FTNSSystem f = build_direct_ft1s(s, v);
    const PrincipalObjects P = principal_matrix(s);
    const int so = v.second_offset(), ss = v.second_size();
    for (int p = 0; p < 3; ++p)
      CHECK(oracle::rel_entrywise(f.A_find(0, 0)->at({p}).block(so, so, ss, ss), P.Ap[p]) < 1e-13);
  }
}

TEST_CASE("closure of the constraint evolution") {
  Rng rng(3);
  for (int N = 2; N <= 4; ++N) {
    const FTNSSystem s = random_complex_system(N, 3, std::vector<int>(N, 1), rng);
    CHECK(direct_constraint_evolution(s, DirectReductionVars::zero(s)).max_residual() <= 1e-12);
    CHECK(direct_constraint_evolution(s, random_direct_params(s, rng)).max_residual() <= 1e-12);
  }
}

TEST_CASE("closure check rejects a non-constraint coupling") {
  Rng rng(4);
  const FTNSSystem s = random_complex_system(3, 3, {1, 1, 1}, rng);
  DirectReductionVars v = random_direct_params(s, rng);
  // A Dbar entry with a nonzero fully symmetric part adds d_(i1 d^nu_sigma), which
  // is not a constraint. The check rejects it before building.
  MultiIndexTensor& t = v.Dbar_ref(0, 0, 1);
  t.at({0, 0}) += Mat::Constant(t.rows(), t.cols(), 1.0);
  CHECK_FALSE(v.check().empty());
  CHECK_THROWS_AS(build_direct_ft1s(s, v), TensorError);
}

TEST_CASE("replacement: constraint-satisfying data reproduce derivatives of the parent") {
  Rng rng(5);
  for (int N = 2; N <= 4; ++N) {
    const FTNSSystem s = random_complex_system(N, 3, std::vector<int>(N, 1), rng);
    CHECK(replacement_residual(s, DirectReductionVars::zero(s)) <= 1e-12);
    CHECK(replacement_residual(s, random_direct_params(s, rng)) <= 1e-12);
  }
}

TEST_CASE("a changed parent coefficient changes the first order symbol") {
  Rng rng(6);
  const FTNSSystem s = random_complex_system(2, 3, {1, 1}, rng);
  const DirectReductionVars v = DirectReductionVars::zero(s);
  FTNSSystem t = s;
  t.A_ref(1, 0).at({0, 1}) += Mat::Constant(1, 1, 0.5);
  t.A_ref(1, 0).at({1, 0}) += Mat::Constant(1, 1, 0.5);
  // Build from t, compare against s.
  const FTNSSystem ft = build_direct_ft1s(t, v);
  CHECK(replacement_residual(t, v) <= 1e-12);
  CHECK(oracle::max_abs(ft.A_find(0, 0)->at({0}) - build_direct_ft1s(s, v).A_find(0, 0)->at({0})) > 0.1);
}

TEST_CASE("parameter symmetry rules") {
  const FTNSSystem s = FTNSSystem::zero(3, 3, {1, 1, 1});
  DirectReductionVars v = DirectReductionVars::zero(s);
  MultiIndexTensor& d = v.Dp_ref(0, 0, 2);
  d.at({0, 1}) = Mat::Constant(d.rows(), 1, 1.0);
  auto viol = v.check();
  REQUIRE(viol.size() == 1);
  CHECK(viol[0].where == "D[0][0][2]");
  d = symmetrize(d, {0, 1});
  CHECK(v.check().empty());

  MultiIndexTensor& b = v.Dbar_ref(1, 0, 2);
  b.at({0, 1, 2}) = Mat::Constant(b.rows(), 1, 1.0);
  viol = v.check();
  CHECK(viol.size() == 2);
  v.Dbar.clear();
  v.Dp[{0, 2, 1}] = MultiIndexTensor(3, 1, 1, 1);
  CHECK(v.check().size() == 1);
}

TEST_CASE("parameter file round trip") {
  Rng rng(7);
  const FTNSSystem s = random_complex_system(3, 3, {1, 2, 1}, rng);
  const DirectReductionVars v = random_direct_params(s, rng);
  const std::string text = serialize_direct_params(v);
  const DirectReductionVars back = parse_direct_params(text, s);
  CHECK(serialize_direct_params(back) == text);
  const FTNSSystem a = build_direct_ft1s(s, v), b = build_direct_ft1s(s, back);
  CHECK(oracle::max_abs(a.A_find(0, 0)->at({2}) - b.A_find(0, 0)->at({2})) == 0.0);
  CHECK_THROWS_AS(parse_direct_params("{\"Dbar_params\": [{\"row\": [5, 0]}]}", s), TensorError);
}

TEST_CASE("top Dbar blocks round trip") {
  Rng rng(8);
  const FTNSSystem s = random_complex_system(3, 3, {1, 1, 1}, rng);
  DirectReductionVars v = random_direct_params(s, rng);
  const auto blocks = top_dbar_blocks(v);
  REQUIRE(blocks.size() == 3);
  DirectReductionVars w = v;
  set_top_dbar(w, blocks);
  for (const auto& [k, t] : v.Dbar) CHECK(max_diff(t, w.Dbar.at(k)) < 1e-14);
}
