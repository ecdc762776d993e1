#pragma once

#include "ftns/reduction.hpp"
#include "ftns/system.hpp"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace ftns {

// One reduction variable d^mu_sigma (sigma = 0 is v^mu itself) in compressed
// canonical-tuple storage, component index = tuple_pos * n + a.
struct DirectVariable {
  int mu = 0;
  int sigma = 0;
  int offset = 0;
  int n = 0;
  std::vector<Index> tuples;
  bool second_group = false;  // d^mu = d^mu_{N-mu-1} and v^{N-1}

  int size() const { return static_cast<int>(tuples.size()) * n; }
  int index(long tuple_pos, int a) const { return offset + static_cast<int>(tuple_pos) * n + a; }
};

// Key of a constraint addition: (row variable, constrained field nu, sigma).
using DirectKey = std::tuple<int, int, int>;

// Variable catalogue and constraint-addition parameters of the direct first
// order reduction. State order: for mu = 0..N-2 the group (v^mu, d^mu_1, ...,
// d^mu_{N-mu-2}), then d^0, ..., d^{N-2}, v^{N-1}. The second group has the
// layout of the compressed FTNS basis.
//
// Dp[(x, nu, sigma)]: rank sigma, rows = size of variable x, cols = n_nu,
// multiplies c^nu_sigma = d_(i1 d^nu_{sigma-1} ...) - d^nu_sigma.
// Dbar[(x, nu, sigma)]: rank sigma + 1, slot 0 pairs with the derivative index
// of cbar^nu_sigma = d_i1 d^nu_sigma - d_(i1 d^nu_sigma).
struct DirectReductionVars {
  int N = 1;
  int D = 3;
  std::vector<int> dims;
  std::vector<DirectVariable> vars;
  std::map<DirectKey, MultiIndexTensor> Dp;
  std::map<DirectKey, MultiIndexTensor> Dbar;

  static DirectReductionVars zero(const FTNSSystem& sys);

  int size() const;
  int find(int mu, int sigma) const;  // -1 when absent
  int top_sigma(int mu) const { return N - mu - 1; }
  int second_offset() const;
  int second_size() const { return size() - second_offset(); }
  std::vector<int> second_variables() const;

  MultiIndexTensor& Dp_ref(int x, int nu, int sigma);
  MultiIndexTensor& Dbar_ref(int x, int nu, int sigma);

  // Shape and symmetry-rule violations.
  std::vector<Violation> check(double tol = 1e-12) const;
  std::vector<std::string> constraint_catalogue() const;
  std::vector<std::string> labels() const;  // one per state component, 1-based tuples
};

std::string serialize_direct_params(const DirectReductionVars& v);
DirectReductionVars parse_direct_params(const std::string& text, const FTNSSystem& parent);

// First order system (N = 1, one block) in the state order of vars.
FTNSSystem build_direct_ft1s(const FTNSSystem& sys, const DirectReductionVars& vars);

// All D and Dbar zero. The only remaining freedom is Dbar^{X (N-nu-1)}_nu for
// second-group rows X, which solve_J fills in.
DirectReductionVars partial_choice_direct(const FTNSSystem& sys);

// Writes Dbar^{X (N-nu-1)}_nu for the second-group rows from compressed
// principal blocks CDbar[p] (second_size x second_size, zero columns for v^{N-1}).
void set_top_dbar(DirectReductionVars& vars, const std::vector<Mat>& CDbar);
// Inverse of set_top_dbar.
std::vector<Mat> top_dbar_blocks(const DirectReductionVars& vars);

// Random parameters obeying the symmetry rules; scale multiplies the entries.
DirectReductionVars random_direct_params(const FTNSSystem& sys, Rng& rng, double scale = 1.0);

// Closure of the constraint evolution, tested on polynomial states.
ClosureReport direct_constraint_evolution(const FTNSSystem& sys, const DirectReductionVars& vars,
                                          unsigned long long seed = 13);

// On constraint-satisfying data d^mu_sigma = d_I v^mu the first order right-hand
// side must equal d_I of the original right-hand side. Relative residual.
double replacement_residual(const FTNSSystem& sys, const DirectReductionVars& vars,
                            unsigned long long seed = 17);

}  // namespace ftns
