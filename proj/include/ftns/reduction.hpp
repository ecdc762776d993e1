#pragma once

#include "ftns/hyperbolicity.hpp"
#include "ftns/system.hpp"

#include <string>
#include <vector>

namespace ftns {

// Constraint-addition tensors of the order-lowering reduction. Index slots follow
// the order in which they are written: D[i][k] multiplies c_k in the d_i equation,
// Dbar[i][k][j] multiplies c_kj, Dmu[mu][k1..k_{mu-1}][k_mu] multiplies
// d^{mu-1} c_{k_mu}, Dbarmu[mu][k1..k_{mu-1}][k_mu][k_{mu+1}] multiplies d^{mu-1} c_{k_mu k_{mu+1}}.
struct IterativeReductionParams {
  MultiIndexTensor D0;                    // rank 1, n0 x n0
  MultiIndexTensor D;                     // rank 2, n0 x n0
  std::vector<MultiIndexTensor> Dmu;      // Dmu[mu] rank mu, n_mu x n0; Dmu[0] unused
  MultiIndexTensor Dbar0;                 // rank 2, n0 x n0
  MultiIndexTensor Dbar;                  // rank 3, n0 x n0
  std::vector<MultiIndexTensor> Dbarmu;   // Dbarmu[mu] rank mu+1, n_mu x n0; Dbarmu[0] unused

  static IterativeReductionParams zero(const FTNSSystem& parent);
  // Shape and antisymmetry violations against the parent system.
  std::vector<Violation> check(const FTNSSystem& parent, double antisym_tol = 1e-14) const;
};

std::string serialize_params(const IterativeReductionParams& p);
IterativeReductionParams parse_params(const std::string& text, const FTNSSystem& parent);

struct ReducedSystem {
  FTNSSystem sys;  // order N-1; block 0 holds (v0, d_1..d_D, v1)
  IterativeReductionParams params;
  FTNSSystem parent;
  std::vector<std::string> constraints;

  int n0() const { return parent.dims[0]; }
  int d_offset() const { return n0(); }
  int v1_offset() const { return n0() + parent.D * n0(); }
};

ReducedSystem reduce_once(const FTNSSystem& sys, const IterativeReductionParams& params);

IterativeReductionParams partial_choice(const FTNSSystem& sys);
// Dbar[i][k][j] = i lambda eps_{ikj} times the n0 x n0 identity. D = 3 only.
MultiIndexTensor epsilon_choice(double lambda, int n0 = 1);
// 1 + max over the sample of ||P^s||_2.
double choose_lambda(const FTNSSystem& sys, const DirectionSample& sample);

// Orthonormal e_1..e_{D-1} completing s, by Gram-Schmidt from the least aligned axes.
RMat transverse_frame(const RVec& s);

struct Decomposition21 {
  RVec s;
  RMat frame;  // D x (D-1), columns e_A
  RMat q;      // I - s s^T
  Mat rotation;  // columns: (v0, d_A, d_s, v1, ...) in terms of the original basis
  Mat rotated;   // rotation^T P rotation
  Mat X, Y, PN;
  int n0 = 0;
  // Largest entry outside the lower block-triangular pattern (0, X, P_N).
  double triangular_defect = 0.0;
};

Decomposition21 decompose_21(const ReducedSystem& red, const RVec& s);

struct LiftResult {
  Mat T, T_inv;
  Vec lambda;
  double residual = 0.0;  // ||T^-1 P T - Lambda|| / max(1, ||P||)
  double norm_T = 0.0, norm_T_inv = 0.0;
  bool resonant = false;
};

// Assembles the diagonalizer of the reduced symbol from T_N (diagonalizing P_N)
// and the eigenvectors of X.
LiftResult lift_diagonalizer(const Mat& T_N, const Vec& lambda_N, const Decomposition21& dec,
                             double resonance_cond = 1e12);

struct ReductionStrategy {
  enum Kind { partial_epsilon, zero, explicit_params } kind = partial_epsilon;
  std::vector<IterativeReductionParams> params;  // one per level for explicit_params
  double lambda_override = 0.0;                  // > 0 replaces choose_lambda
};

struct ReductionLevel {
  ReducedSystem red;
  double lambda = 0.0;
  int retries = 0;
};

// Resonance between +-lambda and spec(P_N^s) on the sample.
bool lambda_resonant(const FTNSSystem& sys, const DirectionSample& sample, double lambda,
                     double cond_max = 1e12);

std::vector<ReductionLevel> iterate_to_first_order(const FTNSSystem& sys,
                                                   const ReductionStrategy& strategy,
                                                   const DirectionSample& sample,
                                                   int target_order = 1);

struct ClosureReport {
  double explicit_residual = 0.0;  // closed-form constraint evolution
  double span_residual = 0.0;      // least-squares fit against span{c, dc}
  double max_residual() const { return std::max(explicit_residual, span_residual); }
  int samples = 0;
};

ClosureReport constraint_evolution(const ReducedSystem& red, unsigned long long seed = 7);

// Residual of c_{i1..is} = (2/s) sum_{m<s} d_{I minus {i_m, i_s}} c_{i_m i_s} on random
// polynomial d-fields, for all index tuples of length sigma.
double redundancy_residual(int D, int sigma, unsigned long long seed = 11);

}  // namespace ftns
