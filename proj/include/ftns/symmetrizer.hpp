#pragma once

#include "ftns/direct_reduction.hpp"
#include "ftns/system.hpp"

#include <string>
#include <vector>

namespace ftns {

enum class Positivity { positive_definite, indefinite, unknown };
std::string to_string(Positivity p);

// Candidate symmetrizer over the compressed state basis. G is the Gram matrix of
// the quadratic form u^dagger H u summed over all index orderings, i.e.
// G = M Hc M with Hc the canonical components of H and M the multiplicities.
struct SymCandidate {
  int N = 1;
  Mat G;
  Positivity positivity = Positivity::unknown;

  static SymCandidate from_gram(int N, const Mat& G);
  static SymCandidate from_components(const StateBasis& basis, const Mat& Hc);
  Mat components(const StateBasis& basis) const;  // Hc
  double min_eigenvalue() const;
};

struct CandidateCheck {
  bool ok = false;
  double residual = 0.0;  // absolute norm of the symmetrized Hermiticity defect
  double scale = 1.0;     // ||G|| * max_p ||A^p||, for relative reporting
};

// Polarization form of the conservation condition: for every block pair and
// every monomial, the coefficient of s^m in S G A(s) S minus its adjoint.
CandidateCheck is_candidate(const FTNSSystem& sys, const SymCandidate& H, double tol = 1e-12);
CandidateCheck is_candidate(const PrincipalObjects& po, const Mat& G, double tol = 1e-12);
// Raw defect coefficients (complex), linear in G.
Vec candidate_defect(const PrincipalObjects& po, const Mat& G);

struct CandidateSolution {
  enum Status { symmetric_hyperbolic, candidate_only, infeasible } status = infeasible;
  SymCandidate H;
  int nullity = 0;
  double min_eigenvalue = 0.0;  // of the best normalized element found
  int iterations = 0;
};
std::string to_string(CandidateSolution::Status s);

// Hermitian matrices over the compressed basis, real coordinates: diagonal
// entries, then (re, im) of each upper off-diagonal entry.
Mat hermitian_from_coords(const RVec& x, int n);
RVec hermitian_coords(const Mat& H);

// Nullspace of the candidate conditions plus a heuristic search for a positive
// definite element (projected supergradient ascent on the minimum eigenvalue).
// candidate_only is not a proof that no symmetrizer exists.
CandidateSolution solve_candidate(const FTNSSystem& sys);

// Lower-right block in the (d^mu~_sigma, v^mu | d^mu, v^{N-1}) grouping.
SymCandidate extract_HN_from_H1(const Mat& H1, const DirectReductionVars& vars);

// H1 = diag(Gamma, G) with Gamma the Gram matrix of gamma = delta on the first group.
Mat build_H1(const DirectReductionVars& vars, const Mat& G);

// T^p = G A^p and V^p = T^p - (T^p)^dagger over the compressed basis.
std::vector<Mat> compute_T(const PrincipalObjects& po, const Mat& G);
std::vector<Mat> compute_V(const PrincipalObjects& po, const Mat& G);

enum class JMode { least_norm, permutation_ansatz };

struct JSolution {
  bool ok = false;
  std::vector<Mat> J;      // G * Dbar-blocks, one per p, over the compressed basis
  std::vector<Mat> CDbar;  // Dbar-blocks
  DirectReductionVars params;
  FTNSSystem ft1s;
  Mat H1;
  double v_sym_residual = 0.0;   // candidate defect of G
  double lin_residual = 0.0;     // of the linear system for J
  double herm_residual = 0.0;    // max_p ||H1 A1^p - h.c.|| / (||H1|| ||A1^p||)
  int unknowns = 0, equations = 0, rank = 0;
  std::string note;
};

// Solves J - J^dagger = -V with J^{(p|i|j)} = 0, recovers Dbar = G^-1 J and
// verifies that H1 symmetrizes the direct reduction.
JSolution solve_J(const FTNSSystem& sys, const SymCandidate& H, JMode mode = JMode::least_norm);

// u^dagger G u.
double energy_density(const Vec& u, const SymCandidate& H);

// Hermitian H with H A^p Hermitian for all p, as a basis of real coordinate vectors.
RMat first_order_candidate_space(const std::vector<Mat>& Ap);
// Orthogonal projection (in hermitian_coords) of H onto that space.
Mat project_first_order_candidate(const std::vector<Mat>& Ap, const Mat& H);
std::vector<Mat> first_order_matrices(const FTNSSystem& ft1s);

}  // namespace ftns
