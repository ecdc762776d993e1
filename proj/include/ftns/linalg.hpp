#pragma once

#include "ftns/tensor.hpp"

#include <random>

namespace ftns {

double spectral_norm(const Mat& m);
double spectral_norm(const RMat& m);
// Smallest singular value from the Gram matrix; accurate to about sqrt(eps) ||m||.
double min_singular_value(const Mat& m);
// ||M|| ||M^-1|| for square M; inf when the LU factorization is singular.
double condition_number(const Mat& m);
Mat hermitian_part(const Mat& m);
// Smallest eigenvalue of the Hermitian part.
double min_hermitian_eigenvalue(const Mat& m);
bool is_hermitian(const Mat& m, double tol);

// Orthonormal basis of the null space; singular values below rel_tol * sigma_max count as zero.
RMat nullspace(const RMat& a, double rel_tol = 1e-10, int* rank = nullptr);

struct LeastNormSolution {
  RVec x;
  double residual = 0.0;  // ||a x - b||
  int rank = 0;
};
LeastNormSolution least_norm_solve(const RMat& a, const RVec& b, double rel_tol = 1e-12);

// Real view of a complex matrix acting on (re, im) stacked vectors.
RMat realify(const Mat& m);

// Random helpers. All use a caller-owned engine so runs stay reproducible.
using Rng = std::mt19937_64;
double uniform(Rng& rng, double lo = -1.0, double hi = 1.0);
double gaussian(Rng& rng);
RVec random_unit_vector(int D, Rng& rng);
Mat random_complex(int rows, int cols, Rng& rng);
RMat random_real(int rows, int cols, Rng& rng);
// Hermitian with eigenvalues in [lo, hi].
Mat random_hpd(int n, Rng& rng, double lo = 0.5, double hi = 2.0);
Mat random_unitary(int n, Rng& rng);

// Unit vectors from a subdivided icosahedron (D = 3).
std::vector<RVec> icosphere(int level);
std::vector<RVec> fibonacci_sphere(int count);

}  // namespace ftns
