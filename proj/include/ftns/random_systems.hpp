#pragma once

#include "ftns/linalg.hpp"
#include "ftns/system.hpp"

#include <vector>

namespace ftns {

// d_t u = v, d_t v = laplace u as an FT2S system with n = (1, 1).
FTNSSystem wave_system(int D = 3);

// Scalar FT3S chain d_t v0 = v1, d_t v1 = v2, d_t v2 = a^{ijk} d_ijk v0 with
// a = e (x) e (x) e, so the symbol at s is the companion matrix of lambda^3 = (e.s)^3.
FTNSSystem companion_chain(int D = 3, int axis = -1);

// Decoupled advection: A^mu_mu = c_k times the identity, nothing else.
FTNSSystem advection_system(int N, const RVec& c, const std::vector<int>& dims);

// Dense random coefficients for every admissible A and B.
FTNSSystem random_system(int N, int D, const std::vector<int>& dims, Rng& rng, bool with_lower = true);

struct ReverseEngineered {
  FTNSSystem sys;
  Mat G;          // positive definite candidate (Gram form over the compressed basis)
  int nullity = 0;  // dimension of the admissible principal parts
};

// Picks a real positive definite G, then a random real principal part from the
// null space of the candidate conditions for that G, plus random lower-order terms.
ReverseEngineered reverse_engineered_system(int N, int D, const std::vector<int>& dims, Rng& rng);

}  // namespace ftns
