#pragma once

#include "ftns/linalg.hpp"
#include "ftns/system.hpp"

namespace ftns {

// Monomials x^e in D variables with |e| <= degree. A polynomial field with m
// components is an m x size() coefficient matrix (PolyField).
class MonomialTable {
 public:
  MonomialTable(int D, int degree);

  int D() const { return D_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const Index& exponents(int k) const { return exps_[k]; }
  int position(const Index& e) const;  // -1 when not in the table

  // Right-multiplication operator for d/dx_i.
  const Mat& derivative_operator(int i) const { return deriv_[i]; }

 private:
  int D_, degree_;
  std::vector<Index> exps_;
  std::vector<Mat> deriv_;
};

using PolyField = Mat;

PolyField derivative(const MonomialTable& tab, const PolyField& f, int i);
PolyField derivative(const MonomialTable& tab, const PolyField& f, const Index& idx);
PolyField random_poly_field(int comps, const MonomialTable& tab, Rng& rng);

// Right-hand side of the system (principal and lower-order terms) on a
// polynomial state whose rows follow the block layout of sys.
PolyField apply_system(const FTNSSystem& sys, const MonomialTable& tab, const PolyField& state);

// Least-squares fit of target rows against span{ d^alpha feature rows, |alpha| <= order }
// with constant coefficients shared across samples. Each sample is one test state.
// Returns the relative residual ||fit - target|| / max(1, ||target||).
double span_residual(const MonomialTable& tab, const std::vector<PolyField>& features,
                     const std::vector<PolyField>& targets, int order);

}  // namespace ftns
