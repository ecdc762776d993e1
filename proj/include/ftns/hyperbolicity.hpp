#pragma once

#include "ftns/linalg.hpp"
#include "ftns/system.hpp"

#include <string>
#include <vector>

namespace ftns {

struct Eigenstructure {
  Vec eigenvalues;  // ordered like the columns of T
  Mat T;            // unit-norm eigenvector columns
  Mat T_inv;
  double kappa = 0.0;
  bool defective = false;
  bool ok = true;  // false when the eigen-solver failed
  // Largest |Im| over eigenvalue cluster means (splitting of defective clusters is not counted).
  double max_imag = 0.0;
  std::vector<int> cluster;  // cluster id per column
  std::vector<double> effective_imag;
};

// tol: relative threshold on the smallest singular value of T.
// Near-equal eigenvalues are grouped; semisimple groups get an orthonormal eigenspace basis.
Eigenstructure eigenstructure(const Mat& P, double tol = 1e-12);

// H = (T T^dagger)^{-1}. Throws when P is defective or its spectrum is not real.
Mat build_Hs(const Mat& P, const Eigenstructure& es, double real_tol = 1e-9);
Mat build_Hs(const Mat& P, const Mat& T);

enum class Verdict { strong, weak, not_hyperbolic, inconclusive };
std::string to_string(Verdict v);
int exit_code(Verdict v);

struct DirectionSample {
  std::vector<RVec> directions;
  std::string scheme;
};

DirectionSample icosphere_sample(int level);
DirectionSample fibonacci_sample(int count);
DirectionSample explicit_sample(std::vector<RVec> dirs);
DirectionSample random_sample(int D, int count, unsigned long long seed);
// Icosphere (D = 3) or an even circle (D = 2) or {+-1} (D = 1), plus random directions.
DirectionSample default_sample(int D, int level = 4, int random_count = 100,
                               unsigned long long seed = 1);
// Appends -s for every s so that sign-pair properties can be checked.
DirectionSample with_antipodes(const DirectionSample& s);

struct DirectionRecord {
  RVec s;
  Vec eigenvalues;
  double max_imag = 0.0;
  double kappa = 0.0;
  double herm_residual = 0.0;  // relative, only meaningful when H exists
  double norm_T = 0.0, norm_T_inv = 0.0;
  double norm_H = 0.0, norm_H_inv = 0.0;
  bool defective = false;
  bool real = true;
  bool ok = true;
};

struct StrongHypReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<DirectionRecord> records;
  double M_estimate = 0.0;
  double K_estimate = 0.0;
  int worst_direction = -1;
  std::string scheme;
  double real_tol = 1e-9;
  double kappa_max = 1e8;
};

struct HypOptions {
  double real_tol = 1e-9;  // |Im lambda| <= real_tol (1 + |lambda|)
  double kappa_max = 1e8;
};

StrongHypReport classify_symbols(const std::vector<Mat>& symbols, const DirectionSample& sample,
                                 const HypOptions& opt = {});
StrongHypReport classify_strong(const FTNSSystem& sys, const DirectionSample& sample,
                                const HypOptions& opt = {});

std::string report_text(const StrongHypReport& r, const std::string& title);
std::string report_csv(const StrongHypReport& r);

// 17 significant digits.
std::string fmt(double x);

}  // namespace ftns
