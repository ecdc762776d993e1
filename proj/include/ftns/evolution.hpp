#pragma once

#include "ftns/direct_reduction.hpp"
#include "ftns/reduction.hpp"
#include "ftns/symmetrizer.hpp"
#include "ftns/system.hpp"

#include <string>
#include <vector>

namespace ftns {

// Plane-wave evolution of the scaled state ((i|w|)^{N-mu-1} v^mu), which obeys
// d_t u = i|w| P^s u.
struct FourierModeRun {
  RVec s;
  std::vector<double> omegas{1.0, 10.0, 100.0, 1000.0};
  double t_final = 1.0;
};

struct GrowthRow {
  double omega = 0.0;
  double log_growth = 0.0;  // log of the operator norm of exp(i|w| t P)
  double growth() const;    // may overflow to inf for large |w|
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  double slope = 0.0;      // least-squares fit of log_growth against |w|
  double intercept = 0.0;
  double rate = 0.0;       // max over eigenvalues of -Im(lambda), times t_final
  bool exact = true;       // false when the symbol was treated as defective
};

GrowthTable fourier_evolve(const FTNSSystem& sys, const FourierModeRun& run);
std::string growth_csv(const GrowthTable& g);

// Initial data as a finite Fourier series per state component on [0, 2 pi):
// f(x) = sum_k c_k exp(i k x). Derivatives are exact.
struct ModalData {
  std::vector<int> wavenumbers;
  Mat coeffs;  // components x wavenumbers

  Mat sample(int points, int derivative = 0) const;  // components x points
};

ModalData sine_mode(int components, int k, Rng& rng);
// Periodized Gaussian bump of width w centered at pi, truncated at |k| <= kmax.
ModalData gaussian_bump(int components, double width, int kmax, Rng& rng);
ModalData band_limited(int components, int kmax, Rng& rng);

// Periodic 1D grid on [0, 2 pi). The system is restricted to the line along
// direction e: every derivative d_i becomes e_i d_x.
struct GridRun {
  int points = 128;
  double t_final = 1.0;
  double cfl = 0.25;
  double dt = 0.0;  // 0: cfl * h / lambda_max
  RVec direction;  // defaults to e_1
  int record_every = 0;  // steps between records; 0 records start and end only
};

struct GridSeries {
  std::vector<double> t;
  std::vector<double> norm;        // discrete L2 norm of the state
  std::vector<double> energy;      // sum_x u^dagger G_e u h, u = (d_x^{N-mu-1} v^mu)
  std::vector<double> constraint;  // filled by compare_parent_child
  Mat final_state;                 // components x points
  double dt = 0.0, h = 0.0;
  int steps = 0;
  bool unstable = false;
  std::string diagnostic;
};

// Fourth order centered first derivative on a periodic grid.
Mat periodic_d1(const Mat& f, double h);

// RK4 in time. G may be empty (energy then uses the identity).
GridSeries grid_evolve(const FTNSSystem& sys, const GridRun& run, const Mat& initial, const Mat& G = Mat());
std::string series_csv(const GridSeries& s);

// Parent solution vs the v-components of a reduced system, both evolved on the
// same grid. Child data are exact derivatives of the parent data.
struct Discrepancy {
  std::vector<double> t;
  std::vector<double> discrepancy;  // max over v-components of the L2 difference
  std::vector<double> constraint;   // L2 norm of d - d_x v on the child
  GridSeries parent, child;
};

Discrepancy compare_parent_child(const FTNSSystem& parent, const DirectReductionVars& vars,
                                 const GridRun& run, const ModalData& data, bool violate = false);
Discrepancy compare_parent_child(const ReducedSystem& red, const GridRun& run, const ModalData& data,
                                 bool violate = false);

// Exact child data for the direct reduction: d^mu_sigma[I] = e_I d_x^sigma v^mu.
Mat lift_direct(const DirectReductionVars& vars, const ModalData& data, int points, const RVec& e);

// Estimated order from errors at h and h/2.
double convergence_order(double coarse_error, double fine_error);

// Runs at points, 2 points and 4 points; differences compared on the coarse grid.
struct SelfConvergence {
  double diff_coarse = 0.0;  // ||u_h - u_h/2||
  double diff_fine = 0.0;    // ||u_h/2 - u_h/4||
  double order = 0.0;
};
SelfConvergence self_convergence(const FTNSSystem& sys, const GridRun& run, const ModalData& data);

}  // namespace ftns
