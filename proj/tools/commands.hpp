#pragma once

#include <string>
#include <vector>

namespace ftns::cli {

// Exit codes beyond the verdict codes 0/2/3/4.
inline constexpr int kExitError = 1;
inline constexpr int kExitCandidateOnly = 5;
inline constexpr int kExitInfeasible = 6;
inline constexpr int kExitChainFailure = 7;
inline constexpr int kExitUnstable = 8;

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string out_dir;  // empty: FTNS_OUT_DIR, then "."

  // direction sampling
  std::string sample = "default";  // default | icosphere | fibonacci | random
  int level = 4;
  int count = 100;
  unsigned long long seed = 1;

  double real_tol = 1e-9;
  double kappa_max = 1e8;
  double herm_tol = 1e-10;

  // reduce
  int to_order = 1;
  std::string strategy = "partial-epsilon";  // partial-epsilon | zero | file
  std::vector<std::string> params;
  double lambda = 0.0;
  bool direct = false;

  // symmetrize
  std::string j_mode = "least-norm";  // least-norm | permutation

  // evolve
  std::string mode = "fourier";  // fourier | grid
  std::string direction;         // comma separated; empty: e_1 (grid) or e_D (fourier)
  std::string omegas = "1,10,100,1000";
  double t_final = 1.0;
  int points = 128;
  double cfl = 0.25;
  std::string data = "sine";  // sine | gaussian | band
  int wavenumber = 1;
  int kmax = 8;
  double width = 0.5;
  std::string symmetrizer;  // matrix file holding the energy form
  bool refine = false;
  bool compare_direct = false;
  int record_every = 0;

  // example
  std::string example;
};

// Throws std::invalid_argument on non-positive tolerances and similar.
void check_config(const RunConfig& cfg);
std::string output_dir(const RunConfig& cfg);

int cmd_validate(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);
int cmd_reduce(const RunConfig& cfg);
int cmd_symmetrize(const RunConfig& cfg);
int cmd_evolve(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);
// Writes a built-in system (wave, companion, zero, advection) to the output directory.
int cmd_example(const RunConfig& cfg);

}  // namespace ftns::cli
