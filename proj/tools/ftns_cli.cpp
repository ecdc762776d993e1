#include "commands.hpp"

#include "ftns/system_io.hpp"
#include "ftns/tensor.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ftns::cli;

namespace {

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out_dir, "Output directory (default: $FTNS_OUT_DIR or .)");
  sub->add_option("--seed", c.seed, "Random seed");
}

void add_sampling(CLI::App* sub, RunConfig& c) {
  sub->add_option("--sample", c.sample, "Direction sample: default, icosphere, fibonacci, random");
  sub->add_option("--level", c.level, "Icosphere subdivision level");
  sub->add_option("--count", c.count, "Number of random or Fibonacci directions");
  sub->add_option("--real-tol", c.real_tol, "Relative tolerance on Im(lambda)");
  sub->add_option("--kappa-max", c.kappa_max, "Largest admissible condition number of T(s)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis of first order in time, N-th order in space evolution systems"};
  app.require_subcommand(1);
  RunConfig c;

  auto* validate = app.add_subcommand("validate", "Check a system file");
  validate->add_option("path", c.inputs, "System file")->required();

  auto* analyze = app.add_subcommand("analyze", "Strong hyperbolicity classification");
  analyze->add_option("path", c.inputs, "System file")->required();
  add_common(analyze, c);
  add_sampling(analyze, c);

  auto* reduce = app.add_subcommand("reduce", "Order lowering reduction");
  reduce->add_option("path", c.inputs, "System file")->required();
  add_common(reduce, c);
  add_sampling(reduce, c);
  auto* to_order = reduce->add_option("--to-order", c.to_order, "Target order");
  auto* first = reduce->add_flag("--first-order", "Reduce to order 1");
  to_order->excludes(first);
  reduce->add_option("--strategy", c.strategy, "partial-epsilon, zero or file");
  reduce->add_option("--params", c.params, "Parameter files, one per level (strategy file)");
  reduce->add_option("--lambda", c.lambda, "Override the epsilon-choice lambda");
  reduce->add_flag("--direct", c.direct, "Direct reduction to a first order system");

  auto* symmetrize = app.add_subcommand("symmetrize", "Symmetrizer search and first order construction");
  symmetrize->add_option("path", c.inputs, "System file")->required();
  add_common(symmetrize, c);
  symmetrize->add_option("--j-mode", c.j_mode, "least-norm or permutation");
  symmetrize->add_option("--herm-tol", c.herm_tol, "Tolerance on the first order Hermiticity residual");

  auto* evolve = app.add_subcommand("evolve", "Fourier mode or grid evolution");
  evolve->add_option("path", c.inputs, "System file")->required();
  add_common(evolve, c);
  evolve->add_option("--mode", c.mode, "fourier or grid");
  evolve->add_option("--direction", c.direction, "Comma separated direction");
  evolve->add_option("--omegas", c.omegas, "Comma separated |omega| values");
  evolve->add_option("--t-final", c.t_final, "Final time");
  evolve->add_option("--points", c.points, "Grid points");
  evolve->add_option("--cfl", c.cfl, "CFL factor");
  evolve->add_option("--data", c.data, "Initial data: sine, gaussian, band");
  evolve->add_option("--k", c.wavenumber, "Wavenumber of the sine mode");
  evolve->add_option("--kmax", c.kmax, "Largest wavenumber of the gaussian and band data");
  evolve->add_option("--width", c.width, "Width of the gaussian bump");
  evolve->add_option("--symmetrizer", c.symmetrizer, "Matrix file with the energy form");
  evolve->add_option("--record-every", c.record_every, "Steps between records");
  evolve->add_flag("--refine", c.refine, "Self-convergence study with 2x and 4x the points");
  evolve->add_flag("--compare-direct", c.compare_direct, "Also evolve the direct first order reduction");

  auto* report = app.add_subcommand("report", "Summary of several systems");
  report->add_option("paths", c.inputs, "System files")->required();
  add_common(report, c);
  add_sampling(report, c);
  report->add_option("--omegas", c.omegas, "Comma separated |omega| values");

  auto* example = app.add_subcommand("example", "Write a built-in system file");
  example->add_option("name", c.example, "wave, companion, zero, advection, random")->required();
  add_common(example, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }
  if (*first) c.to_order = 1;

  try {
    check_config(c);
    if (*validate) return cmd_validate(c);
    if (*analyze) return cmd_analyze(c);
    if (*reduce) return cmd_reduce(c);
    if (*symmetrize) return cmd_symmetrize(c);
    if (*evolve) return cmd_evolve(c);
    if (*report) return cmd_report(c);
    if (*example) return cmd_example(c);
  } catch (const ftns::ParseError& e) {
    std::cerr << "parse error";
    if (e.line > 0) std::cerr << " at line " << e.line << ", column " << e.column;
    std::cerr << ": " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
