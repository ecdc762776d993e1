#include "commands.hpp"

#include "ftns/direct_reduction.hpp"
#include "ftns/evolution.hpp"
#include "ftns/hyperbolicity.hpp"
#include "ftns/random_systems.hpp"
#include "ftns/reduction.hpp"
#include "ftns/symmetrizer.hpp"
#include "ftns/system_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace ftns::cli {

namespace fs = std::filesystem;

namespace {

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string out_path(const RunConfig& cfg, const std::string& name) {
  const fs::path dir(output_dir(cfg));
  fs::create_directories(dir);
  return (dir / name).string();
}

void emit(const RunConfig& cfg, const std::string& name, const std::string& content) {
  write_file(out_path(cfg, name), content);
  std::cout << "wrote " << name << "\n";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number in list: " + item);
    out.push_back(v);
  }
  return out;
}

RVec parse_direction(const std::string& text, int D, int default_axis) {
  if (text.empty()) {
    RVec e = RVec::Zero(D);
    e(default_axis) = 1.0;
    return e;
  }
  const std::vector<double> v = parse_list(text);
  if (static_cast<int>(v.size()) != D)
    throw std::invalid_argument("direction needs " + std::to_string(D) + " components");
  RVec e(D);
  for (int i = 0; i < D; ++i) e(i) = v[i];
  if (e.norm() == 0.0) throw std::invalid_argument("direction must be nonzero");
  return normalized(e);
}

DirectionSample make_sample(const RunConfig& cfg, int D) {
  if (cfg.sample == "default") return default_sample(D, cfg.level, cfg.count, cfg.seed);
  if (cfg.sample == "random") return random_sample(D, cfg.count, cfg.seed);
  if (D != 3) throw std::invalid_argument("sample '" + cfg.sample + "' needs D = 3");
  if (cfg.sample == "icosphere") return icosphere_sample(cfg.level);
  if (cfg.sample == "fibonacci") return fibonacci_sample(cfg.count);
  throw std::invalid_argument("unknown sample scheme: " + cfg.sample);
}

HypOptions hyp_options(const RunConfig& cfg) {
  HypOptions o;
  o.real_tol = cfg.real_tol;
  o.kappa_max = cfg.kappa_max;
  return o;
}

FTNSSystem load_input(const RunConfig& cfg, std::size_t k = 0) {
  if (cfg.inputs.size() <= k) throw std::invalid_argument("missing input path");
  return load_system(cfg.inputs[k]);
}

std::vector<std::string> basis_labels(const StateBasis& b) {
  std::vector<std::string> out;
  for (int mu = 0; mu < b.blocks(); ++mu)
    for (const Index& t : b.tuples(mu))
      for (int a = 0; a < b.dim(mu); ++a) {
        std::string s = "u" + std::to_string(mu);
        if (!t.empty()) {
          s += "[";
          for (std::size_t q = 0; q < t.size(); ++q) s += (q ? " " : "") + std::to_string(t[q] + 1);
          s += "]";
        }
        if (b.dim(mu) > 1) s += "#" + std::to_string(a + 1);
        out.push_back(s);
      }
  return out;
}

ModalData make_data(const RunConfig& cfg, int components) {
  Rng rng(cfg.seed);
  if (cfg.data == "sine") return sine_mode(components, cfg.wavenumber, rng);
  if (cfg.data == "gaussian") return gaussian_bump(components, cfg.width, cfg.kmax, rng);
  if (cfg.data == "band") return band_limited(components, cfg.kmax, rng);
  throw std::invalid_argument("unknown initial data: " + cfg.data);
}

}  // namespace

void check_config(const RunConfig& c) {
  if (!(c.real_tol > 0.0 && c.kappa_max > 0.0 && c.herm_tol > 0.0))
    throw std::invalid_argument("tolerances must be positive");
  if (c.lambda < 0.0) throw std::invalid_argument("lambda must be positive");
  if (!(c.t_final > 0.0) || !(c.cfl > 0.0)) throw std::invalid_argument("t-final and cfl must be positive");
  if (c.points < 8) throw std::invalid_argument("at least 8 grid points are needed");
  if (c.to_order < 1) throw std::invalid_argument("to-order must be at least 1");
  if (c.level < 0 || c.count < 0 || c.kmax < 1 || !(c.width > 0.0))
    throw std::invalid_argument("level, count, kmax and width must be positive");
}

std::string output_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("FTNS_OUT_DIR"); env && *env) return env;
  return ".";
}

int cmd_validate(const RunConfig& cfg) {
  const FTNSSystem sys = load_input(cfg);
  const std::vector<Violation> v = validate(sys);
  if (v.empty()) {
    std::cout << "valid: N = " << sys.N << ", D = " << sys.D << ", total dimension " << sys.total_dim() << "\n";
    return 0;
  }
  for (const Violation& x : v) std::cout << "violation: " << x.where << ": " << x.message << "\n";
  return kExitError;
}

int cmd_analyze(const RunConfig& cfg) {
  const FTNSSystem sys = load_input(cfg);
  const StrongHypReport r = classify_strong(sys, make_sample(cfg, sys.D), hyp_options(cfg));
  const std::string stem = stem_of(cfg.inputs[0]);
  emit(cfg, stem + ".analysis.txt", report_text(r, sys.label.empty() ? stem : sys.label));
  emit(cfg, stem + ".analysis.csv", report_csv(r));
  std::cout << "verdict: " << to_string(r.verdict) << "\n";
  return exit_code(r.verdict);
}

int cmd_reduce(const RunConfig& cfg) {
  const FTNSSystem sys = load_input(cfg);
  const std::string stem = stem_of(cfg.inputs[0]);
  const DirectionSample sample = make_sample(cfg, sys.D);
  std::ostringstream rep;
  rep << "reduction report: " << stem << "\n";

  if (cfg.direct) {
    DirectReductionVars vars;
    if (cfg.strategy == "file") {
      if (cfg.params.empty()) throw std::invalid_argument("--strategy file needs --params");
      vars = parse_direct_params(read_file(cfg.params[0]), sys);
    } else {
      vars = partial_choice_direct(sys);
    }
    const FTNSSystem ft1s = build_direct_ft1s(sys, vars);
    const StrongHypReport r = classify_strong(ft1s, sample, hyp_options(cfg));
    const ClosureReport cl = direct_constraint_evolution(sys, vars);
    emit(cfg, stem + ".direct.json", serialize_system(ft1s));
    emit(cfg, stem + ".direct.params.json", serialize_direct_params(vars));
    rep << "direct first order reduction, " << vars.size() << " components\n";
    rep << "verdict: " << to_string(r.verdict) << "\n";
    rep << "closure residual: " << fmt(cl.max_residual()) << "\n";
    emit(cfg, stem + ".reduce.txt", rep.str());
    return 0;
  }

  ReductionStrategy st;
  if (cfg.strategy == "partial-epsilon") {
    st.kind = ReductionStrategy::partial_epsilon;
  } else if (cfg.strategy == "zero") {
    st.kind = ReductionStrategy::zero;
  } else if (cfg.strategy == "file") {
    st.kind = ReductionStrategy::explicit_params;
    FTNSSystem cur = sys;
    for (const std::string& p : cfg.params) {
      st.params.push_back(parse_params(read_file(p), cur));
      const auto viol = st.params.back().check(cur);
      if (!viol.empty()) throw TensorError(p + ": " + viol[0].where + ": " + viol[0].message);
      cur = reduce_once(cur, st.params.back()).sys;
    }
  } else {
    throw std::invalid_argument("unknown strategy: " + cfg.strategy);
  }
  st.lambda_override = cfg.lambda;
  const std::vector<ReductionLevel> levels = iterate_to_first_order(sys, st, sample, cfg.to_order);
  for (const ReductionLevel& lv : levels) {
    const FTNSSystem& s = lv.red.sys;
    const std::string name = stem + ".order" + std::to_string(s.N);
    emit(cfg, name + ".json", serialize_system(s));
    emit(cfg, name + ".params.json", serialize_params(lv.red.params));
    const StrongHypReport r = classify_strong(s, sample, hyp_options(cfg));
    rep << "order " << s.N << ": verdict " << to_string(r.verdict);
    if (st.kind == ReductionStrategy::partial_epsilon)
      rep << ", lambda " << fmt(lv.lambda) << " (" << lv.retries << " resonance retries)";
    rep << "\n";
  }
  if (levels.empty()) rep << "already at order " << sys.N << "\n";
  emit(cfg, stem + ".reduce.txt", rep.str());
  return 0;
}

int cmd_symmetrize(const RunConfig& cfg) {
  const FTNSSystem sys = load_input(cfg);
  const std::string stem = stem_of(cfg.inputs[0]);
  const StateBasis basis = compressed_basis(sys);
  std::ostringstream rep;
  rep << "symmetrizer report: " << stem << "\n";
  const CandidateSolution cand = solve_candidate(sys);
  rep << "candidate status: " << to_string(cand.status) << "\n";
  rep << "candidate space dimension: " << cand.nullity << "\n";
  rep << "min eigenvalue of the best candidate: " << fmt(cand.min_eigenvalue) << "\n";
  rep << "search iterations: " << cand.iterations << "\n";
  if (cand.nullity > 0) emit(cfg, stem + ".HN.json", serialize_matrix(cand.H.G, basis_labels(basis)));
  int code = 0;
  if (cand.status == CandidateSolution::infeasible) {
    code = kExitInfeasible;
  } else if (cand.status == CandidateSolution::candidate_only) {
    rep << "no positive definite candidate found (search is heuristic)\n";
    code = kExitCandidateOnly;
  } else {
    const JMode mode = cfg.j_mode == "permutation" ? JMode::permutation_ansatz : JMode::least_norm;
    if (cfg.j_mode != "permutation" && cfg.j_mode != "least-norm")
      throw std::invalid_argument("unknown J mode: " + cfg.j_mode);
    const JSolution js = solve_J(sys, cand.H, mode);
    rep << "J system: " << js.unknowns << " unknowns, " << js.equations << " equations, rank " << js.rank << "\n";
    rep << "candidate defect: " << fmt(js.v_sym_residual) << "\n";
    rep << "linear residual: " << fmt(js.lin_residual) << "\n";
    rep << "first order Hermiticity residual: " << fmt(js.herm_residual) << "\n";
    if (!js.note.empty()) rep << "note: " << js.note << "\n";
    const bool ok = js.ok && js.herm_residual <= cfg.herm_tol;
    if (js.ft1s.N == 1 && js.H1.size()) {
      emit(cfg, stem + ".H1.json", serialize_matrix(js.H1, js.params.labels()));
      emit(cfg, stem + ".Dbar.json", serialize_direct_params(js.params));
      emit(cfg, stem + ".ft1s.json", serialize_system(js.ft1s));
    }
    if (ok) {
      const SymCandidate back = extract_HN_from_H1(js.H1, js.params);
      rep << "round trip |H_N - extract(H1)|: " << fmt((back.G - cand.H.G).cwiseAbs().maxCoeff()) << "\n";
      rep << "chain verified\n";
    } else {
      rep << "chain failed\n";
      code = kExitChainFailure;
    }
  }
  emit(cfg, stem + ".symmetrize.txt", rep.str());
  std::cout << "status: " << to_string(cand.status) << (code == 0 ? ", chain verified" : "") << "\n";
  return code;
}

int cmd_evolve(const RunConfig& cfg) {
  const FTNSSystem sys = load_input(cfg);
  require_valid(sys);
  const std::string stem = stem_of(cfg.inputs[0]);
  if (cfg.mode == "fourier") {
    FourierModeRun run;
    run.s = parse_direction(cfg.direction, sys.D, sys.D - 1);
    run.omegas = parse_list(cfg.omegas);
    run.t_final = cfg.t_final;
    const GrowthTable g = fourier_evolve(sys, run);
    emit(cfg, stem + ".growth.csv", growth_csv(g));
    std::cout << "slope: " << fmt(g.slope) << "\n";
    return 0;
  }
  if (cfg.mode != "grid") throw std::invalid_argument("unknown evolve mode: " + cfg.mode);
  GridRun run;
  run.points = cfg.points;
  run.t_final = cfg.t_final;
  run.cfl = cfg.cfl;
  run.direction = parse_direction(cfg.direction, sys.D, 0);
  run.record_every = cfg.record_every;
  const ModalData data = make_data(cfg, sys.total_dim());
  Mat G;
  if (!cfg.symmetrizer.empty()) G = parse_matrix(read_file(cfg.symmetrizer));
  const GridSeries s = grid_evolve(sys, run, data.sample(run.points), G);
  emit(cfg, stem + ".series.csv", series_csv(s));
  if (s.unstable) {
    std::cout << s.diagnostic << "\n";
    return kExitUnstable;
  }
  if (cfg.refine) {
    const SelfConvergence c = self_convergence(sys, run, data);
    std::ostringstream os;
    os << "points," << run.points << "\ndiff_coarse," << fmt(c.diff_coarse) << "\ndiff_fine," << fmt(c.diff_fine)
       << "\norder," << fmt(c.order) << "\n";
    emit(cfg, stem + ".convergence.csv", os.str());
    std::cout << "convergence order: " << fmt(c.order) << "\n";
  }
  if (cfg.compare_direct && sys.N > 1) {
    const Discrepancy d = compare_parent_child(sys, partial_choice_direct(sys), run, data);
    std::ostringstream os;
    os << "t,discrepancy,constraint\n";
    for (std::size_t k = 0; k < d.t.size(); ++k)
      os << fmt(d.t[k]) << ',' << fmt(d.discrepancy[k]) << ',' << fmt(d.constraint[k]) << '\n';
    emit(cfg, stem + ".compare.csv", os.str());
    if (d.child.unstable) {
      std::cout << d.child.diagnostic << "\n";
      return kExitUnstable;
    }
  }
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw std::invalid_argument("missing input path");
  std::ostringstream rep;
  for (const std::string& path : cfg.inputs) {
    const FTNSSystem sys = load_system(path);
    rep << "system: " << stem_of(path) << "\n";
    rep << "N = " << sys.N << ", D = " << sys.D << ", dims";
    for (int n : sys.dims) rep << " " << n;
    rep << "\n";
    const std::vector<Violation> v = validate(sys);
    rep << "violations: " << v.size() << "\n";
    if (!v.empty()) {
      rep << "\n";
      continue;
    }
    const StrongHypReport r = classify_strong(sys, make_sample(cfg, sys.D), hyp_options(cfg));
    rep << "strong hyperbolicity: " << to_string(r.verdict) << " (M estimate " << fmt(r.M_estimate) << ")\n";
    const CandidateSolution c = solve_candidate(sys);
    rep << "symmetrizer candidate: " << to_string(c.status) << " (space dimension " << c.nullity
        << ", min eigenvalue " << fmt(c.min_eigenvalue) << ")\n";
    FourierModeRun run;
    run.s = parse_direction(cfg.direction, sys.D, sys.D - 1);
    run.omegas = parse_list(cfg.omegas);
    const GrowthTable g = fourier_evolve(sys, run);
    rep << "fourier log-growth slope: " << fmt(g.slope) << "\n\n";
  }
  emit(cfg, "report.txt", rep.str());
  return 0;
}

int cmd_example(const RunConfig& cfg) {
  FTNSSystem s;
  if (cfg.example == "wave") {
    s = wave_system(3);
  } else if (cfg.example == "companion") {
    s = companion_chain(3);
  } else if (cfg.example == "zero") {
    s = FTNSSystem::zero(2, 3, {1, 1}, "zero");
  } else if (cfg.example == "advection") {
    RVec c(3);
    c << 1.0, 0.5, -0.25;
    s = advection_system(2, c, {1, 1});
  } else if (cfg.example == "random") {
    Rng rng(cfg.seed);
    s = reverse_engineered_system(3, 3, {1, 1, 1}, rng).sys;
  } else {
    throw std::invalid_argument("unknown example: " + cfg.example);
  }
  emit(cfg, cfg.example + ".json", serialize_system(s));
  return 0;
}

}  // namespace ftns::cli
