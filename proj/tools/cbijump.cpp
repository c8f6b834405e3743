// Command-line driver: loads a parameter file, evaluates the analytic
// distributional formulas over grids, and optionally cross-validates them
// against the Monte Carlo simulator.
//
// Exit status: 0 success (and every cross-validation within 3 standard
// errors), 1 domain or tolerance failure, 2 input error.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cbi/analytics.hpp"
#include "cbi/io.hpp"
#include "cbi/simulate.hpp"

using namespace cbi;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("cannot parse number '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("empty number list: '" + text + "'");
  return out;
}

Vector parse_vector(const std::string& text, Index d, const char* what) {
  const auto nums = parse_number_list(text);
  if (static_cast<Index>(nums.size()) != d)
    throw InputError(std::string(what) + " needs exactly " +
                     std::to_string(d) + " components");
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = nums[static_cast<std::size_t>(i)];
  return v;
}

// 'rect:w1,...' | 'box:l1,..;h1,..' | 'ball-complement:r' |
// 'norm-at-least:r' | 'full' | 'atoms:i1,i2,...' (indices into the
// concatenated atom list nu, mu_1, ..., mu_d)
JumpSet parse_jump_set(const std::string& text, const AdmissibleParams& p) {
  const auto colon = text.find(':');
  const std::string tag = text.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  if (tag == "full") return JumpSet::full_space();
  if (tag == "rect") return JumpSet::rectangle(parse_vector(rest, p.d, "rect"));
  if (tag == "box") {
    const auto semi = rest.find(';');
    if (semi == std::string::npos)
      throw InputError("box needs 'lo;hi' bounds");
    return JumpSet::box(parse_vector(rest.substr(0, semi), p.d, "box lo"),
                        parse_vector(rest.substr(semi + 1), p.d, "box hi"));
  }
  if (tag == "ball-complement")
    return JumpSet::ball_complement(parse_number_list(rest).at(0));
  if (tag == "norm-at-least")
    return JumpSet::norm_at_least(parse_number_list(rest).at(0));
  if (tag == "atoms") {
    std::vector<Vector> all;
    for (const auto& a : p.nu.atoms()) all.push_back(a.point);
    for (const auto& m : p.mu)
      for (const auto& a : m.atoms()) all.push_back(a.point);
    std::vector<Vector> chosen;
    for (double idx : parse_number_list(rest)) {
      const auto k = static_cast<std::size_t>(idx);
      if (k >= all.size())
        throw InputError("atom index " + std::to_string(k) +
                         " out of range (0.." + std::to_string(all.size() - 1) +
                         ")");
      chosen.push_back(all[k]);
    }
    return JumpSet::points(std::move(chosen));
  }
  throw InputError("unknown set spec '" + text + "'");
}

struct CommonOptions {
  std::string params_file;
  std::string out_prefix;
  std::uint64_t seed = 0;
  long paths = 100000;
  double step = 0.0;
  int workers = 0;
  bool mc = false;

  void attach(CLI::App* cmd, bool with_mc = true) {
    cmd->add_option("--params", params_file, "parameter JSON file")
        ->required();
    cmd->add_option("--out", out_prefix, "output file prefix");
    if (with_mc) {
      cmd->add_flag("--mc", mc, "cross-validate with Monte Carlo");
      cmd->add_option("--seed", seed, "simulation seed");
      cmd->add_option("--paths", paths, "number of Monte Carlo paths");
      cmd->add_option("--step", step, "Euler step (default 1e-3 * horizon)");
      cmd->add_option("--workers", workers, "worker threads (0 = auto)");
    }
  }

  AdmissibleParams load() const {
    try {
      return load_params_file(params_file);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
  }

  SimConfig sim_config(const AdmissibleParams& p, const Vector& x,
                       double horizon) const {
    SimConfig cfg;
    cfg.params = p;
    cfg.x0 = x;
    cfg.horizon = horizon;
    cfg.step = step;
    cfg.n_paths = paths;
    cfg.seed = seed;
    return cfg;
  }
};

void write_output(const CommonOptions& opts, const std::string& name,
                  const std::string& content) {
  std::cout << content;
  if (opts.out_prefix.empty()) return;
  const std::string path = opts.out_prefix + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  std::cout << "# wrote " << path << "\n";
}

AdmissibleParams validated(const CommonOptions& opts) {
  AdmissibleParams p = opts.load();
  const auto rep = validate(p);
  if (!rep.ok) {
    std::ostringstream os;
    for (const auto& v : rep.violations) os << v << "; ";
    throw InputError("invalid parameters: " + os.str());
  }
  return p;
}

int cmd_validate(const CommonOptions& opts) {
  const AdmissibleParams p = opts.load();
  const auto rep = validate(p);
  if (rep.ok) {
    std::cout << "ok: admissible parameter set with d = " << p.d << ", "
              << p.nu.atoms().size() << " immigration atom(s), "
              << p.total_levy_measure().atoms().size() -
                     p.nu.atoms().size()
              << " branching atom(s)\n";
    return 0;
  }
  std::cout << "invalid parameter set (" << rep.violations.size()
            << " violation(s)):\n";
  for (const auto& v : rep.violations) std::cout << "  " << v << "\n";
  return 1;
}

int cmd_mechanism(const CommonOptions& opts, const std::string& lambda_text) {
  const AdmissibleParams p = validated(opts);
  const Mechanism mech(p);
  const Vector lam = parse_vector(lambda_text, p.d, "--lambda");
  const Vector phi = mech.phi(lam);
  std::ostringstream os;
  os << "component,phi\n";
  for (Index i = 0; i < p.d; ++i)
    os << (i + 1) << ',' << format_full(phi(i)) << '\n';
  os << "psi," << format_full(mech.psi(lam)) << '\n';
  write_output(opts, "mechanism.csv", os.str());
  return 0;
}

int cmd_laplace(const CommonOptions& opts, const std::string& x_text,
                const std::vector<std::string>& lambda_texts,
                const std::string& t_text, bool integrated) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  std::vector<Vector> lams;
  for (const auto& text : lambda_texts)
    lams.push_back(parse_vector(text, p.d, "--lambda"));
  std::vector<double> ts = parse_number_list(t_text);
  std::sort(ts.begin(), ts.end());
  const double horizon = ts.back();

  std::vector<McEstimate> mc(lams.size() * ts.size());
  if (opts.mc) {
    SimConfig cfg = opts.sim_config(p, x, std::max(horizon, 1e-9));
    cfg.snapshot_times = ts;
    std::vector<EstimatorSpec> est;
    for (std::size_t l = 0; l < lams.size(); ++l) {
      const Vector lam = lams[l];
      for (std::size_t k = 0; k < ts.size(); ++k)
        est.push_back({"laplace_" + std::to_string(l) + "_" +
                           std::to_string(k),
                       false, [k, lam, integrated](const PathRecord& rec) {
                         const Vector& v = integrated
                                               ? rec.integral_at_snapshot(k)
                                               : rec.state_at_snapshot(k);
                         return std::exp(-lam.dot(v));
                       }});
    }
    mc = run_batch(cfg, est, opts.workers).estimates;
  }

  std::ostringstream os;
  os << "lambda,t,analytic"
     << (opts.mc ? ",mc,std_error,abs_dev_over_se" : "") << "\n";
  bool tolerance_ok = true;
  for (std::size_t l = 0; l < lams.size(); ++l) {
    std::ostringstream lam_label;
    for (Index i = 0; i < p.d; ++i)
      lam_label << (i ? ";" : "") << format_full(lams[l](i));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double analytic = integrated
                                  ? laplace_intX(p, x, lams[l], ts[k])
                                  : laplace_X(p, x, lams[l], ts[k]);
      os << lam_label.str() << ',' << format_full(ts[k]) << ','
         << format_full(analytic);
      if (opts.mc) {
        const auto& est = mc[l * ts.size() + k];
        const double dev = std::abs(est.value - analytic);
        const double ratio = est.std_error > 0.0 ? dev / est.std_error
                                                 : (dev > 0.0 ? 1e30 : 0.0);
        os << ',' << format_full(est.value) << ','
           << format_full(est.std_error) << ',' << format_full(ratio);
        if (ratio > 3.0) tolerance_ok = false;
      }
      os << '\n';
    }
  }
  write_output(opts, integrated ? "laplace_int.csv" : "laplace.csv", os.str());

  if (!opts.out_prefix.empty()) {
    // underlying trajectory of the exponent flow for the first lambda
    const Mechanism mech(p);
    const OdeSolution sol = integrated
                                ? solve_vtilde(mech, lams.front(), horizon)
                                : solve_v(mech, lams.front(), horizon);
    if (sol.ok()) {
      const std::string path = opts.out_prefix + "ode.csv";
      std::ofstream ode_out(path, std::ios::binary);
      if (!ode_out) throw InputError("cannot write " + path);
      ode_out << sol.to_csv();
      std::cout << "# wrote " << path << "\n";
    }
  }
  return tolerance_ok ? 0 : 1;
}

int cmd_first_jump(const CommonOptions& opts, const std::string& set_text,
                   const std::string& x_text, const std::string& t_text) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  const JumpSet A = parse_jump_set(set_text, p);
  std::vector<double> ts = parse_number_list(t_text);
  std::sort(ts.begin(), ts.end());
  const double horizon = std::max(ts.back(), 1e-9);

  FirstJumpLaw law(p, A, horizon);

  std::vector<McEstimate> mc(ts.size());
  if (opts.mc) {
    const SimConfig cfg = opts.sim_config(p, x, horizon);
    std::vector<EstimatorSpec> est;
    for (std::size_t k = 0; k < ts.size(); ++k)
      est.push_back(survival_estimator(A, ts[k],
                                       "survival_" + std::to_string(k)));
    mc = run_batch(cfg, est, opts.workers).estimates;
  }

  std::ostringstream os;
  os << "t,analytic" << (opts.mc ? ",mc,std_error,abs_dev_over_se" : "")
     << "\n";
  bool tolerance_ok = true;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double analytic = law.survival(ts[k], x);
    os << format_full(ts[k]) << ',' << format_full(analytic);
    if (opts.mc) {
      const double se = mc[k].std_error;
      const double dev = std::abs(mc[k].value - analytic);
      const double ratio = se > 0.0 ? dev / se : (dev > 0.0 ? 1e30 : 0.0);
      os << ',' << format_full(mc[k].value) << ',' << format_full(se) << ','
         << format_full(ratio);
      if (ratio > 3.0) tolerance_ok = false;
    }
    os << '\n';
  }
  write_output(opts, "first_jump.csv", os.str());
  return tolerance_ok ? 0 : 1;
}

int cmd_sup_jump(const CommonOptions& opts, const std::string& x_text,
                 const std::string& r_text, double t, bool with_zero) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  std::vector<double> rs = parse_number_list(r_text);
  std::sort(rs.begin(), rs.end());

  std::vector<McEstimate> mc(rs.size());
  McEstimate mc_zero;
  if (opts.mc) {
    const SimConfig cfg = opts.sim_config(p, x, t);
    std::vector<EstimatorSpec> est;
    for (std::size_t k = 0; k < rs.size(); ++k)
      est.push_back(
          sup_norm_cdf_estimator(rs[k], t, "cdf_" + std::to_string(k)));
    if (with_zero)
      est.push_back({"zero", true, [t](const PathRecord& rec) {
                       return rec.events.empty() ||
                                      rec.events.front().time > t
                                  ? 1.0
                                  : 0.0;
                     }});
    const auto rep = run_batch(cfg, est, opts.workers);
    for (std::size_t k = 0; k < rs.size(); ++k) mc[k] = rep.estimates[k];
    if (with_zero) mc_zero = rep.estimates.back();
  }

  std::ostringstream os;
  os << "r,analytic" << (opts.mc ? ",mc,std_error,abs_dev_over_se" : "")
     << "\n";
  bool tolerance_ok = true;
  auto emit = [&](const std::string& label, double analytic,
                  const McEstimate& est) {
    os << label << ',' << format_full(analytic);
    if (opts.mc) {
      const double se = est.std_error;
      const double dev = std::abs(est.value - analytic);
      const double ratio = se > 0.0 ? dev / se : (dev > 0.0 ? 1e30 : 0.0);
      os << ',' << format_full(est.value) << ',' << format_full(se) << ','
         << format_full(ratio);
      if (ratio > 3.0) tolerance_ok = false;
    }
    os << '\n';
  };
  if (with_zero) emit("0", sup_jump_zero_prob(p, x, t), mc_zero);
  for (std::size_t k = 0; k < rs.size(); ++k)
    emit(format_full(rs[k]), sup_jump_norm_cdf(p, x, rs[k], t), mc[k]);
  write_output(opts, "sup_jump.csv", os.str());
  return tolerance_ok ? 0 : 1;
}

int cmd_tau_infinity(const CommonOptions& opts, const std::string& set_text,
                     const std::string& x_text) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  const JumpSet A = parse_jump_set(set_text, p);
  const auto res = prob_tau_infinite(p, x, A);
  switch (res.status) {
    case TauInfinityStatus::One:
      std::cout << "One: P(tau_A = infinity) = 1\n";
      break;
    case TauInfinityStatus::Zero:
      std::cout << "Zero: P(tau_A = infinity) = 0\n";
      break;
    case TauInfinityStatus::Value:
      std::cout << "Value: P(tau_A = infinity) = " << format_full(res.value)
                << "\n";
      break;
    case TauInfinityStatus::Undetermined:
      std::cout << "Undetermined\n";
      break;
  }
  std::cout << "  " << res.detail << "\n";
  return 0;
}

int cmd_rect_dichotomy(const CommonOptions& opts, const std::string& set_text,
                       const std::string& x_text, double t) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  const JumpSet A = parse_jump_set(set_text, p);
  const auto res = rect_sup_is_null(p, A, x, t);

  std::ostringstream os;
  switch (res.verdict) {
    case RectVerdict::Null:
      os << "Null";
      break;
    case RectVerdict::Positive:
      os << "Positive";
      break;
    case RectVerdict::OutsideTheorem:
      os << "OutsideTheorem";
      break;
    case RectVerdict::RejectedNotAnchored:
      os << "Rejected";
      break;
  }
  os << ": " << res.detail << "\n";
  if (opts.mc) {
    const SimConfig cfg = opts.sim_config(p, x, t);
    const auto est = estimate_sup_in_set(cfg, A, t, opts.workers);
    os << "mc_estimate," << format_full(est.value) << ",std_error,"
       << format_full(est.std_error) << ",n," << est.n << "\n";
  }
  write_output(opts, "rect_dichotomy.txt", os.str());
  return res.verdict == RectVerdict::RejectedNotAnchored ? 1 : 0;
}

int cmd_irreducibility(const CommonOptions& opts, const std::string& r_text) {
  const AdmissibleParams p = validated(opts);
  const auto rad = irreducibility_radius(p);
  std::ostringstream os;
  if (!rad.applicable) {
    os << "not_applicable: " << rad.reason << "\n";
    write_output(opts, "irreducibility.csv", os.str());
    return 0;
  }
  os << "r0," << format_full(rad.r0) << "\n";
  std::vector<double> rs;
  if (r_text.empty())
    rs = {rad.r0, 2.0 * rad.r0, 10.0 * rad.r0};
  else
    rs = parse_number_list(r_text);
  os << "r,effective_drift_irreducible\n";
  for (double r : rs) {
    const auto mod = modify_for_set(p, JumpSet::ball_complement(r));
    os << format_full(r) << ','
       << (is_irreducible(derive_drift(mod.base).B_tilde) ? 1 : 0) << '\n';
  }
  write_output(opts, "irreducibility.csv", os.str());
  return 0;
}

int cmd_simulate(const CommonOptions& opts, const std::string& x_text,
                 double horizon, const std::string& set_text,
                 const std::string& events_file) {
  const AdmissibleParams p = validated(opts);
  const Vector x = parse_vector(x_text, p.d, "--x");
  const JumpSet A = set_text.empty() ? JumpSet::full_space()
                                     : parse_jump_set(set_text, p);
  SimConfig cfg = opts.sim_config(p, x, horizon);

  if (!events_file.empty()) {
    std::ofstream out(events_file, std::ios::binary);
    if (!out) throw InputError("cannot write " + events_file);
    dump_events_csv(cfg, std::min<long>(cfg.n_paths, 1000), out);
    std::cout << "# wrote " << events_file << "\n";
  }

  const std::vector<EstimatorSpec> est = {
      survival_estimator(A, horizon),
      jump_count_estimator(A, horizon),
      sup_norm_cdf_estimator(support_sup(p.total_levy_measure()), horizon,
                             "sup_norm_at_max"),
  };
  const auto rep = run_batch(cfg, est, opts.workers);
  write_output(opts, "simulate.csv", rep.to_csv());
  if (!opts.out_prefix.empty()) {
    const std::string path = opts.out_prefix + "simulate.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << rep.to_json() << "\n";
    std::cout << "# wrote " << path << "\n";
  }
  std::cout << "# diagnostics: floor_corrections=" << rep.floor_corrections
            << " thinning_restarts=" << rep.thinning_restarts << "\n";
  for (const auto& w : rep.warnings) std::cout << "# warning: " << w << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-analytic jump laws of multi-type branching processes "
               "with immigration, with Monte Carlo cross-validation"};
  app.require_subcommand(1);

  CommonOptions validate_opts, mech_opts, laplace_opts, fj_opts, sup_opts,
      tau_opts, rect_opts, irr_opts, sim_opts;

  auto* c_validate = app.add_subcommand("validate", "check a parameter file");
  validate_opts.attach(c_validate, false);

  auto* c_mech =
      app.add_subcommand("mechanism", "evaluate phi and psi at a point");
  mech_opts.attach(c_mech, false);
  std::string mech_lambda;
  c_mech->add_option("--lambda", mech_lambda, "evaluation point")->required();

  auto* c_laplace = app.add_subcommand(
      "laplace", "transform of the state or of its running integral");
  laplace_opts.attach(c_laplace);
  std::string lap_x, lap_t;
  std::vector<std::string> lap_lambda;
  bool lap_integrated = false;
  c_laplace->add_option("--x", lap_x, "initial state")->required();
  c_laplace->add_option("--lambda", lap_lambda,
                        "transform argument (repeatable)")
      ->required();
  c_laplace->add_option("--t", lap_t, "time grid, comma separated")
      ->required();
  c_laplace->add_flag("--integrated", lap_integrated,
                      "use the running integral of the state");

  auto* c_fj = app.add_subcommand("first-jump",
                                  "survival function of the first jump time");
  fj_opts.attach(c_fj);
  std::string fj_set, fj_x, fj_t;
  c_fj->add_option("--set", fj_set, "jump set spec")->required();
  c_fj->add_option("--x", fj_x, "initial state")->required();
  c_fj->add_option("--t", fj_t, "time grid, comma separated")->required();

  auto* c_sup =
      app.add_subcommand("sup-jump", "cdf of the largest jump norm");
  sup_opts.attach(c_sup);
  std::string sup_x, sup_r;
  double sup_t = 1.0;
  bool sup_zero = false;
  c_sup->add_option("--x", sup_x, "initial state")->required();
  c_sup->add_option("--r", sup_r, "radius grid, comma separated")->required();
  c_sup->add_option("--t", sup_t, "time horizon")->required();
  c_sup->add_flag("--zero", sup_zero, "include the no-jump probability row");

  auto* c_tau = app.add_subcommand("tau-infinity",
                                   "does the first jump in A ever happen");
  tau_opts.attach(c_tau, false);
  std::string tau_set, tau_x;
  c_tau->add_option("--set", tau_set, "jump set spec")->required();
  c_tau->add_option("--x", tau_x, "initial state")->required();

  auto* c_rect = app.add_subcommand(
      "rect-dichotomy", "zero/positive verdict for a rectangle");
  rect_opts.attach(c_rect);
  std::string rect_set, rect_x;
  double rect_t = 1.0;
  c_rect->add_option("--set", rect_set, "rectangle spec")->required();
  c_rect->add_option("--x", rect_x, "initial state")->required();
  c_rect->add_option("--t", rect_t, "time horizon")->required();

  auto* c_irr = app.add_subcommand(
      "irreducibility", "radius past which modifications stay irreducible");
  irr_opts.attach(c_irr, false);
  std::string irr_r;
  c_irr->add_option("--r", irr_r, "radius grid (default r0, 2r0, 10r0)");

  auto* c_sim = app.add_subcommand("simulate", "run the path simulator");
  sim_opts.attach(c_sim);
  std::string sim_x, sim_set, sim_events;
  double sim_t = 1.0;
  c_sim->add_option("--x", sim_x, "initial state")->required();
  c_sim->add_option("--t", sim_t, "time horizon")->required();
  c_sim->add_option("--set", sim_set, "jump set spec (default full)");
  c_sim->add_option("--events", sim_events,
                    "dump an event log CSV (first 1000 paths)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_validate->parsed()) return cmd_validate(validate_opts);
    if (c_mech->parsed()) return cmd_mechanism(mech_opts, mech_lambda);
    if (c_laplace->parsed())
      return cmd_laplace(laplace_opts, lap_x, lap_lambda, lap_t,
                         lap_integrated);
    if (c_fj->parsed()) return cmd_first_jump(fj_opts, fj_set, fj_x, fj_t);
    if (c_sup->parsed())
      return cmd_sup_jump(sup_opts, sup_x, sup_r, sup_t, sup_zero);
    if (c_tau->parsed()) return cmd_tau_infinity(tau_opts, tau_set, tau_x);
    if (c_rect->parsed())
      return cmd_rect_dichotomy(rect_opts, rect_set, rect_x, rect_t);
    if (c_irr->parsed()) return cmd_irreducibility(irr_opts, irr_r);
    if (c_sim->parsed())
      return cmd_simulate(sim_opts, sim_x, sim_t, sim_set, sim_events);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const OdeError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
