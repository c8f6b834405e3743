#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "cbi/params.hpp"
#include "cbi/rng.hpp"
#include "cbi/types.hpp"

namespace cbi {

struct SimConfig {
  AdmissibleParams params;
  Vector x0;
  double horizon = 1.0;
  double step = 0.0;  // 0: 1e-3 * horizon
  long n_paths = 100000;
  std::uint64_t seed = 0;
  bool record_states = false;
  std::vector<double> snapshot_times;  // states recorded at these times

  double step_or_default() const {
    return step > 0.0 ? step : 1e-3 * horizon;
  }
};

struct JumpEvent {
  double time;
  Vector size;
  int channel;  // -1: immigration, otherwise 0-based branching channel
  bool from_immigration() const { return channel < 0; }
};

struct PathRecord {
  std::vector<JumpEvent> events;                 // time-ordered
  std::vector<std::pair<double, Vector>> states;  // snapshots, time-ordered
  // running integral int_0^t X_u du at the same snapshot times
  std::vector<std::pair<double, Vector>> integrals;
  Vector terminal;
  long floor_corrections = 0;
  long thinning_restarts = 0;

  const Vector& state_at_snapshot(std::size_t k) const {
    return states.at(k).second;
  }
  const Vector& integral_at_snapshot(std::size_t k) const {
    return integrals.at(k).second;
  }
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n = 0;
};

struct EstimatorSpec {
  std::string name;
  bool probability = false;  // binomial standard error
  std::function<double(const PathRecord&)> statistic;
};

struct BatchReport {
  std::vector<std::string> names;
  std::vector<McEstimate> estimates;
  long n_paths = 0;
  long floor_corrections = 0;
  long thinning_restarts = 0;
  std::vector<std::string> warnings;  // e.g. floor budget exceeded

  std::string to_csv() const;
  std::string to_json() const;
  const McEstimate& by_name(const std::string& name) const;
};

// Hybrid exact/Euler scheme for one path of the jump SDE:
//   - immigration jumps: homogeneous Poisson at rate nu(U_d), sizes drawn
//     from the normalized atoms;
//   - branching jumps in channel l: thinning at intensity X_l * mu_l(U_d)
//     against a per-step bound 1.5 * X_l(step start) * mu_l(U_d); the step
//     is redone with a doubled bound whenever the intensity outruns it;
//   - drift beta + (B + D) X and diffusion sqrt(2 c_l max(0, X_l)) dW_l by
//     Euler-Maruyama between events, where D is the diagonal compensator
//     correction, so that raw jumps plus drift reproduce the effective-drift
//     mean flow;
//   - states floored at 0 with a per-path correction counter.
PathRecord simulate_path(const SimConfig& cfg, long path_index);

// Runs n_paths simulations fanned over worker threads. Each path draws from
// a Philox stream keyed by (seed, path index), and per-path statistics are
// reduced in path order, so the report is byte-identical for any worker
// count. n_workers = 0 picks the hardware concurrency.
BatchReport run_batch(const SimConfig& cfg,
                      const std::vector<EstimatorSpec>& estimators,
                      int n_workers = 0);

// Per-path statistics behind the standard estimators.
double path_count_in(const PathRecord& rec, const JumpSet& A, double t);
bool path_has_event_in(const PathRecord& rec, const JumpSet& A, double t);
double path_max_event_norm(const PathRecord& rec, double t);
Vector path_coordinate_sup(const PathRecord& rec, Index d, double t);

EstimatorSpec survival_estimator(const JumpSet& A, double t,
                                 std::string name = "survival");
EstimatorSpec jump_count_estimator(const JumpSet& A, double t,
                                   std::string name = "jump_count");
EstimatorSpec sup_norm_cdf_estimator(double r, double t,
                                     std::string name = "sup_norm_cdf");
EstimatorSpec sup_in_set_estimator(const JumpSet& A, Index d, double t,
                                   std::string name = "sup_in_set");

McEstimate estimate_survival_tau(const SimConfig& cfg, const JumpSet& A,
                                 double t, int n_workers = 0);
McEstimate estimate_jump_count(const SimConfig& cfg, const JumpSet& A,
                               double t, int n_workers = 0);
McEstimate estimate_sup_norm_cdf(const SimConfig& cfg, double r, double t,
                                 int n_workers = 0);
// P(coordinate-wise supremum of jump sizes lies in A); the supremum is the
// zero vector when the path has no jumps, which no JumpSet contains.
McEstimate estimate_rect_sup_prob(const SimConfig& cfg, const JumpSet& A,
                                  double t, int n_workers = 0);
McEstimate estimate_sup_in_set(const SimConfig& cfg, const JumpSet& A,
                               double t, int n_workers = 0);

// Streams the event log of the first n_paths paths as CSV rows
// (path, time, channel, size_1..size_d). Single-threaded, deterministic.
void dump_events_csv(const SimConfig& cfg, long n_paths, std::ostream& os);

}  // namespace cbi
