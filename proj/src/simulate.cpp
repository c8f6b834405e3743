#include "cbi/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace cbi {

namespace {

struct SampledMeasure {
  double total = 0.0;
  std::vector<double> cumulative;
  std::vector<Vector> points;

  explicit SampledMeasure(const AtomicLevyMeasure& m) {
    double acc = 0.0;
    for (const auto& a : m.atoms()) {
      acc += a.weight;
      cumulative.push_back(acc);
      points.push_back(a.point);
    }
    total = acc;
  }

  const Vector& sample(PhiloxRng& rng) const {
    const double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u > cumulative[k]) ++k;
    return points[k];
  }
};

// Immutable per-config plan shared across workers.
struct SimPlan {
  Index d;
  Vector beta;
  Matrix B_drift;  // B plus the diagonal compensator correction
  Vector c;
  bool any_diffusion = false;
  SampledMeasure nu;
  std::vector<SampledMeasure> mu;
  std::vector<double> grid;  // step boundaries, snapshots merged in
  std::vector<std::size_t> snapshot_grid_index;
  bool record_states;

  explicit SimPlan(const SimConfig& cfg)
      : d(cfg.params.d),
        beta(cfg.params.beta),
        c(cfg.params.c),
        nu(cfg.params.nu),
        record_states(cfg.record_states) {
    const ValidationReport rep = validate(cfg.params);
    if (!rep.ok)
      throw std::invalid_argument("invalid parameters: " + rep.violations[0]);
    if (cfg.x0.size() != d)
      throw std::invalid_argument("x0 dimension mismatch");
    if (!(cfg.x0.array() >= 0.0).all())
      throw std::invalid_argument("x0 must lie in the orthant");
    if (!(cfg.horizon > 0.0))
      throw std::invalid_argument("horizon must be positive");
    if (cfg.step_or_default() > cfg.horizon * (1.0 + 1e-12))
      throw std::invalid_argument("step exceeds horizon");
    if (cfg.n_paths < 1)
      throw std::invalid_argument("need at least one path");

    // Raw jumps absorb the compensator into the drift:
    // B_drift[i][i] = B[i][i] - int (z_i ^ 1) mu_i(dz).
    B_drift = cfg.params.B;
    for (Index i = 0; i < d; ++i) {
      double s = 0.0;
      for (const auto& a : cfg.params.mu[i].atoms())
        s += a.weight * std::min(a.point(i), 1.0);
      B_drift(i, i) -= s;
    }
    for (Index l = 0; l < d; ++l) {
      mu.emplace_back(cfg.params.mu[l]);
      if (c(l) > 0.0) any_diffusion = true;
    }

    const double h = cfg.step_or_default();
    const long n_steps = std::max(1L, static_cast<long>(
                                          std::ceil(cfg.horizon / h - 1e-9)));
    grid.reserve(n_steps + cfg.snapshot_times.size() + 1);
    for (long k = 0; k <= n_steps; ++k)
      grid.push_back(std::min(cfg.horizon, k * h));
    grid.back() = cfg.horizon;
    for (double s : cfg.snapshot_times) {
      if (s < 0.0 || s > cfg.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("snapshot time outside [0, horizon]");
      grid.push_back(std::min(s, cfg.horizon));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double s : cfg.snapshot_times) {
      const double key = std::min(s, cfg.horizon);
      const auto it = std::lower_bound(grid.begin(), grid.end(), key);
      snapshot_grid_index.push_back(
          static_cast<std::size_t>(it - grid.begin()));
    }
  }
};

struct Candidate {
  double time;
  int channel;  // -1 immigration, else branching channel
};

class PathSimulator {
 public:
  PathSimulator(const SimPlan& plan, const SimConfig& cfg)
      : plan_(plan), cfg_(cfg), x_(plan.d), drift_(plan.d) {}

  void run(long path_index, PathRecord& rec) {
    PhiloxRng rng(cfg_.seed, static_cast<std::uint64_t>(path_index));
    rec.events.clear();
    rec.states.clear();
    rec.integrals.clear();
    rec.floor_corrections = 0;
    rec.thinning_restarts = 0;
    x_ = cfg_.x0;
    integral_.setZero(plan_.d);

    std::size_t grid_pos = 0;
    maybe_snapshot(rec, grid_pos, 0.0);
    for (grid_pos = 1; grid_pos < plan_.grid.size(); ++grid_pos) {
      const double t0 = plan_.grid[grid_pos - 1];
      const double t1 = plan_.grid[grid_pos];
      step(rng, rec, t0, t1);
      maybe_snapshot(rec, grid_pos, t1);
    }
    rec.terminal = x_;
  }

 private:
  void maybe_snapshot(PathRecord& rec, std::size_t grid_pos, double t) {
    if (plan_.record_states) {
      rec.states.emplace_back(t, x_);
      rec.integrals.emplace_back(t, integral_);
      return;
    }
    for (std::size_t k = 0; k < plan_.snapshot_grid_index.size(); ++k)
      if (plan_.snapshot_grid_index[k] == grid_pos) {
        rec.states.emplace_back(t, x_);
        rec.integrals.emplace_back(t, integral_);
      }
  }

  // Euler-Maruyama from s0 to s1, state floored at 0.
  void advance(PhiloxRng& rng, PathRecord& rec, double s0, double s1) {
    const double delta = s1 - s0;
    if (delta <= 0.0) return;
    integral_ += delta * x_;
    drift_.noalias() = plan_.B_drift * x_;
    drift_ += plan_.beta;
    x_ += delta * drift_;
    if (plan_.any_diffusion) {
      const double sq = std::sqrt(delta);
      for (Index l = 0; l < plan_.d; ++l) {
        if (plan_.c(l) <= 0.0) continue;
        const double vol = std::sqrt(2.0 * plan_.c(l) * std::max(0.0, x_(l)));
        x_(l) += vol * sq * rng.normal();
      }
    }
    for (Index i = 0; i < plan_.d; ++i) {
      if (x_(i) < 0.0) {
        x_(i) = 0.0;
        ++rec.floor_corrections;
      }
    }
  }

  void step(PhiloxRng& rng, PathRecord& rec, double t0, double t1) {
    const double h = t1 - t0;
    const Vector x_start = x_;
    const Vector integral_start = integral_;
    bounds_.assign(static_cast<std::size_t>(plan_.d), 0.0);
    for (Index l = 0; l < plan_.d; ++l)
      bounds_[l] = 1.5 * std::max(0.0, x_start(l)) * plan_.mu[l].total;

    const std::size_t events_mark = rec.events.size();
    for (;;) {
      bool redo = false;
      candidates_.clear();
      const long n_imm = rng.poisson(plan_.nu.total * h);
      for (long k = 0; k < n_imm; ++k)
        candidates_.push_back({t0 + rng.uniform() * h, -1});
      for (Index l = 0; l < plan_.d; ++l) {
        const long n_br = rng.poisson(bounds_[l] * h);
        for (long k = 0; k < n_br; ++k)
          candidates_.push_back({t0 + rng.uniform() * h,
                                 static_cast<int>(l)});
      }
      std::sort(candidates_.begin(), candidates_.end(),
                [](const Candidate& a, const Candidate& b) {
                  if (a.time != b.time) return a.time < b.time;
                  return a.channel < b.channel;
                });

      double cursor = t0;
      for (const Candidate& cand : candidates_) {
        advance(rng, rec, cursor, cand.time);
        cursor = cand.time;
        if (cand.channel < 0) {
          const Vector& z = plan_.nu.sample(rng);
          x_ += z;
          rec.events.push_back({cand.time, z, -1});
        } else {
          const Index l = cand.channel;
          const double intensity = x_(l) * plan_.mu[l].total;
          if (intensity > bounds_[l]) {
            bounds_[l] *= 2.0;
            redo = true;
            break;
          }
          if (rng.uniform() * bounds_[l] < intensity) {
            const Vector& z = plan_.mu[l].sample(rng);
            x_ += z;
            rec.events.push_back({cand.time, z, cand.channel});
          }
        }
      }
      if (!redo) {
        advance(rng, rec, cursor, t1);
        return;
      }
      // the intensity outran the bound: rewind and redo the whole step
      x_ = x_start;
      integral_ = integral_start;
      rec.events.resize(events_mark);
      ++rec.thinning_restarts;
    }
  }

  const SimPlan& plan_;
  const SimConfig& cfg_;
  Vector x_;
  Vector integral_;
  Vector drift_;
  std::vector<double> bounds_;
  std::vector<Candidate> candidates_;
};

}  // namespace

PathRecord simulate_path(const SimConfig& cfg, long path_index) {
  const SimPlan plan(cfg);
  PathSimulator sim(plan, cfg);
  PathRecord rec;
  sim.run(path_index, rec);
  return rec;
}

BatchReport run_batch(const SimConfig& cfg,
                      const std::vector<EstimatorSpec>& estimators,
                      int n_workers) {
  const SimPlan plan(cfg);
  const long n = cfg.n_paths;
  const std::size_t ne = estimators.size();

  std::vector<std::vector<double>> values(ne);
  for (auto& v : values) v.resize(static_cast<std::size_t>(n));

  if (n_workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n_workers = hw == 0 ? 1 : static_cast<int>(hw);
  }
  n_workers = static_cast<int>(
      std::min<long>(n, static_cast<long>(n_workers)));

  std::atomic<long> next{0};
  std::vector<long> floor_counts(static_cast<std::size_t>(n_workers), 0);
  std::vector<long> restart_counts(static_cast<std::size_t>(n_workers), 0);
  constexpr long kChunk = 64;

  auto work = [&](int worker) {
    PathSimulator sim(plan, cfg);
    PathRecord rec;
    for (;;) {
      const long begin = next.fetch_add(kChunk);
      if (begin >= n) break;
      const long end = std::min(n, begin + kChunk);
      for (long i = begin; i < end; ++i) {
        sim.run(i, rec);
        for (std::size_t e = 0; e < ne; ++e)
          values[e][static_cast<std::size_t>(i)] =
              estimators[e].statistic(rec);
        floor_counts[worker] += rec.floor_corrections;
        restart_counts[worker] += rec.thinning_restarts;
      }
    }
  };

  if (n_workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  BatchReport report;
  report.n_paths = n;
  for (long f : floor_counts) report.floor_corrections += f;
  for (long r : restart_counts) report.thinning_restarts += r;
  const double substeps =
      static_cast<double>(n) * static_cast<double>(plan.grid.size() - 1);
  if (report.floor_corrections > 0.01 * substeps)
    report.warnings.push_back(
        "floor corrections exceed 1% of substeps (" +
        std::to_string(report.floor_corrections) + " of ~" +
        std::to_string(static_cast<long>(substeps)) +
        "); the step may be too coarse for this diffusion");
  for (std::size_t e = 0; e < ne; ++e) {
    report.names.push_back(estimators[e].name);
    McEstimate est;
    est.n = n;
    double sum = 0.0;
    for (long i = 0; i < n; ++i)
      sum += values[e][static_cast<std::size_t>(i)];
    est.value = sum / static_cast<double>(n);
    if (estimators[e].probability) {
      est.std_error =
          std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(n));
    } else {
      double ss = 0.0;
      for (long i = 0; i < n; ++i) {
        const double dlt = values[e][static_cast<std::size_t>(i)] - est.value;
        ss += dlt * dlt;
      }
      est.std_error = n > 1 ? std::sqrt(ss / (static_cast<double>(n) *
                                              static_cast<double>(n - 1)))
                            : 0.0;
    }
    report.estimates.push_back(est);
  }
  return report;
}

std::string BatchReport::to_csv() const {
  std::ostringstream os;
  os << "estimator,value,std_error,n\n";
  char buf[64];
  for (std::size_t e = 0; e < names.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%.17g", estimates[e].value);
    os << names[e] << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", estimates[e].std_error);
    os << ',' << buf << ',' << estimates[e].n << '\n';
  }
  return os.str();
}

std::string BatchReport::to_json() const {
  std::ostringstream os;
  char buf[64];
  os << "{\"n_paths\":" << n_paths
     << ",\"floor_corrections\":" << floor_corrections
     << ",\"thinning_restarts\":" << thinning_restarts << ",\"estimates\":[";
  for (std::size_t e = 0; e < names.size(); ++e) {
    if (e) os << ',';
    os << "{\"name\":\"" << names[e] << "\",\"value\":";
    std::snprintf(buf, sizeof(buf), "%.17g", estimates[e].value);
    os << buf << ",\"std_error\":";
    std::snprintf(buf, sizeof(buf), "%.17g", estimates[e].std_error);
    os << buf << "}";
  }
  os << "]}";
  return os.str();
}

const McEstimate& BatchReport::by_name(const std::string& name) const {
  for (std::size_t e = 0; e < names.size(); ++e)
    if (names[e] == name) return estimates[e];
  throw std::out_of_range("no estimator named " + name);
}

double path_count_in(const PathRecord& rec, const JumpSet& A, double t) {
  long count = 0;
  for (const auto& ev : rec.events) {
    if (ev.time > t) break;
    if (A.contains(ev.size)) ++count;
  }
  return static_cast<double>(count);
}

bool path_has_event_in(const PathRecord& rec, const JumpSet& A, double t) {
  for (const auto& ev : rec.events) {
    if (ev.time > t) break;
    if (A.contains(ev.size)) return true;
  }
  return false;
}

double path_max_event_norm(const PathRecord& rec, double t) {
  double m = 0.0;
  for (const auto& ev : rec.events) {
    if (ev.time > t) break;
    m = std::max(m, ev.size.norm());
  }
  return m;
}

Vector path_coordinate_sup(const PathRecord& rec, Index d, double t) {
  Vector s = Vector::Zero(d);
  for (const auto& ev : rec.events) {
    if (ev.time > t) break;
    s = s.cwiseMax(ev.size);
  }
  return s;
}

EstimatorSpec survival_estimator(const JumpSet& A, double t,
                                 std::string name) {
  return {std::move(name), true, [A, t](const PathRecord& rec) {
            return path_has_event_in(rec, A, t) ? 0.0 : 1.0;
          }};
}

EstimatorSpec jump_count_estimator(const JumpSet& A, double t,
                                   std::string name) {
  return {std::move(name), false, [A, t](const PathRecord& rec) {
            return path_count_in(rec, A, t);
          }};
}

EstimatorSpec sup_norm_cdf_estimator(double r, double t, std::string name) {
  return {std::move(name), true, [r, t](const PathRecord& rec) {
            return path_max_event_norm(rec, t) <= r ? 1.0 : 0.0;
          }};
}

EstimatorSpec sup_in_set_estimator(const JumpSet& A, Index d, double t,
                                   std::string name) {
  return {std::move(name), true, [A, d, t](const PathRecord& rec) {
            return A.contains(path_coordinate_sup(rec, d, t)) ? 1.0 : 0.0;
          }};
}

McEstimate estimate_survival_tau(const SimConfig& cfg, const JumpSet& A,
                                 double t, int n_workers) {
  return run_batch(cfg, {survival_estimator(A, t)}, n_workers).estimates[0];
}

McEstimate estimate_jump_count(const SimConfig& cfg, const JumpSet& A,
                               double t, int n_workers) {
  return run_batch(cfg, {jump_count_estimator(A, t)}, n_workers).estimates[0];
}

McEstimate estimate_sup_norm_cdf(const SimConfig& cfg, double r, double t,
                                 int n_workers) {
  return run_batch(cfg, {sup_norm_cdf_estimator(r, t)}, n_workers)
      .estimates[0];
}

McEstimate estimate_rect_sup_prob(const SimConfig& cfg, const JumpSet& A,
                                  double t, int n_workers) {
  if (A.kind() != JumpSet::Kind::Rectangle && A.kind() != JumpSet::Kind::Box)
    throw std::invalid_argument("rect estimator needs a rectangle or box");
  return estimate_sup_in_set(cfg, A, t, n_workers);
}

McEstimate estimate_sup_in_set(const SimConfig& cfg, const JumpSet& A,
                               double t, int n_workers) {
  return run_batch(cfg, {sup_in_set_estimator(A, cfg.params.d, t)}, n_workers)
      .estimates[0];
}

void dump_events_csv(const SimConfig& cfg, long n_paths, std::ostream& os) {
  const SimPlan plan(cfg);
  PathSimulator sim(plan, cfg);
  PathRecord rec;
  os << "path,time,channel";
  for (Index i = 0; i < cfg.params.d; ++i) os << ",size_" << (i + 1);
  os << '\n';
  char buf[64];
  for (long p = 0; p < n_paths; ++p) {
    sim.run(p, rec);
    for (const auto& ev : rec.events) {
      std::snprintf(buf, sizeof(buf), "%.17g", ev.time);
      os << p << ',' << buf << ',';
      if (ev.from_immigration())
        os << "immigration";
      else
        os << "branching_" << (ev.channel + 1);
      for (Index i = 0; i < ev.size.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", ev.size(i));
        os << ',' << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace cbi
