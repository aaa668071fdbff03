#include "hsa/sim/metrics.hpp"

#include <cmath>
#include <limits>

#include "hsa/error.hpp"

namespace hsa::sim {

double rmse(const std::vector<Eigen::Vector2d>& reference,
            const std::vector<Eigen::Vector2d>& actual) {
  if (reference.size() != actual.size()) throw InvalidArgument("rmse: length mismatch");
  if (reference.empty()) throw InvalidArgument("rmse: empty sequences");
  double sum = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) sum += (reference[k] - actual[k]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(reference.size()));
}

double trajectory_rmse(const Trajectory& traj) {
  std::vector<Eigen::Vector2d> ref, act;
  for (const auto& s : traj.samples()) {
    if (!s.ref.allFinite()) continue;
    ref.push_back(s.ref);
    act.push_back(s.ee.position());
  }
  return rmse(ref, act);
}

std::vector<StepMetrics> step_metrics(const Trajectory& traj, const std::vector<double>& step_times,
                                      double settle_threshold) {
  if (traj.empty()) throw InvalidArgument("step_metrics: empty trajectory");
  if (step_times.empty()) throw InvalidArgument("step_metrics: no step times");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepMetrics> out;
  std::size_t i = 0;
  const auto& s = traj.samples();
  for (std::size_t k = 0; k < step_times.size(); ++k) {
    const double t0 = step_times[k];
    const double t1 = k + 1 < step_times.size() ? step_times[k + 1]
                                                : std::numeric_limits<double>::infinity();
    while (i < s.size() && s[i].t < t0 - 1e-12) ++i;
    const std::size_t first = i;
    while (i < s.size() && s[i].t < t1 - 1e-12) ++i;
    if (first == i) throw InvalidArgument("step_metrics: step without samples");

    StepMetrics m;
    m.t_start = t0;
    m.t_end = std::isfinite(t1) ? t1 : s[i - 1].t;
    m.target = s[first].ref;
    if (!m.target.allFinite()) throw InvalidArgument("step_metrics: step has no reference");
    auto err = [&](std::size_t j) { return (s[j].ref - s[j].ee.position()).norm(); };
    m.initial_error = err(first);
    m.final_error = err(i - 1);
    m.time_to_90 = nan;
    for (std::size_t j = first; j < i; ++j) {
      if (err(j) <= 0.1 * m.initial_error) {
        m.time_to_90 = s[j].t - t0;
        break;
      }
    }
    m.settle_time = nan;
    for (std::size_t j = i; j-- > first;) {
      if (err(j) >= settle_threshold) {
        if (j + 1 < i) m.settle_time = s[j + 1].t - t0;
        break;
      }
      if (j == first) m.settle_time = 0.0;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace hsa::sim
