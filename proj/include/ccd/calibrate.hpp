#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ccd/cascade.hpp"
#include "ccd/errors.hpp"
#include "ccd/simulate.hpp"

namespace ccd {

enum class CalibrationGoal {
  kMeanSize2,       // mean cascade size (singletons included) equals 2
  kSingleton20Pct,  // 20% of cascades consist of one node
};

inline CalibrationGoal parse_calibration_goal(const std::string& s) {
  if (s == "mean-size-2") return CalibrationGoal::kMeanSize2;
  if (s == "singleton-20pct") return CalibrationGoal::kSingleton20Pct;
  throw ValidationError("unknown calibration goal '" + s + "'");
}

inline CalibrationGoal default_goal(CascadeModel model) {
  return model == CascadeModel::kCSiBd ? CalibrationGoal::kSingleton20Pct : CalibrationGoal::kMeanSize2;
}

struct CalibrationOptions {
  std::size_t batch = 2000;     // cascades per probe
  double tolerance = 0.10;      // relative, on the target statistic
  double start_rate = 1e-6;
  double max_rate = 1e6;
  double in_out_ratio = 10.0;   // C-SI-BD: alpha_in = ratio * alpha_out
  int max_bisections = 60;
  unsigned workers = 1;
};

struct CascadeStats {
  double mean_size = 0.0;
  double singleton_fraction = 0.0;
};

inline CascadeStats cascade_stats(const CascadeSet& cs) {
  CascadeStats s;
  if (cs.empty()) return s;
  std::size_t total = 0, singles = 0;
  for (const Cascade& c : cs.cascades) {
    total += c.size();
    singles += c.size() == 1;
  }
  s.mean_size = static_cast<double>(total) / static_cast<double>(cs.size());
  s.singleton_fraction = static_cast<double>(singles) / static_cast<double>(cs.size());
  return s;
}

// Finds the free rate of `model` (alpha for SIR / SI-BD, alpha_out with
// alpha_in = ratio * alpha_out for C-SI-BD) that meets `goal`. Every probe
// reuses the same cascade seeds, so the statistic is monotone in the rate and
// plain bisection on log-rate applies. The target must be strictly inside
// the range the statistic attains; a target only reached in the infinite-rate
// limit is reported as a CalibrationError.
inline EpidemicParams calibrate(const SimulationTarget& target, CascadeModel model, CalibrationGoal goal,
                                EpidemicParams base, Seed seed, const CalibrationOptions& opt = {}) {
  auto with_rate = [&](double rate) {
    EpidemicParams p = base;
    if (model == CascadeModel::kCSiBd) {
      p.alpha_out = rate;
      p.alpha_in = opt.in_out_ratio * rate;
    } else {
      p.alpha = rate;
    }
    return p;
  };
  // Increasing in the rate for both goals.
  const double goal_value = goal == CalibrationGoal::kMeanSize2 ? 2.0 : 0.8;
  auto statistic = [&](double rate) {
    const auto cs = generate_cascades(target, model, with_rate(rate), opt.batch, seed, opt.workers);
    const auto s = cascade_stats(cs);
    return goal == CalibrationGoal::kMeanSize2 ? s.mean_size : 1.0 - s.singleton_fraction;
  };

  double lo = opt.start_rate;
  double lo_value = statistic(lo);
  if (!(lo_value < goal_value)) {
    throw CalibrationError("target already exceeded at the smallest rate " + std::to_string(lo));
  }
  double hi = lo, hi_value = lo_value;
  while (!(hi_value > goal_value)) {
    lo = hi, lo_value = hi_value;
    hi *= 4.0;
    if (hi > opt.max_rate) {
      throw CalibrationError("calibration target is not bracketable: statistic stays at or below " +
                             std::to_string(goal_value) + " up to rate " + std::to_string(opt.max_rate));
    }
    hi_value = statistic(hi);
  }
  for (int i = 0; i < opt.max_bisections && hi / lo > 1.0 + 1e-4; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double v = statistic(mid);
    if (v > goal_value) {
      hi = mid, hi_value = v;
    } else {
      lo = mid, lo_value = v;
    }
  }
  const bool pick_hi = std::abs(hi_value - goal_value) <= std::abs(lo_value - goal_value);
  const double rate = pick_hi ? hi : lo;
  const double achieved = pick_hi ? hi_value : lo_value;
  const double reference = goal == CalibrationGoal::kMeanSize2 ? 2.0 : 0.2;
  const double achieved_reference = goal == CalibrationGoal::kMeanSize2 ? achieved : 1.0 - achieved;
  if (std::abs(achieved_reference - reference) > opt.tolerance * reference) {
    throw CalibrationError("calibration did not reach the target within tolerance (got " +
                           std::to_string(achieved_reference) + ")");
  }
  return with_rate(rate);
}

}  // namespace ccd
