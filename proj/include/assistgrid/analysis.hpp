#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "assistgrid/objectives.hpp"

namespace assistgrid {

class CurveTooShort : public std::runtime_error {
 public:
  explicit CurveTooShort(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateSample : public std::runtime_error {
 public:
  explicit DegenerateSample(const std::string& msg) : std::runtime_error(msg) {}
};

// mean(last `window` epochs) - mean(first `window` epochs).
double empowerment_change(const std::vector<double>& curve, int window);

// True iff the user's objective rose while the bystander's fell (strict).
bool classify_disempowerment(double user_delta, double bystander_delta);

struct WelchResult {
  double t = 0;
  double df = 0;
  double p = 1;  // two-sided
};

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct ChangeSummary {
  double user_delta = 0;       // mean across seeds
  double bystander_delta = 0;
  int window = 5;
  std::vector<double> per_seed_user;
  std::vector<double> per_seed_bystander;
};

struct RunCurves {
  std::vector<double> user_obj;
  std::vector<double> bystander_obj;
  std::vector<double> user_reward;
  std::vector<double> bystander_reward;
};

struct LayoutResult {
  std::string layout_id;
  ObjectiveKind kind = ObjectiveKind::Empowerment;
  ChangeSummary change;
  bool disempowered = false;
  double final_user_reward = 0;      // mean over last window, across seeds
  double final_bystander_reward = 0;
};

LayoutResult summarize_runs(const std::string& layout_id, ObjectiveKind kind,
                            const std::vector<RunCurves>& per_seed, int window);

struct SweepBucket {
  int total = 0;
  int disempowered = 0;
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(disempowered) / total; }
};

struct SweepReport {
  std::map<std::string, SweepBucket> by_objective;  // keyed by objective_name

  // Populated when both Empowerment and JointEmpowerment results cover
  // common layouts: how joint training moved the bystander, and what it cost
  // the user.
  bool has_joint_comparison = false;
  double bystander_increased_fraction = 0;   // joint bystander_delta > 0
  double bystander_unaffected_fraction = 0;  // joint bystander_delta >= 0
  WelchResult bystander_delta_test;          // joint vs empowerment deltas
  double bystander_delta_d = 0;
  WelchResult user_reward_test;              // joint vs empowerment final user reward
  double user_reward_d = 0;
};

SweepReport aggregate_sweep(const std::vector<LayoutResult>& results);

}  // namespace assistgrid
