#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "assistgrid/grid.hpp"
#include "assistgrid/objectives.hpp"
#include "assistgrid/policy.hpp"

namespace assistgrid {

// Index into the per-kind objective arrays below.
int objective_index(ObjectiveKind k);  // Empowerment 0, AvE 1, DC 2, EC 3

struct PhaseOneResult {
  PolicyParams<float> user;
  PolicyParams<float> bystander;
  std::vector<double> user_reward_curve;       // mean reward per epoch
  std::vector<double> bystander_reward_curve;
};

struct EpochRecord {
  int epoch = 0;
  ObjectiveKind kind = ObjectiveKind::RandomBaseline;
  std::uint64_t seed = 0;
  // Mean objective value per estimator kind (Empowerment, AvE, DC, EC), for
  // each human, averaged over all env steps of the epoch. One rollout batch
  // per subject per step feeds all four estimators, so a RandomBaseline run
  // doubles as the comparison level for every objective.
  std::array<double, 4> user_obj_all{};
  std::array<double, 4> bystander_obj_all{};
  double user_obj = 0;        // value for `kind` (empowerment for joint/baseline)
  double bystander_obj = 0;
  double user_reward = 0;     // mean per env step
  double bystander_reward = 0;
  double freeze_freq = 0;     // fraction of steps the assistant played Freeze
  double boxmove_freq = 0;    // fraction of steps with a box push/pull/move event
  std::map<std::string, double> action_freq;  // per assistant action tag
};

// Phase 1: both humans learn via PPO on their own rewards while the
// assistant plays uniformly random legal actions.
PhaseOneResult train_humans_phase(const Layout& layout, const PpoConfig& cfg, int epochs,
                                  Rng& rng);

struct AssistantTrainResult {
  PolicyParams<float> params;  // untouched initialization for RandomBaseline
  std::vector<EpochRecord> records;
};

// Phase 2: humans act from frozen phase-1 policies (sampled); the assistant
// learns PPO on objective_reward(kind). RandomBaseline skips learning and
// logs a uniform-random assistant.
AssistantTrainResult train_assistant_phase(const Layout& layout, const PhaseOneResult& frozen,
                                           ObjectiveKind kind, const PpoConfig& ppo_cfg,
                                           const RolloutConfig& rollout_cfg, int epochs, Rng& rng,
                                           std::uint64_t seed_label = 0);

// Frozen-policy evaluation: full episodes, no learning, one aggregate record.
// Null assistant params mean a uniform-random assistant.
EpochRecord evaluate(const Layout& layout, const PolicyParams<float>& user,
                     const PolicyParams<float>& bystander,
                     const PolicyParams<float>* assistant, int episodes,
                     const RolloutConfig& rollout_cfg, Rng& rng,
                     SampleMode humans_mode = SampleMode::Sample);

}  // namespace assistgrid
