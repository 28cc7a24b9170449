#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assistgrid/grid.hpp"
#include "assistgrid/policy.hpp"
#include "assistgrid/rng.hpp"

namespace assistgrid {

enum class ObjectiveKind {
  Empowerment,
  AvE,
  DiscreteChoice,
  EntropicChoice,
  JointEmpowerment,
  RandomBaseline,
};

const char* objective_name(ObjectiveKind k);
std::optional<ObjectiveKind> objective_from_name(const std::string& name);

// Behavior of the non-subject human inside hypothetical rollouts.
enum class CounterfactualMode { FrozenSampled, FrozenGreedy };

struct RolloutConfig {
  int horizon = 5;        // T
  int num_sequences = 64; // K
  int num_repeats = 4;    // M
  AgentId subject = AgentId::User;
  CounterfactualMode mode = CounterfactualMode::FrozenSampled;
  // Enumerate every |A|^T subject sequence (in odometer order) instead of
  // sampling K of them; lets the estimators match exact_objective bit-for-bit.
  bool exhaustive = false;
};

// Frozen human policies used inside rollouts. A null entry means that human
// plays Stay, which keeps small oracle setups policy-free.
struct FrozenPolicies {
  const PolicyParams<float>* user = nullptr;
  const PolicyParams<float>* bystander = nullptr;

  const PolicyParams<float>* of(AgentId h) const {
    return h == AgentId::User ? user : bystander;
  }
};

struct ObjectiveEstimate {
  double value = 0.0;
  ObjectiveKind kind = ObjectiveKind::Empowerment;
  AgentId subject = AgentId::User;
  int horizon = 0;
  int num_sequences = 0;
  int num_repeats = 0;
};

// K sampled subject action sequences, each rolled out M times.
struct RolloutBatch {
  int K = 0;
  int M = 0;
  AgentId subject = AgentId::User;
  int horizon = 0;
  std::vector<std::vector<Action>> sequences;  // K entries of length T
  std::vector<Cell> finals;                    // K*M, index k*M + m
};

class TooLarge : public std::runtime_error {
 public:
  explicit TooLarge(const std::string& msg) : std::runtime_error(msg) {}
};

// Hypothetical rollouts from `state`: the subject replays a uniformly drawn
// action sequence, the other human follows its frozen policy per cfg.mode,
// and the assistant plays Stay. The input state is not modified.
RolloutBatch sample_rollouts(const GridState& state, const RolloutConfig& cfg,
                             const FrozenPolicies& policies, Rng& rng);

ObjectiveEstimate estimate_empowerment(const RolloutBatch& batch);
ObjectiveEstimate estimate_ave(const RolloutBatch& batch);
ObjectiveEstimate estimate_discrete_choice(const RolloutBatch& batch);
ObjectiveEstimate estimate_entropic_choice(const RolloutBatch& batch);

ObjectiveEstimate estimate_joint_empowerment(const GridState& state, const RolloutConfig& cfg_user,
                                             const RolloutConfig& cfg_bystander,
                                             const FrozenPolicies& policies, Rng& rng);

// Brute-force ground truth: enumerates all |A|^T subject sequences under a
// deterministic (greedy) channel. Throws TooLarge beyond 10^6 sequences.
ObjectiveEstimate exact_objective(const GridState& state, ObjectiveKind kind, int horizon,
                                  AgentId subject, const FrozenPolicies& policies);

// Assistant reward signal: the requested objective evaluated at the post-step
// state with subject = user (or both, for joint empowerment).
double objective_reward(const GridState& state_after_step, ObjectiveKind kind,
                        const RolloutConfig& cfg_user, const RolloutConfig& cfg_bystander,
                        const FrozenPolicies& policies, Rng& rng);

}  // namespace assistgrid
