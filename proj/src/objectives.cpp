#include "assistgrid/objectives.hpp"

#include <cmath>

namespace assistgrid {

const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Empowerment: return "empowerment";
    case ObjectiveKind::AvE: return "ave";
    case ObjectiveKind::DiscreteChoice: return "discrete_choice";
    case ObjectiveKind::EntropicChoice: return "entropic_choice";
    case ObjectiveKind::JointEmpowerment: return "joint_empowerment";
    case ObjectiveKind::RandomBaseline: return "random_baseline";
  }
  return "?";
}

std::optional<ObjectiveKind> objective_from_name(const std::string& name) {
  for (ObjectiveKind k : {ObjectiveKind::Empowerment, ObjectiveKind::AvE,
                          ObjectiveKind::DiscreteChoice, ObjectiveKind::EntropicChoice,
                          ObjectiveKind::JointEmpowerment, ObjectiveKind::RandomBaseline})
    if (name == objective_name(k)) return k;
  return std::nullopt;
}

namespace {

// Final positions are tallied in an ordered map so every consumer reduces in
// the same (ascending-key) order; this is what lets the exhaustive estimator
// and the brute-force oracle agree bit-for-bit.
using Counts = std::map<int, int>;

constexpr int kKeyStride = 4096;

int cell_key(Cell c) { return c.y * kKeyStride + c.x; }

double entropy_nats(const Counts& counts, double total) {
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

double trace_variance(const Counts& counts, double total) {
  double mx = 0.0, my = 0.0;
  for (const auto& [k, c] : counts) {
    mx += c * static_cast<double>(k % kKeyStride);
    my += c * static_cast<double>(k / kKeyStride);
  }
  mx /= total;
  my /= total;
  double vx = 0.0, vy = 0.0;
  for (const auto& [k, c] : counts) {
    const double dx = static_cast<double>(k % kKeyStride) - mx;
    const double dy = static_cast<double>(k / kKeyStride) - my;
    vx += c * dx * dx;
    vy += c * dy * dy;
  }
  return vx / total + vy / total;
}

Action other_action(const GridState& s, AgentId other, const PolicyParams<float>* policy,
                    const std::vector<Action>& other_actions, CounterfactualMode mode, Rng& rng) {
  if (!policy) return Action::stay();
  const VecX<float> obs = encode_observation<float>(s, other);
  auto [probs, value] = forward_policy<float>(*policy, obs);
  (void)value;
  int a;
  if (mode == CounterfactualMode::FrozenGreedy) {
    a = 0;
    for (Eigen::Index i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[a]) a = static_cast<int>(i);
  } else {
    a = sample_from_probs<float>(probs, rng);
  }
  return other_actions[static_cast<std::size_t>(a)];
}

Cell simulate_final(const GridState& start, AgentId subject, const std::vector<Action>& seq,
                    const FrozenPolicies& policies, CounterfactualMode mode,
                    const std::vector<Action>& other_actions, Rng& rng) {
  GridState s = start;
  s.t = 0;  // rollouts are hypothetical; the real episode clock does not apply
  const AgentId other = subject == AgentId::User ? AgentId::Bystander : AgentId::User;
  const PolicyParams<float>* op = policies.of(other);
  for (const Action& a : seq) {
    JointAction ja;
    ja.assistant = Action::stay();
    const Action oa = other_action(s, other, op, other_actions, mode, rng);
    if (subject == AgentId::User) {
      ja.user = a;
      ja.bystander = oa;
    } else {
      ja.user = oa;
      ja.bystander = a;
    }
    s = step(s, ja).next;
  }
  return s.pos(subject);
}

std::uint64_t checked_pow(int base, int exp) {
  std::uint64_t k = 1;
  for (int t = 0; t < exp; ++t) {
    k *= static_cast<std::uint64_t>(base);
    if (k > 1000000ULL)
      throw TooLarge("sequence enumeration " + std::to_string(base) + "^" + std::to_string(exp) +
                     " exceeds 10^6");
  }
  return k;
}

ObjectiveEstimate with_meta(double value, ObjectiveKind kind, const RolloutBatch& batch) {
  ObjectiveEstimate e;
  e.value = value;
  e.kind = kind;
  e.subject = batch.subject;
  e.horizon = batch.horizon;
  e.num_sequences = batch.K;
  e.num_repeats = batch.M;
  return e;
}

}  // namespace

RolloutBatch sample_rollouts(const GridState& state, const RolloutConfig& cfg,
                             const FrozenPolicies& policies, Rng& rng) {
  const Layout& layout = *state.layout;
  const std::vector<Action> subj_actions = action_space(layout, cfg.subject);
  const AgentId other = cfg.subject == AgentId::User ? AgentId::Bystander : AgentId::User;
  const std::vector<Action> other_actions = action_space(layout, other);
  const int n_actions = static_cast<int>(subj_actions.size());

  RolloutBatch batch;
  batch.subject = cfg.subject;
  batch.horizon = cfg.horizon;
  batch.M = cfg.num_repeats;

  if (cfg.exhaustive) {
    const std::uint64_t total = checked_pow(n_actions, cfg.horizon);
    batch.K = static_cast<int>(total);
    batch.sequences.reserve(total);
    for (std::uint64_t k = 0; k < total; ++k) {
      std::vector<Action> seq(static_cast<std::size_t>(cfg.horizon));
      std::uint64_t rem = k;
      for (int t = cfg.horizon - 1; t >= 0; --t) {
        seq[static_cast<std::size_t>(t)] =
            subj_actions[rem % static_cast<std::uint64_t>(n_actions)];
        rem /= static_cast<std::uint64_t>(n_actions);
      }
      batch.sequences.push_back(std::move(seq));
    }
  } else {
    batch.K = cfg.num_sequences;
    batch.sequences.reserve(static_cast<std::size_t>(batch.K));
    for (int k = 0; k < batch.K; ++k) {
      std::vector<Action> seq(static_cast<std::size_t>(cfg.horizon));
      for (int t = 0; t < cfg.horizon; ++t)
        seq[static_cast<std::size_t>(t)] = subj_actions[static_cast<std::size_t>(rng.uniform_int(n_actions))];
      batch.sequences.push_back(std::move(seq));
    }
  }

  batch.finals.resize(static_cast<std::size_t>(batch.K) * batch.M);
  for (int k = 0; k < batch.K; ++k)
    for (int m = 0; m < batch.M; ++m)
      batch.finals[static_cast<std::size_t>(k) * batch.M + m] =
          simulate_final(state, cfg.subject, batch.sequences[static_cast<std::size_t>(k)],
                         policies, cfg.mode, other_actions, rng);
  return batch;
}

ObjectiveEstimate estimate_empowerment(const RolloutBatch& batch) {
  Counts marginal;
  for (const Cell& c : batch.finals) ++marginal[cell_key(c)];
  const double total = static_cast<double>(batch.finals.size());
  const double h_marg = entropy_nats(marginal, total);
  double h_cond_sum = 0.0;
  for (int k = 0; k < batch.K; ++k) {
    Counts cond;
    for (int m = 0; m < batch.M; ++m)
      ++cond[cell_key(batch.finals[static_cast<std::size_t>(k) * batch.M + m])];
    h_cond_sum += entropy_nats(cond, static_cast<double>(batch.M));
  }
  const double mi = h_marg - h_cond_sum / batch.K;
  return with_meta(std::max(0.0, mi), ObjectiveKind::Empowerment, batch);
}

ObjectiveEstimate estimate_ave(const RolloutBatch& batch) {
  Counts counts;
  for (const Cell& c : batch.finals) ++counts[cell_key(c)];
  return with_meta(trace_variance(counts, static_cast<double>(batch.finals.size())),
                   ObjectiveKind::AvE, batch);
}

ObjectiveEstimate estimate_discrete_choice(const RolloutBatch& batch) {
  Counts counts;
  for (const Cell& c : batch.finals) ++counts[cell_key(c)];
  return with_meta(static_cast<double>(counts.size()), ObjectiveKind::DiscreteChoice, batch);
}

ObjectiveEstimate estimate_entropic_choice(const RolloutBatch& batch) {
  Counts counts;
  for (const Cell& c : batch.finals) ++counts[cell_key(c)];
  return with_meta(entropy_nats(counts, static_cast<double>(batch.finals.size())),
                   ObjectiveKind::EntropicChoice, batch);
}

ObjectiveEstimate estimate_joint_empowerment(const GridState& state, const RolloutConfig& cfg_user,
                                             const RolloutConfig& cfg_bystander,
                                             const FrozenPolicies& policies, Rng& rng) {
  RolloutConfig cu = cfg_user;
  cu.subject = AgentId::User;
  RolloutConfig cb = cfg_bystander;
  cb.subject = AgentId::Bystander;
  const RolloutBatch bu = sample_rollouts(state, cu, policies, rng);
  const RolloutBatch bb = sample_rollouts(state, cb, policies, rng);
  ObjectiveEstimate e;
  e.value = estimate_empowerment(bu).value + estimate_empowerment(bb).value;
  e.kind = ObjectiveKind::JointEmpowerment;
  e.subject = AgentId::User;
  e.horizon = cu.horizon;
  e.num_sequences = bu.K;
  e.num_repeats = bu.M;
  return e;
}

namespace {

// Depth-first enumeration of every subject action sequence under the
// deterministic greedy channel, tallying final positions.
void enumerate_finals(const GridState& s, AgentId subject, int depth,
                      const std::vector<Action>& subj_actions,
                      const std::vector<Action>& other_actions, const FrozenPolicies& policies,
                      Counts& counts) {
  if (depth == 0) {
    ++counts[cell_key(s.pos(subject))];
    return;
  }
  const AgentId other = subject == AgentId::User ? AgentId::Bystander : AgentId::User;
  Rng unused(0);
  const Action oa = other_action(s, other, policies.of(other), other_actions,
                                 CounterfactualMode::FrozenGreedy, unused);
  for (const Action& a : subj_actions) {
    JointAction ja;
    ja.assistant = Action::stay();
    if (subject == AgentId::User) {
      ja.user = a;
      ja.bystander = oa;
    } else {
      ja.user = oa;
      ja.bystander = a;
    }
    enumerate_finals(step(s, ja).next, subject, depth - 1, subj_actions, other_actions, policies,
                     counts);
  }
}

}  // namespace

ObjectiveEstimate exact_objective(const GridState& state, ObjectiveKind kind, int horizon,
                                  AgentId subject, const FrozenPolicies& policies) {
  if (kind == ObjectiveKind::JointEmpowerment) {
    ObjectiveEstimate u = exact_objective(state, ObjectiveKind::Empowerment, horizon,
                                          AgentId::User, policies);
    ObjectiveEstimate b = exact_objective(state, ObjectiveKind::Empowerment, horizon,
                                          AgentId::Bystander, policies);
    u.value += b.value;
    u.kind = ObjectiveKind::JointEmpowerment;
    return u;
  }

  const Layout& layout = *state.layout;
  const std::vector<Action> subj_actions = action_space(layout, subject);
  const AgentId other = subject == AgentId::User ? AgentId::Bystander : AgentId::User;
  const std::vector<Action> other_actions = action_space(layout, other);
  const std::uint64_t total = checked_pow(static_cast<int>(subj_actions.size()), horizon);

  GridState start = state;
  start.t = 0;
  Counts counts;
  enumerate_finals(start, subject, horizon, subj_actions, other_actions, policies, counts);

  ObjectiveEstimate e;
  e.kind = kind;
  e.subject = subject;
  e.horizon = horizon;
  e.num_sequences = static_cast<int>(total);
  e.num_repeats = 1;
  const double n = static_cast<double>(total);
  switch (kind) {
    case ObjectiveKind::Empowerment:
      // Deterministic channel: conditional entropy is exactly zero, so the
      // mutual information reduces to the marginal entropy. The subtraction
      // mirrors the estimator so the two stay bit-equal.
      e.value = std::max(0.0, entropy_nats(counts, n) - 0.0);
      break;
    case ObjectiveKind::EntropicChoice:
      e.value = entropy_nats(counts, n);
      break;
    case ObjectiveKind::DiscreteChoice:
      e.value = static_cast<double>(counts.size());
      break;
    case ObjectiveKind::AvE:
      e.value = trace_variance(counts, n);
      break;
    case ObjectiveKind::RandomBaseline:
      e.value = 0.0;
      break;
    case ObjectiveKind::JointEmpowerment:
      break;  // handled above
  }
  return e;
}

double objective_reward(const GridState& state_after_step, ObjectiveKind kind,
                        const RolloutConfig& cfg_user, const RolloutConfig& cfg_bystander,
                        const FrozenPolicies& policies, Rng& rng) {
  switch (kind) {
    case ObjectiveKind::RandomBaseline:
      return 0.0;
    case ObjectiveKind::JointEmpowerment:
      return estimate_joint_empowerment(state_after_step, cfg_user, cfg_bystander, policies, rng)
          .value;
    default:
      break;
  }
  RolloutConfig cfg = cfg_user;
  cfg.subject = AgentId::User;
  const RolloutBatch batch = sample_rollouts(state_after_step, cfg, policies, rng);
  switch (kind) {
    case ObjectiveKind::Empowerment: return estimate_empowerment(batch).value;
    case ObjectiveKind::AvE: return estimate_ave(batch).value;
    case ObjectiveKind::DiscreteChoice: return estimate_discrete_choice(batch).value;
    case ObjectiveKind::EntropicChoice: return estimate_entropic_choice(batch).value;
    default: return 0.0;
  }
}

}  // namespace assistgrid
