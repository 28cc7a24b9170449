#include "assistgrid/trainer.hpp"

#include <cmath>
#include <limits>

namespace assistgrid {

int objective_index(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Empowerment: return 0;
    case ObjectiveKind::AvE: return 1;
    case ObjectiveKind::DiscreteChoice: return 2;
    case ObjectiveKind::EntropicChoice: return 3;
    default: return 0;  // joint and baseline report empowerment
  }
}

namespace {

struct Pick {
  int action = 0;
  float logp = 0;
  float value = 0;
};

Pick pick_action(const PolicyParams<float>& params, const VecX<float>& obs, Rng& rng,
                 SampleMode mode) {
  auto [probs, value] = forward_policy<float>(params, obs);
  int a = 0;
  if (mode == SampleMode::Greedy) {
    for (Eigen::Index i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[a]) a = static_cast<int>(i);
  } else {
    a = sample_from_probs<float>(probs, rng);
  }
  const float logp = std::log(std::max(probs[a], std::numeric_limits<float>::min()));
  return {a, logp, value};
}

TrajectoryBatch<float> make_batch(int obs_dim, int num_envs, int len) {
  TrajectoryBatch<float> b;
  b.num_envs = num_envs;
  b.len = len;
  const int n = num_envs * len;
  b.obs = MatX<float>::Zero(obs_dim, n);
  b.actions.assign(static_cast<std::size_t>(n), 0);
  b.log_probs = VecX<float>::Zero(n);
  b.rewards = VecX<float>::Zero(n);
  b.values = VecX<float>::Zero(n);
  b.dones = VecX<float>::Zero(n);
  b.bootstrap = VecX<float>::Zero(num_envs);
  return b;
}

bool box_event(const std::vector<Event>& events) {
  for (const Event& ev : events)
    if (ev.kind == EventKind::BoxPushed || ev.kind == EventKind::BoxPulled ||
        ev.kind == EventKind::BoxMoved)
      return true;
  return false;
}

// Accumulates the four per-kind objective means for one subject.
struct ObjAccum {
  std::array<double, 4> sum{};
  void add(const RolloutBatch& batch) {
    sum[0] += estimate_empowerment(batch).value;
    sum[1] += estimate_ave(batch).value;
    sum[2] += estimate_discrete_choice(batch).value;
    sum[3] += estimate_entropic_choice(batch).value;
  }
};

double reward_for_kind(ObjectiveKind kind, const RolloutBatch& user_batch,
                       const RolloutBatch& byst_batch) {
  switch (kind) {
    case ObjectiveKind::Empowerment: return estimate_empowerment(user_batch).value;
    case ObjectiveKind::AvE: return estimate_ave(user_batch).value;
    case ObjectiveKind::DiscreteChoice: return estimate_discrete_choice(user_batch).value;
    case ObjectiveKind::EntropicChoice: return estimate_entropic_choice(user_batch).value;
    case ObjectiveKind::JointEmpowerment:
      return estimate_empowerment(user_batch).value + estimate_empowerment(byst_batch).value;
    case ObjectiveKind::RandomBaseline: return 0.0;
  }
  return 0.0;
}

}  // namespace

PhaseOneResult train_humans_phase(const Layout& layout, const PpoConfig& cfg, int epochs,
                                  Rng& rng) {
  const int obs_dim = observation_dim(layout, AgentId::User);
  const std::vector<Action> human_actions = action_space(layout, AgentId::User);
  const std::vector<Action> assistant_actions = action_space(layout, AgentId::Assistant);
  const int n_actions = static_cast<int>(human_actions.size());
  const int n_assist = static_cast<int>(assistant_actions.size());

  PhaseOneResult result;
  result.user = PolicyParams<float>::random_init(obs_dim, n_actions, rng);
  result.bystander = PolicyParams<float>::random_init(obs_dim, n_actions, rng);
  AdamState<float> opt_user, opt_byst;

  std::vector<GridState> states(static_cast<std::size_t>(cfg.num_envs), reset(layout));
  VecX<float> obs_u(obs_dim), obs_b(obs_dim);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    TrajectoryBatch<float> bu = make_batch(obs_dim, cfg.num_envs, cfg.rollout_len);
    TrajectoryBatch<float> bb = make_batch(obs_dim, cfg.num_envs, cfg.rollout_len);
    for (int t = 0; t < cfg.rollout_len; ++t) {
      for (int e = 0; e < cfg.num_envs; ++e) {
        const int i = t * cfg.num_envs + e;
        GridState& s = states[static_cast<std::size_t>(e)];
        encode_observation_into<float>(s, AgentId::User, obs_u);
        encode_observation_into<float>(s, AgentId::Bystander, obs_b);
        const Pick pu = pick_action(result.user, obs_u, rng, SampleMode::Sample);
        const Pick pb = pick_action(result.bystander, obs_b, rng, SampleMode::Sample);
        const int pa = rng.uniform_int(n_assist);

        JointAction ja{human_actions[static_cast<std::size_t>(pu.action)],
                       human_actions[static_cast<std::size_t>(pb.action)],
                       assistant_actions[static_cast<std::size_t>(pa)]};
        StepOutcome out = step(s, ja);

        bu.obs.col(i) = obs_u;
        bu.actions[static_cast<std::size_t>(i)] = pu.action;
        bu.log_probs[i] = pu.logp;
        bu.values[i] = pu.value;
        bu.rewards[i] = static_cast<float>(out.reward_user);
        bb.obs.col(i) = obs_b;
        bb.actions[static_cast<std::size_t>(i)] = pb.action;
        bb.log_probs[i] = pb.logp;
        bb.values[i] = pb.value;
        bb.rewards[i] = static_cast<float>(out.reward_bystander);

        const bool done = out.next.t >= layout.episode_len;
        bu.dones[i] = done ? 1.0f : 0.0f;
        bb.dones[i] = done ? 1.0f : 0.0f;
        s = done ? reset(layout) : out.next;
      }
    }
    for (int e = 0; e < cfg.num_envs; ++e) {
      const GridState& s = states[static_cast<std::size_t>(e)];
      encode_observation_into<float>(s, AgentId::User, obs_u);
      encode_observation_into<float>(s, AgentId::Bystander, obs_b);
      bu.bootstrap[e] = result.user.critic.forward(obs_u)(0, 0);
      bb.bootstrap[e] = result.bystander.critic.forward(obs_b)(0, 0);
    }
    ppo_update(result.user, opt_user, bu, cfg, rng);
    ppo_update(result.bystander, opt_byst, bb, cfg, rng);
    const double n = static_cast<double>(cfg.num_envs) * cfg.rollout_len;
    result.user_reward_curve.push_back(bu.rewards.template cast<double>().sum() / n);
    result.bystander_reward_curve.push_back(bb.rewards.template cast<double>().sum() / n);
  }
  return result;
}

AssistantTrainResult train_assistant_phase(const Layout& layout, const PhaseOneResult& frozen,
                                           ObjectiveKind kind, const PpoConfig& ppo_cfg,
                                           const RolloutConfig& rollout_cfg, int epochs, Rng& rng,
                                           std::uint64_t seed_label) {
  const int obs_dim = observation_dim(layout, AgentId::Assistant);
  const std::vector<Action> human_actions = action_space(layout, AgentId::User);
  const std::vector<Action> assistant_actions = action_space(layout, AgentId::Assistant);
  const int n_assist = static_cast<int>(assistant_actions.size());
  const bool learning = kind != ObjectiveKind::RandomBaseline;

  const FrozenPolicies pol{&frozen.user, &frozen.bystander};
  RolloutConfig cfg_u = rollout_cfg;
  cfg_u.subject = AgentId::User;
  RolloutConfig cfg_b = rollout_cfg;
  cfg_b.subject = AgentId::Bystander;

  AssistantTrainResult result;
  result.params = PolicyParams<float>::random_init(obs_dim, n_assist, rng);
  AdamState<float> opt;

  std::vector<GridState> states(static_cast<std::size_t>(ppo_cfg.num_envs), reset(layout));
  VecX<float> obs_u(observation_dim(layout, AgentId::User));
  VecX<float> obs_b(observation_dim(layout, AgentId::Bystander));
  VecX<float> obs_a(obs_dim);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    TrajectoryBatch<float> ba = make_batch(obs_dim, ppo_cfg.num_envs, ppo_cfg.rollout_len);
    ObjAccum acc_u, acc_b;
    double reward_u = 0, reward_b = 0, reward_a = 0;
    std::map<std::string, double> action_counts;
    double freeze_count = 0, boxmove_count = 0;

    for (int t = 0; t < ppo_cfg.rollout_len; ++t) {
      for (int e = 0; e < ppo_cfg.num_envs; ++e) {
        const int i = t * ppo_cfg.num_envs + e;
        GridState& s = states[static_cast<std::size_t>(e)];
        encode_observation_into<float>(s, AgentId::User, obs_u);
        encode_observation_into<float>(s, AgentId::Bystander, obs_b);
        const Pick pu = pick_action(frozen.user, obs_u, rng, SampleMode::Sample);
        const Pick pb = pick_action(frozen.bystander, obs_b, rng, SampleMode::Sample);

        Pick pa;
        if (learning) {
          encode_observation_into<float>(s, AgentId::Assistant, obs_a);
          pa = pick_action(result.params, obs_a, rng, SampleMode::Sample);
        } else {
          pa.action = rng.uniform_int(n_assist);
        }
        const Action& act_a = assistant_actions[static_cast<std::size_t>(pa.action)];

        JointAction ja{human_actions[static_cast<std::size_t>(pu.action)],
                       human_actions[static_cast<std::size_t>(pb.action)], act_a};
        StepOutcome out = step(s, ja);

        const RolloutBatch mu = sample_rollouts(out.next, cfg_u, pol, rng);
        const RolloutBatch mb = sample_rollouts(out.next, cfg_b, pol, rng);
        acc_u.add(mu);
        acc_b.add(mb);
        const double r = reward_for_kind(kind, mu, mb);

        if (learning) {
          ba.obs.col(i) = obs_a;
          ba.actions[static_cast<std::size_t>(i)] = pa.action;
          ba.log_probs[i] = pa.logp;
          ba.values[i] = pa.value;
          ba.rewards[i] = static_cast<float>(r);
        }
        reward_a += r;
        reward_u += out.reward_user;
        reward_b += out.reward_bystander;
        action_counts[action_tag(act_a)] += 1.0;
        if (act_a.kind == Action::Kind::Freeze) freeze_count += 1.0;
        if (box_event(out.events)) boxmove_count += 1.0;

        const bool done = out.next.t >= layout.episode_len;
        if (learning) ba.dones[i] = done ? 1.0f : 0.0f;
        s = done ? reset(layout) : out.next;
      }
    }

    if (learning) {
      for (int e = 0; e < ppo_cfg.num_envs; ++e) {
        encode_observation_into<float>(states[static_cast<std::size_t>(e)], AgentId::Assistant,
                                       obs_a);
        ba.bootstrap[e] = result.params.critic.forward(obs_a)(0, 0);
      }
      ppo_update(result.params, opt, ba, ppo_cfg, rng);
    }

    const double n = static_cast<double>(ppo_cfg.num_envs) * ppo_cfg.rollout_len;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.kind = kind;
    rec.seed = seed_label;
    for (int j = 0; j < 4; ++j) {
      rec.user_obj_all[static_cast<std::size_t>(j)] = acc_u.sum[static_cast<std::size_t>(j)] / n;
      rec.bystander_obj_all[static_cast<std::size_t>(j)] =
          acc_b.sum[static_cast<std::size_t>(j)] / n;
    }
    const int oi = objective_index(kind);
    rec.user_obj = rec.user_obj_all[static_cast<std::size_t>(oi)];
    rec.bystander_obj = rec.bystander_obj_all[static_cast<std::size_t>(oi)];
    rec.user_reward = reward_u / n;
    rec.bystander_reward = reward_b / n;
    rec.freeze_freq = freeze_count / n;
    rec.boxmove_freq = boxmove_count / n;
    for (auto& [tag, c] : action_counts) rec.action_freq[tag] = c / n;
    result.records.push_back(std::move(rec));
  }
  return result;
}

EpochRecord evaluate(const Layout& layout, const PolicyParams<float>& user,
                     const PolicyParams<float>& bystander,
                     const PolicyParams<float>* assistant, int episodes,
                     const RolloutConfig& rollout_cfg, Rng& rng, SampleMode humans_mode) {
  const std::vector<Action> human_actions = action_space(layout, AgentId::User);
  const std::vector<Action> assistant_actions = action_space(layout, AgentId::Assistant);
  const int n_assist = static_cast<int>(assistant_actions.size());

  const FrozenPolicies pol{&user, &bystander};
  RolloutConfig cfg_u = rollout_cfg;
  cfg_u.subject = AgentId::User;
  RolloutConfig cfg_b = rollout_cfg;
  cfg_b.subject = AgentId::Bystander;

  VecX<float> obs_u(observation_dim(layout, AgentId::User));
  VecX<float> obs_b(observation_dim(layout, AgentId::Bystander));
  VecX<float> obs_a(observation_dim(layout, AgentId::Assistant));

  ObjAccum acc_u, acc_b;
  double reward_u = 0, reward_b = 0;
  std::map<std::string, double> action_counts;
  double freeze_count = 0, boxmove_count = 0, steps = 0;

  for (int ep = 0; ep < episodes; ++ep) {
    GridState s = reset(layout);
    while (s.t < layout.episode_len) {
      encode_observation_into<float>(s, AgentId::User, obs_u);
      encode_observation_into<float>(s, AgentId::Bystander, obs_b);
      const Pick pu = pick_action(user, obs_u, rng, humans_mode);
      const Pick pb = pick_action(bystander, obs_b, rng, humans_mode);
      int pa;
      if (assistant) {
        encode_observation_into<float>(s, AgentId::Assistant, obs_a);
        pa = pick_action(*assistant, obs_a, rng, SampleMode::Sample).action;
      } else {
        pa = rng.uniform_int(n_assist);
      }
      const Action& act_a = assistant_actions[static_cast<std::size_t>(pa)];

      JointAction ja{human_actions[static_cast<std::size_t>(pu.action)],
                     human_actions[static_cast<std::size_t>(pb.action)], act_a};
      StepOutcome out = step(s, ja);

      acc_u.add(sample_rollouts(out.next, cfg_u, pol, rng));
      acc_b.add(sample_rollouts(out.next, cfg_b, pol, rng));
      reward_u += out.reward_user;
      reward_b += out.reward_bystander;
      action_counts[action_tag(act_a)] += 1.0;
      if (act_a.kind == Action::Kind::Freeze) freeze_count += 1.0;
      if (box_event(out.events)) boxmove_count += 1.0;
      steps += 1.0;
      s = out.next;
    }
  }

  EpochRecord rec;
  rec.epoch = 0;
  rec.kind = ObjectiveKind::RandomBaseline;
  for (int j = 0; j < 4; ++j) {
    rec.user_obj_all[static_cast<std::size_t>(j)] = acc_u.sum[static_cast<std::size_t>(j)] / steps;
    rec.bystander_obj_all[static_cast<std::size_t>(j)] =
        acc_b.sum[static_cast<std::size_t>(j)] / steps;
  }
  rec.user_obj = rec.user_obj_all[0];
  rec.bystander_obj = rec.bystander_obj_all[0];
  rec.user_reward = reward_u / steps;
  rec.bystander_reward = reward_b / steps;
  rec.freeze_freq = freeze_count / steps;
  rec.boxmove_freq = boxmove_count / steps;
  for (auto& [tag, c] : action_counts) rec.action_freq[tag] = c / steps;
  return rec;
}

}  // namespace assistgrid
