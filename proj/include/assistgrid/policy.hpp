#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assistgrid/grid.hpp"
#include "assistgrid/rng.hpp"

namespace assistgrid {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

class DimensionMismatch : public std::runtime_error {
 public:
  explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& msg) : std::runtime_error(msg) {}
};

// Observation layout: one-hot planes over the grid (walls, boxes, user,
// bystander, assistant, key cells, goal cells, own goal for humans) followed
// by three scalars (own key flag, other key flag, freeze timer / 4). The
// assistant's encoding carries no goal-assignment plane: it sees where goals
// exist but not whose they are.
int observation_dim(const Layout& layout, AgentId observer);

template <class S>
void encode_observation_into(const GridState& state, AgentId observer,
                             Eigen::Ref<VecX<S>> out);

template <class S = float>
VecX<S> encode_observation(const GridState& state, AgentId observer) {
  VecX<S> v(observation_dim(*state.layout, observer));
  encode_observation_into<S>(state, observer, v);
  return v;
}

// Feed-forward net with two tanh hidden layers and a linear head. Parameters
// live in one flat vector; layer weights are Eigen maps into it.
template <class S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in, int hidden1, int hidden2, int out);

  static Mlp random_init(int in, int hidden1, int hidden2, int out, S head_scale, Rng& rng);

  int input_dim() const { return in_; }
  int output_dim() const { return out_; }
  VecX<S>& params() { return theta_; }
  const VecX<S>& params() const { return theta_; }

  // Batch forward: one column per sample.
  MatX<S> forward(const MatX<S>& x) const;

  struct Cache {
    MatX<S> x, h1, h2;
  };
  MatX<S> forward(const MatX<S>& x, Cache& cache) const;

  // Accumulates dLoss/dtheta into grad given dLoss/doutput (column-major
  // batch, same shape as the forward output).
  void backward(const Cache& cache, const MatX<S>& dout, VecX<S>& grad) const;

  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);

  friend bool operator==(const Mlp&, const Mlp&) = default;

  // Weight/bias views in declaration order: W1, b1, W2, b2, W3, b3.
  Eigen::Map<const MatX<S>> weight(int layer) const;
  Eigen::Map<const VecX<S>> bias(int layer) const;
  Eigen::Map<MatX<S>> weight(int layer);
  Eigen::Map<VecX<S>> bias(int layer);

 private:
  int in_ = 0, h1_ = 0, h2_ = 0, out_ = 0;
  VecX<S> theta_;
  int rows(int layer) const { return layer == 0 ? h1_ : layer == 1 ? h2_ : out_; }
  int cols(int layer) const { return layer == 0 ? in_ : layer == 1 ? h1_ : h2_; }
  int weight_offset(int layer) const;
  int bias_offset(int layer) const { return weight_offset(layer) + rows(layer) * cols(layer); }
};

// Separate actor and critic networks for one agent.
template <class S>
struct PolicyParams {
  Mlp<S> actor;
  Mlp<S> critic;

  static PolicyParams random_init(int obs_dim, int n_actions, Rng& rng, int hidden = 64);

  int n_actions() const { return actor.output_dim(); }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

template <class S>
void save_policy(const PolicyParams<S>& p, std::ostream& os);
template <class S>
PolicyParams<S> load_policy(std::istream& is);
void save_policy_file(const PolicyParams<float>& p, const std::string& path);
PolicyParams<float> load_policy_file(const std::string& path);

// Softmax action distribution and state value for one observation.
template <class S>
std::pair<VecX<S>, S> forward_policy(const PolicyParams<S>& params, const VecX<S>& obs);

// Batched softmax over logits, one column per sample.
template <class S>
MatX<S> softmax_columns(const MatX<S>& logits);

enum class SampleMode { Sample, Greedy };

// Returns (action index, log-probability). Greedy breaks ties toward the
// lowest action index.
template <class S>
std::pair<int, S> sample_action(const PolicyParams<S>& params, const VecX<S>& obs, Rng& rng,
                                SampleMode mode);

template <class S>
int sample_from_probs(const VecX<S>& probs, Rng& rng);

struct PpoConfig {
  double learning_rate = 3e-4;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int minibatches = 4;
  int update_epochs = 4;
  int num_envs = 16;
  int rollout_len = 128;
  double max_grad_norm = 0.5;
};

// One agent's collected experience: rectangular num_envs x len, flattened
// with column index t * num_envs + env.
template <class S>
struct TrajectoryBatch {
  int num_envs = 0;
  int len = 0;
  MatX<S> obs;             // obs_dim x (num_envs * len)
  std::vector<int> actions;
  VecX<S> log_probs;
  VecX<S> rewards;
  VecX<S> values;
  VecX<S> dones;           // 1 when the episode ended at this step
  VecX<S> bootstrap;       // num_envs values for the state after the last step
};

// Standard generalized advantage estimation (backward recursion).
template <class S>
std::pair<VecX<S>, VecX<S>> gae(const TrajectoryBatch<S>& batch, double gamma, double lambda);

template <class S>
struct AdamState {
  VecX<S> m_actor, v_actor, m_critic, v_critic;
  std::int64_t step = 0;
};

struct PpoDiagnostics {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double grad_norm = 0;
};

// Clipped-surrogate loss over one minibatch view (indices into the batch).
// Exposed so the analytic gradient can be checked against finite differences.
template <class S>
double ppo_loss_and_grad(const PolicyParams<S>& params, const TrajectoryBatch<S>& batch,
                         const std::vector<int>& idx, const VecX<S>& advantages,
                         const VecX<S>& returns, const PpoConfig& cfg,
                         VecX<S>* grad_actor, VecX<S>* grad_critic,
                         PpoDiagnostics* diag = nullptr);

template <class S>
PpoDiagnostics ppo_update(PolicyParams<S>& params, AdamState<S>& opt,
                          const TrajectoryBatch<S>& batch, const PpoConfig& cfg, Rng& rng);

}  // namespace assistgrid
