#include "assistgrid/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace assistgrid {

int observation_dim(const Layout& layout, AgentId observer) {
  const int planes = observer == AgentId::Assistant ? 7 : 8;
  return planes * layout.width * layout.height + 3;
}

template <class S>
void encode_observation_into(const GridState& state, AgentId observer,
                             Eigen::Ref<VecX<S>> out) {
  const Layout& l = *state.layout;
  const int n = l.width * l.height;
  out.setZero();
  auto plane = [&](int p) { return p * n; };
  for (int i = 0; i < n; ++i)
    if (l.wall_mask[static_cast<std::size_t>(i)]) out[plane(0) + i] = S(1);
  for (const Cell& b : state.boxes) out[plane(1) + l.cell_index(b)] = S(1);
  out[plane(2) + l.cell_index(state.user)] = S(1);
  out[plane(3) + l.cell_index(state.bystander)] = S(1);
  if (state.assistant) out[plane(4) + l.cell_index(*state.assistant)] = S(1);
  if (l.key_user) out[plane(5) + l.cell_index(*l.key_user)] = S(1);
  if (l.key_bystander) out[plane(5) + l.cell_index(*l.key_bystander)] = S(1);
  out[plane(6) + l.cell_index(l.goal_user)] = S(1);
  out[plane(6) + l.cell_index(l.goal_bystander)] = S(1);
  int scalars = plane(7);
  if (observer != AgentId::Assistant) {
    out[plane(7) + l.cell_index(l.goal_of(observer))] = S(1);
    scalars = plane(8);
  }
  const AgentId self = observer == AgentId::Assistant ? AgentId::User : observer;
  const AgentId other = self == AgentId::User ? AgentId::Bystander : AgentId::User;
  out[scalars + 0] = state.key_collected(self) ? S(1) : S(0);
  out[scalars + 1] = state.key_collected(other) ? S(1) : S(0);
  out[scalars + 2] = S(state.freeze_timer) / S(4);
}

template <class S>
int Mlp<S>::weight_offset(int layer) const {
  int off = 0;
  for (int k = 0; k < layer; ++k) off += rows(k) * cols(k) + rows(k);
  return off;
}

template <class S>
Mlp<S>::Mlp(int in, int hidden1, int hidden2, int out)
    : in_(in), h1_(hidden1), h2_(hidden2), out_(out) {
  theta_ = VecX<S>::Zero(weight_offset(2) + out_ * h2_ + out_);
}

template <class S>
Eigen::Map<const MatX<S>> Mlp<S>::weight(int layer) const {
  return {theta_.data() + weight_offset(layer), rows(layer), cols(layer)};
}
template <class S>
Eigen::Map<const VecX<S>> Mlp<S>::bias(int layer) const {
  return {theta_.data() + bias_offset(layer), rows(layer)};
}
template <class S>
Eigen::Map<MatX<S>> Mlp<S>::weight(int layer) {
  return {theta_.data() + weight_offset(layer), rows(layer), cols(layer)};
}
template <class S>
Eigen::Map<VecX<S>> Mlp<S>::bias(int layer) {
  return {theta_.data() + bias_offset(layer), rows(layer)};
}

template <class S>
Mlp<S> Mlp<S>::random_init(int in, int hidden1, int hidden2, int out, S head_scale, Rng& rng) {
  Mlp net(in, hidden1, hidden2, out);
  for (int layer = 0; layer < 3; ++layer) {
    auto w = net.weight(layer);
    const S scale = S(1) / std::sqrt(S(w.cols()));
    const S head = layer == 2 ? head_scale : S(1);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) = head * scale * static_cast<S>(rng.gaussian());
    // Biases start at zero.
  }
  return net;
}

template <class S>
MatX<S> Mlp<S>::forward(const MatX<S>& x, Cache& cache) const {
  if (x.rows() != in_)
    throw DimensionMismatch("input dim " + std::to_string(x.rows()) + " != " + std::to_string(in_));
  cache.x = x;
  cache.h1 = ((weight(0) * x).colwise() + bias(0)).array().tanh();
  cache.h2 = ((weight(1) * cache.h1).colwise() + bias(1)).array().tanh();
  return (weight(2) * cache.h2).colwise() + bias(2);
}

template <class S>
MatX<S> Mlp<S>::forward(const MatX<S>& x) const {
  Cache cache;
  return forward(x, cache);
}

template <class S>
void Mlp<S>::backward(const Cache& cache, const MatX<S>& dout, VecX<S>& grad) const {
  if (grad.size() != theta_.size()) grad = VecX<S>::Zero(theta_.size());
  auto gw = [&](int layer) {
    return Eigen::Map<MatX<S>>(grad.data() + weight_offset(layer), rows(layer), cols(layer));
  };
  auto gb = [&](int layer) {
    return Eigen::Map<VecX<S>>(grad.data() + bias_offset(layer), rows(layer));
  };
  gw(2).noalias() += dout * cache.h2.transpose();
  gb(2) += dout.rowwise().sum();
  MatX<S> dh2 = (weight(2).transpose() * dout).array() * (S(1) - cache.h2.array().square());
  gw(1).noalias() += dh2 * cache.h1.transpose();
  gb(1) += dh2.rowwise().sum();
  MatX<S> dh1 = (weight(1).transpose() * dh2).array() * (S(1) - cache.h1.array().square());
  gw(0).noalias() += dh1 * cache.x.transpose();
  gb(0) += dh1.rowwise().sum();
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

float read_f32(std::istream& is) {
  const std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

template <class S>
void Mlp<S>::save(std::ostream& os) const {
  write_u32(os, static_cast<std::uint32_t>(in_));
  write_u32(os, static_cast<std::uint32_t>(h1_));
  write_u32(os, static_cast<std::uint32_t>(h2_));
  write_u32(os, static_cast<std::uint32_t>(out_));
  for (Eigen::Index i = 0; i < theta_.size(); ++i) write_f32(os, static_cast<float>(theta_[i]));
}

template <class S>
Mlp<S> Mlp<S>::load(std::istream& is) {
  const int in = static_cast<int>(read_u32(is));
  const int h1 = static_cast<int>(read_u32(is));
  const int h2 = static_cast<int>(read_u32(is));
  const int out = static_cast<int>(read_u32(is));
  Mlp net(in, h1, h2, out);
  for (Eigen::Index i = 0; i < net.theta_.size(); ++i)
    net.theta_[i] = static_cast<S>(read_f32(is));
  if (!is) throw std::runtime_error("truncated policy checkpoint");
  return net;
}

template <class S>
PolicyParams<S> PolicyParams<S>::random_init(int obs_dim, int n_actions, Rng& rng, int hidden) {
  PolicyParams p;
  p.actor = Mlp<S>::random_init(obs_dim, hidden, hidden, n_actions, S(0.01), rng);
  p.critic = Mlp<S>::random_init(obs_dim, hidden, hidden, 1, S(1), rng);
  return p;
}

static constexpr char kPolicyMagic[4] = {'A', 'G', 'P', 'K'};

template <class S>
void save_policy(const PolicyParams<S>& p, std::ostream& os) {
  os.write(kPolicyMagic, 4);
  write_u32(os, 1);  // format version
  p.actor.save(os);
  p.critic.save(os);
}

template <class S>
PolicyParams<S> load_policy(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kPolicyMagic, 4) != 0)
    throw std::runtime_error("bad policy checkpoint magic");
  if (read_u32(is) != 1) throw std::runtime_error("unsupported policy checkpoint version");
  PolicyParams<S> p;
  p.actor = Mlp<S>::load(is);
  p.critic = Mlp<S>::load(is);
  return p;
}

void save_policy_file(const PolicyParams<float>& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_policy(p, os);
}

PolicyParams<float> load_policy_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_policy<float>(is);
}

template <class S>
MatX<S> softmax_columns(const MatX<S>& logits) {
  MatX<S> p = logits;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    auto col = p.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    col /= col.sum();
  }
  return p;
}

template <class S>
std::pair<VecX<S>, S> forward_policy(const PolicyParams<S>& params, const VecX<S>& obs) {
  MatX<S> logits = params.actor.forward(obs);
  MatX<S> probs = softmax_columns<S>(logits);
  const S value = params.critic.forward(obs)(0, 0);
  return {VecX<S>(probs.col(0)), value};
}

template <class S>
int sample_from_probs(const VecX<S>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += static_cast<double>(probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

template <class S>
std::pair<int, S> sample_action(const PolicyParams<S>& params, const VecX<S>& obs, Rng& rng,
                                SampleMode mode) {
  auto [probs, value] = forward_policy(params, obs);
  (void)value;
  int a = 0;
  if (mode == SampleMode::Greedy) {
    S best = probs[0];
    for (Eigen::Index i = 1; i < probs.size(); ++i)
      if (probs[i] > best) {
        best = probs[i];
        a = static_cast<int>(i);
      }
  } else {
    a = sample_from_probs(probs, rng);
  }
  const S logp = std::log(std::max(probs[a], std::numeric_limits<S>::min()));
  return {a, logp};
}

template <class S>
std::pair<VecX<S>, VecX<S>> gae(const TrajectoryBatch<S>& batch, double gamma, double lambda) {
  const int n = batch.num_envs, len = batch.len;
  VecX<S> adv = VecX<S>::Zero(n * len);
  VecX<S> last = VecX<S>::Zero(n);
  for (int t = len - 1; t >= 0; --t) {
    for (int e = 0; e < n; ++e) {
      const int i = t * n + e;
      const S not_done = S(1) - batch.dones[i];
      const S next_v = t == len - 1 ? batch.bootstrap[e] : batch.values[(t + 1) * n + e];
      const S delta = batch.rewards[i] + S(gamma) * next_v * not_done - batch.values[i];
      last[e] = delta + S(gamma * lambda) * not_done * last[e];
      adv[i] = last[e];
    }
  }
  VecX<S> ret = adv + batch.values;
  return {adv, ret};
}

template <class S>
double ppo_loss_and_grad(const PolicyParams<S>& params, const TrajectoryBatch<S>& batch,
                         const std::vector<int>& idx, const VecX<S>& advantages,
                         const VecX<S>& returns, const PpoConfig& cfg,
                         VecX<S>* grad_actor, VecX<S>* grad_critic, PpoDiagnostics* diag) {
  const int n = static_cast<int>(idx.size());
  MatX<S> x(batch.obs.rows(), n);
  for (int i = 0; i < n; ++i) x.col(i) = batch.obs.col(idx[static_cast<std::size_t>(i)]);

  typename Mlp<S>::Cache actor_cache, critic_cache;
  MatX<S> logits = params.actor.forward(x, actor_cache);
  MatX<S> probs = softmax_columns<S>(logits);
  MatX<S> values = params.critic.forward(x, critic_cache);

  const S eps = S(cfg.clip_epsilon);
  double policy_loss = 0, value_loss = 0, entropy_sum = 0;
  MatX<S> dlogits = MatX<S>::Zero(logits.rows(), n);
  MatX<S> dvalues(1, n);
  for (int i = 0; i < n; ++i) {
    const int j = idx[static_cast<std::size_t>(i)];
    const int a = batch.actions[static_cast<std::size_t>(j)];
    const S adv = advantages[j];
    const S logp = std::log(std::max(probs(a, i), std::numeric_limits<S>::min()));
    const S ratio = std::exp(logp - batch.log_probs[j]);
    const S s1 = ratio * adv;
    const S s2 = std::clamp(ratio, S(1) - eps, S(1) + eps) * adv;
    policy_loss -= static_cast<double>(std::min(s1, s2));
    const bool clipped_off = (adv > 0 && ratio > S(1) + eps) || (adv < 0 && ratio < S(1) - eps);
    S ent = 0;
    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
      const S p = probs(k, i);
      if (p > 0) ent -= p * std::log(p);
    }
    entropy_sum += static_cast<double>(ent);
    // d(-surrogate)/dlogits = -adv*ratio * (onehot - p) when unclipped.
    const S coeff = clipped_off ? S(0) : -adv * ratio / S(n);
    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
      const S onehot = k == a ? S(1) : S(0);
      S g = coeff * (onehot - probs(k, i));
      // d(-entropy_coef * H)/dlogits.
      const S p = probs(k, i);
      if (p > 0) g += S(cfg.entropy_coef) * p * (std::log(p) + ent) / S(n);
      dlogits(k, i) = g;
    }
    const S verr = values(0, i) - returns[j];
    value_loss += 0.5 * static_cast<double>(verr) * static_cast<double>(verr);
    dvalues(0, i) = S(cfg.value_coef) * verr / S(n);
  }
  policy_loss /= n;
  value_loss /= n;
  const double entropy = entropy_sum / n;
  const double total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;

  if (grad_actor) params.actor.backward(actor_cache, dlogits, *grad_actor);
  if (grad_critic) params.critic.backward(critic_cache, dvalues, *grad_critic);
  if (diag) {
    diag->policy_loss = policy_loss;
    diag->value_loss = value_loss;
    diag->entropy = entropy;
  }
  return total;
}

namespace {

template <class S>
void adam_step(VecX<S>& theta, const VecX<S>& grad, VecX<S>& m, VecX<S>& v, std::int64_t t,
               double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (m.size() != theta.size()) {
    m = VecX<S>::Zero(theta.size());
    v = VecX<S>::Zero(theta.size());
  }
  m = S(b1) * m + S(1 - b1) * grad;
  v = (S(b2) * v.array() + S(1 - b2) * grad.array().square()).matrix();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  theta.array() -=
      S(lr) * (m.array() / S(c1)) / ((v.array() / S(c2)).sqrt() + S(eps));
}

}  // namespace

template <class S>
PpoDiagnostics ppo_update(PolicyParams<S>& params, AdamState<S>& opt,
                          const TrajectoryBatch<S>& batch, const PpoConfig& cfg, Rng& rng) {
  auto [adv, ret] = gae(batch, cfg.gamma, cfg.gae_lambda);
  // Advantage normalization over the full batch.
  const S mean = adv.mean();
  const S sd = std::sqrt((adv.array() - mean).square().sum() / S(adv.size()));
  VecX<S> nadv = (adv.array() - mean) / (sd + S(1e-8));

  const int total = batch.num_envs * batch.len;
  std::vector<int> order(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;

  PpoDiagnostics diag;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    const int per = total / cfg.minibatches;
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int lo = mb * per;
      const int hi = mb == cfg.minibatches - 1 ? total : lo + per;
      std::vector<int> idx(order.begin() + lo, order.begin() + hi);
      VecX<S> ga, gc;
      const double loss =
          ppo_loss_and_grad(params, batch, idx, nadv, ret, cfg, &ga, &gc, &diag);
      if (!std::isfinite(loss)) throw NonFiniteLoss("ppo loss diverged");
      const double norm = std::sqrt(static_cast<double>(ga.squaredNorm()) +
                                    static_cast<double>(gc.squaredNorm()));
      diag.grad_norm = norm;
      if (norm > cfg.max_grad_norm && norm > 0) {
        const S scale = S(cfg.max_grad_norm / norm);
        ga *= scale;
        gc *= scale;
      }
      ++opt.step;
      adam_step(params.actor.params(), ga, opt.m_actor, opt.v_actor, opt.step, cfg.learning_rate);
      adam_step(params.critic.params(), gc, opt.m_critic, opt.v_critic, opt.step,
                cfg.learning_rate);
    }
  }
  return diag;
}

// Explicit instantiations: float is the training scalar, double backs the
// finite-difference checks.
template void encode_observation_into<float>(const GridState&, AgentId, Eigen::Ref<VecX<float>>);
template void encode_observation_into<double>(const GridState&, AgentId, Eigen::Ref<VecX<double>>);
template class Mlp<float>;
template class Mlp<double>;
template struct PolicyParams<float>;
template struct PolicyParams<double>;
template void save_policy<float>(const PolicyParams<float>&, std::ostream&);
template PolicyParams<float> load_policy<float>(std::istream&);
template MatX<float> softmax_columns<float>(const MatX<float>&);
template MatX<double> softmax_columns<double>(const MatX<double>&);
template std::pair<VecX<float>, float> forward_policy<float>(const PolicyParams<float>&,
                                                             const VecX<float>&);
template std::pair<VecX<double>, double> forward_policy<double>(const PolicyParams<double>&,
                                                                const VecX<double>&);
template int sample_from_probs<float>(const VecX<float>&, Rng&);
template int sample_from_probs<double>(const VecX<double>&, Rng&);
template std::pair<int, float> sample_action<float>(const PolicyParams<float>&, const VecX<float>&,
                                                    Rng&, SampleMode);
template std::pair<int, double> sample_action<double>(const PolicyParams<double>&,
                                                      const VecX<double>&, Rng&, SampleMode);
template std::pair<VecX<float>, VecX<float>> gae<float>(const TrajectoryBatch<float>&, double,
                                                        double);
template std::pair<VecX<double>, VecX<double>> gae<double>(const TrajectoryBatch<double>&, double,
                                                           double);
template double ppo_loss_and_grad<float>(const PolicyParams<float>&, const TrajectoryBatch<float>&,
                                         const std::vector<int>&, const VecX<float>&,
                                         const VecX<float>&, const PpoConfig&, VecX<float>*,
                                         VecX<float>*, PpoDiagnostics*);
template double ppo_loss_and_grad<double>(const PolicyParams<double>&,
                                          const TrajectoryBatch<double>&, const std::vector<int>&,
                                          const VecX<double>&, const VecX<double>&,
                                          const PpoConfig&, VecX<double>*, VecX<double>*,
                                          PpoDiagnostics*);
template PpoDiagnostics ppo_update<float>(PolicyParams<float>&, AdamState<float>&,
                                          const TrajectoryBatch<float>&, const PpoConfig&, Rng&);
template PpoDiagnostics ppo_update<double>(PolicyParams<double>&, AdamState<double>&,
                                           const TrajectoryBatch<double>&, const PpoConfig&, Rng&);

}  // namespace assistgrid
