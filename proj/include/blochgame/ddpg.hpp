// Deep deterministic policy gradient agent.
//
// The actor maps the 32x32 magnitude image through six convolutional
// layers (widths 32, 32, 64, 64, 128, 128, stride-2 downsampling on
// layers 2, 4 and 6) and three dense layers (256, 128, 64) to five
// tanh-bounded outputs in [-1, 1]: PE index, TE, TR, flip angle, shape
// guess. The critic runs the flattened image through 1024 -> 24 -> 48 and
// the action through a mirrored 5 -> 24 -> 48 branch, concatenates, and
// maps 96 -> 24 -> 1.
//
// Actions live in raw [-1, 1] space everywhere inside the agent and the
// replay buffer; scale_action converts to scanner units (rounding PE and
// guess to integers) only at the environment boundary.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "blochgame/game.hpp"
#include "blochgame/nn.hpp"
#include "blochgame/nn_io.hpp"
#include "blochgame/recon.hpp"

namespace blochgame {

// Fixed gain applied to observations before they enter either network;
// undoes the display normalization so pixel values sit near unit scale.
inline constexpr double kObsGain = 1024.0;

struct Hyperparams {
  double gamma = 0.99;
  double tau = 0.001;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int batch = 64;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_frac = 0.5;  // fraction of training over which epsilon anneals
};

// epsilon for training progress in [0, 1]
double epsilon_at(const Hyperparams& hp, double progress);

using RawAction = std::array<float, 5>;  // pe, te, tr, flip, guess

struct ScaledAction {
  AcqParams acq;
  ShapeKind guess;
};

// Affine map of each raw coordinate onto its scanner range; PE index and
// guess round half-up to integers.
ScaledAction scale_action(const RawAction& a);

struct Transition {
  std::vector<float> obs;       // 1024, raw magnitude image
  RawAction action;
  float reward;
  std::vector<float> next_obs;  // 1024
  bool done;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000) : capacity_(capacity) {}

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest retained transition
  const Transition& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  // uniform with replacement over current contents
  std::vector<std::size_t> sample_indices(int n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_{0};  // insertion point once full
  std::vector<Transition> items_;
};

template <class S>
nn::Sequential<S> build_actor() {
  nn::Sequential<S> net;
  const int widths[6] = {32, 32, 64, 64, 128, 128};
  int in_ch = 1;
  for (int i = 0; i < 6; ++i) {
    net.template add<nn::Conv2dLayer<S>>(in_ch, widths[i], 3, i % 2 == 1 ? 2 : 1);
    net.template add<nn::ReluLayer<S>>();
    in_ch = widths[i];
  }
  net.template add<nn::FlattenLayer<S>>();
  net.template add<nn::DenseLayer<S>>(4 * 4 * 128, 256);
  net.template add<nn::ReluLayer<S>>();
  net.template add<nn::DenseLayer<S>>(256, 128);
  net.template add<nn::ReluLayer<S>>();
  net.template add<nn::DenseLayer<S>>(128, 64);
  net.template add<nn::ReluLayer<S>>();
  auto& out = net.template add<nn::DenseLayer<S>>(64, 5);
  out.set_init_bound(3e-3);
  net.template add<nn::TanhScaleLayer<S>>(std::vector<double>(5, -1.0), std::vector<double>(5, 1.0));
  return net;
}

template <class S>
struct Critic {
  nn::Sequential<S> state_trunk, action_trunk, head;

  static Critic build() {
    Critic c;
    c.state_trunk.template add<nn::DenseLayer<S>>(1024, 24);
    c.state_trunk.template add<nn::ReluLayer<S>>();
    c.state_trunk.template add<nn::DenseLayer<S>>(24, 48);
    c.state_trunk.template add<nn::ReluLayer<S>>();
    c.action_trunk.template add<nn::DenseLayer<S>>(5, 24);
    c.action_trunk.template add<nn::ReluLayer<S>>();
    c.action_trunk.template add<nn::DenseLayer<S>>(24, 48);
    c.action_trunk.template add<nn::ReluLayer<S>>();
    c.head.template add<nn::DenseLayer<S>>(96, 24);
    c.head.template add<nn::ReluLayer<S>>();
    auto& out = c.head.template add<nn::DenseLayer<S>>(24, 1);
    out.set_init_bound(3e-3);
    return c;
  }

  void init(Rng& rng) {
    state_trunk.init(rng);
    action_trunk.init(rng);
    head.init(rng);
  }

  // state: (n, 1024), action: (n, 5) -> q: (n, 1)
  nn::Tensor<S> forward(const nn::Tensor<S>& state, const nn::Tensor<S>& action, bool cache = true) {
    nn::Tensor<S> ts = state_trunk.forward(state, cache);
    nn::Tensor<S> ta = action_trunk.forward(action, cache);
    nn::Tensor<S> cat = nn::Tensor<S>::rank2(ts.shape[0], ts.shape[1] + ta.shape[1]);
    cat.mat().topRows(ts.shape[1]) = ts.mat();
    cat.mat().bottomRows(ta.shape[1]) = ta.mat();
    split_ = ts.shape[1];
    return head.forward(cat, cache);
  }

  // accumulates gradients in all three trunks; returns dq/d(action input)
  nn::Tensor<S> backward(const nn::Tensor<S>& dq) {
    nn::Tensor<S> dcat = head.backward(dq);
    nn::Tensor<S> ds = nn::Tensor<S>::rank2(dcat.shape[0], split_);
    nn::Tensor<S> da = nn::Tensor<S>::rank2(dcat.shape[0], dcat.shape[1] - split_);
    ds.mat() = dcat.mat().topRows(split_);
    da.mat() = dcat.mat().bottomRows(dcat.shape[1] - split_);
    state_trunk.backward(ds);
    return action_trunk.backward(da);
  }

  std::vector<nn::ParamView<S>> params() {
    std::vector<nn::ParamView<S>> out;
    const std::array<std::pair<const char*, nn::Sequential<S>*>, 3> trunks{
        {{"state", &state_trunk}, {"action", &action_trunk}, {"head", &head}}};
    for (const auto& [prefix, trunk] : trunks)
      for (auto p : trunk->params()) {
        p.name = std::string(prefix) + "." + p.name;
        out.push_back(std::move(p));
      }
    return out;
  }

 private:
  Eigen::Index split_{48};
};

struct TrainStats {
  float critic_loss;
  float actor_objective;  // mean Q(s, actor(s)) over the batch
};

class DdpgAgent {
 public:
  DdpgAgent(const Hyperparams& hp, std::uint64_t init_seed);

  // epsilon-greedy: uniform raw action with probability eps, else the
  // deterministic actor output
  RawAction act(const MagnitudeImage& obs, double eps, Rng& rng);

  void push(Transition t) { buffer_.push(std::move(t)); }
  const ReplayBuffer& buffer() const { return buffer_; }
  bool ready_to_train() const { return buffer_.size() >= static_cast<std::size_t>(hp_.batch); }

  // One DDPG update: critic toward r + gamma (1-done) Q'(s', mu'(s')),
  // actor up the critic's action gradient, then soft target updates.
  TrainStats train_step(Rng& rng);

  void save(const std::string& dir);
  void load(const std::string& dir);

  nn::Sequential<float>& actor() { return actor_; }
  Critic<float>& critic() { return critic_; }
  nn::Sequential<float>& actor_target() { return actor_target_; }
  Critic<float>& critic_target() { return critic_target_; }
  const Hyperparams& hyperparams() const { return hp_; }

 private:
  Hyperparams hp_;
  nn::Sequential<float> actor_, actor_target_;
  Critic<float> critic_, critic_target_;
  nn::Adam<float> actor_adam_, critic_adam_;
  ReplayBuffer buffer_;
};

// theta_target <- tau * theta + (1 - tau) * theta_target
void soft_update(std::vector<nn::ParamView<float>> target, std::vector<nn::ParamView<float>> online,
                 double tau);

// Observation(s) to network tensors, with the fixed input gain applied.
nn::Tensor<float> obs_to_tensor4(const std::vector<const float*>& obs_batch);
nn::Tensor<float> image_to_tensor4(const MagnitudeImage& img);

// Deterministic actor output for one observation (no exploration).
RawAction actor_act(nn::Sequential<float>& actor, const MagnitudeImage& obs);

// JSON block describing action scaling and input gain, stored in
// checkpoint manifests.
std::string agent_meta_json(const Hyperparams& hp);

}  // namespace blochgame
