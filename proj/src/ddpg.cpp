#include "blochgame/ddpg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blochgame {

namespace {

constexpr double kDegree = M_PI / 180.0;

double affine_unit(double a, double lo, double hi) {
  return lo + (std::clamp(a, -1.0, 1.0) + 1.0) / 2.0 * (hi - lo);
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

double epsilon_at(const Hyperparams& hp, double progress) {
  progress = std::clamp(progress, 0.0, 1.0);
  if (progress >= hp.eps_decay_frac) return hp.eps_end;
  return hp.eps_start + (hp.eps_end - hp.eps_start) * progress / hp.eps_decay_frac;
}

ScaledAction scale_action(const RawAction& a) {
  ScaledAction s;
  s.acq.pe_index = round_half_up(affine_unit(a[0], 0.0, 31.0));
  s.acq.te = affine_unit(a[1], kTeMin, kTeMax);
  s.acq.tr = affine_unit(a[2], kTrMin, kTrMax);
  s.acq.flip = affine_unit(a[3], kFlipMinDeg, kFlipMaxDeg) * kDegree;
  s.guess = static_cast<ShapeKind>(round_half_up(affine_unit(a[4], 0.0, 2.0)));
  return s;
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int n, Rng& rng) const {
  std::vector<std::size_t> idx(n);
  for (int i = 0; i < n; ++i)
    idx[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(items_.size()) - 1));
  return idx;
}

nn::Tensor<float> obs_to_tensor4(const std::vector<const float*>& obs_batch) {
  const auto n = static_cast<Eigen::Index>(obs_batch.size());
  nn::Tensor<float> t = nn::Tensor<float>::rank4(n, kGridSize, kGridSize, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < kGridSize * kGridSize; ++k)
      t.v(i * kGridSize * kGridSize + k) = obs_batch[i][k] * static_cast<float>(kObsGain);
  return t;
}

nn::Tensor<float> image_to_tensor4(const MagnitudeImage& img) {
  nn::Tensor<float> t = nn::Tensor<float>::rank4(1, kGridSize, kGridSize, 1);
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j)
      t.v(i * kGridSize + j) = static_cast<float>(img(i, j) * kObsGain);
  return t;
}

RawAction actor_act(nn::Sequential<float>& actor, const MagnitudeImage& obs) {
  nn::Tensor<float> out = actor.forward(image_to_tensor4(obs), /*cache=*/false);
  RawAction a;
  for (int i = 0; i < 5; ++i) a[i] = std::clamp(out.v(i), -1.0f, 1.0f);
  return a;
}

DdpgAgent::DdpgAgent(const Hyperparams& hp, std::uint64_t init_seed)
    : hp_(hp),
      actor_(build_actor<float>()),
      actor_target_(build_actor<float>()),
      critic_(Critic<float>::build()),
      critic_target_(Critic<float>::build()),
      actor_adam_(actor_.params(), hp.lr_actor),
      critic_adam_(critic_.params(), hp.lr_critic) {
  Rng rng(init_seed);
  Rng actor_rng = rng.child("actor_init");
  Rng critic_rng = rng.child("critic_init");
  actor_.init(actor_rng);
  critic_.init(critic_rng);
  soft_update(actor_target_.params(), actor_.params(), 1.0);
  soft_update(critic_target_.params(), critic_.params(), 1.0);
}

RawAction DdpgAgent::act(const MagnitudeImage& obs, double eps, Rng& rng) {
  if (rng.uniform() < eps) {
    RawAction a;
    for (auto& x : a) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return a;
  }
  return actor_act(actor_, obs);
}

TrainStats DdpgAgent::train_step(Rng& rng) {
  const int n = hp_.batch;
  if (buffer_.size() < static_cast<std::size_t>(n))
    throw std::logic_error("train_step: replay buffer smaller than one batch");

  const auto idx = buffer_.sample_indices(n, rng);
  std::vector<const float*> obs(n), next_obs(n);
  nn::Tensor<float> actions = nn::Tensor<float>::rank2(n, 5);
  Eigen::VectorXf rewards(n);
  Eigen::VectorXf not_done(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = buffer_.at(idx[i]);
    obs[i] = t.obs.data();
    next_obs[i] = t.next_obs.data();
    for (int k = 0; k < 5; ++k) actions.v(i * 5 + k) = t.action[k];
    rewards(i) = t.reward;
    not_done(i) = t.done ? 0.0f : 1.0f;
  }

  nn::Tensor<float> s4 = obs_to_tensor4(obs);
  nn::Tensor<float> s2 = s4;
  s2.rank = 2;
  s2.shape = {s4.shape[0], kGridSize * kGridSize, 0, 0};
  nn::Tensor<float> n4 = obs_to_tensor4(next_obs);
  nn::Tensor<float> n2 = n4;
  n2.rank = 2;
  n2.shape = {n4.shape[0], kGridSize * kGridSize, 0, 0};

  // critic target: y = r + gamma (1 - done) Q'(s', mu'(s'))
  nn::Tensor<float> next_action = actor_target_.forward(n4, /*cache=*/false);
  nn::Tensor<float> next_q = critic_target_.forward(n2, next_action, /*cache=*/false);
  nn::Tensor<float> y = nn::Tensor<float>::rank2(n, 1);
  for (int i = 0; i < n; ++i)
    y.v(i) = rewards(i) + static_cast<float>(hp_.gamma) * not_done(i) * next_q.v(i);

  nn::zero_grads(critic_.params());
  nn::Tensor<float> q = critic_.forward(s2, actions);
  const float critic_loss = nn::mse(q, y);
  critic_.backward(nn::mse_grad(q, y));
  critic_adam_.step(critic_.params());

  // actor: ascend mean Q(s, mu(s)) through the critic
  nn::zero_grads(actor_.params());
  nn::zero_grads(critic_.params());
  nn::Tensor<float> a = actor_.forward(s4);
  nn::Tensor<float> qa = critic_.forward(s2, a);
  const float actor_objective = qa.v.mean();
  nn::Tensor<float> dq = qa;
  dq.v.setConstant(-1.0f / static_cast<float>(n));
  nn::Tensor<float> da = critic_.backward(dq);
  actor_.backward(da);
  actor_adam_.step(actor_.params());

  soft_update(actor_target_.params(), actor_.params(), hp_.tau);
  soft_update(critic_target_.params(), critic_.params(), hp_.tau);

  return {critic_loss, actor_objective};
}

void soft_update(std::vector<nn::ParamView<float>> target, std::vector<nn::ParamView<float>> online,
                 double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("soft_update: mismatched networks");
  const auto t = static_cast<float>(tau);
  for (std::size_t i = 0; i < target.size(); ++i) {
    Eigen::Map<Eigen::VectorXf> dst(target[i].value, target[i].size);
    Eigen::Map<const Eigen::VectorXf> src(online[i].value, online[i].size);
    dst = t * src + (1.0f - t) * dst;
  }
}

std::string agent_meta_json(const Hyperparams& hp) {
  nlohmann::json meta;
  meta["action_scaling"] = {
      {"pe_index", {0, 31}}, {"te_s", {kTeMin, kTeMax}}, {"tr_s", {kTrMin, kTrMax}},
      {"flip_deg", {kFlipMinDeg, kFlipMaxDeg}}, {"guess", {0, 2}},
  };
  meta["obs_gain"] = kObsGain;
  meta["hyperparams"] = {{"gamma", hp.gamma},     {"tau", hp.tau},   {"lr_actor", hp.lr_actor},
                         {"lr_critic", hp.lr_critic}, {"batch", hp.batch}};
  return meta.dump();
}

void DdpgAgent::save(const std::string& dir) {
  nn::save_checkpoint(dir,
                      {{"actor", &actor_},
                       {"actor_target", &actor_target_},
                       {"critic.state", &critic_.state_trunk},
                       {"critic.action", &critic_.action_trunk},
                       {"critic.head", &critic_.head},
                       {"critic_target.state", &critic_target_.state_trunk},
                       {"critic_target.action", &critic_target_.action_trunk},
                       {"critic_target.head", &critic_target_.head}},
                      agent_meta_json(hp_));
}

void DdpgAgent::load(const std::string& dir) {
  nn::Checkpoint ckpt = nn::load_checkpoint(dir);
  auto take = [&](const char* name) -> nn::Sequential<float> {
    auto it = ckpt.networks.find(name);
    if (it == ckpt.networks.end())
      throw std::runtime_error(std::string("checkpoint: missing network ") + name);
    return std::move(it->second);
  };
  actor_ = take("actor");
  actor_target_ = take("actor_target");
  critic_.state_trunk = take("critic.state");
  critic_.action_trunk = take("critic.action");
  critic_.head = take("critic.head");
  critic_target_.state_trunk = take("critic_target.state");
  critic_target_.action_trunk = take("critic_target.action");
  critic_target_.head = take("critic_target.head");
  actor_adam_ = nn::Adam<float>(actor_.params(), hp_.lr_actor);
  critic_adam_ = nn::Adam<float>(critic_.params(), hp_.lr_critic);
}

}  // namespace blochgame
