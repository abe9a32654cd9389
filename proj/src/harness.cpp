#include "blochgame/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blochgame {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDegree = M_PI / 180.0;

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::vector<float> image_to_vec(const MagnitudeImage& img) {
  std::vector<float> v(kGridSize * kGridSize);
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) v[i * kGridSize + j] = static_cast<float>(img(i, j));
  return v;
}

nn::Sequential<float> load_actor(const std::string& checkpoint_dir) {
  nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_dir);
  auto it = ckpt.networks.find("actor");
  if (it == ckpt.networks.end()) throw std::runtime_error("checkpoint: no actor network in " + checkpoint_dir);
  return std::move(it->second);
}

}  // namespace

GameConfig RunConfig::game_config() const {
  GameConfig g;
  g.reward_a = reward_a;
  g.penalty_b = penalty_b;
  g.decay_rate = decay_rate;
  g.t_max = t_max;
  g.max_steps = max_steps;
  g.noise_sigma = noise_sigma;
  return g;
}

Hyperparams RunConfig::hyperparams() const {
  Hyperparams h;
  h.gamma = gamma;
  h.tau = tau;
  h.lr_actor = lr_actor;
  h.lr_critic = lr_critic;
  h.batch = batch;
  h.eps_start = eps_start;
  h.eps_end = eps_end;
  h.eps_decay_frac = eps_decay_frac;
  return h;
}

void apply_config_line(RunConfig& cfg, const std::string& raw) {
  std::string line = raw;
  if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
  line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
  if (line.empty()) return;

  const auto eq = line.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("config: expected key=value, got: " + line);
  std::string key = line.substr(0, eq);
  std::string value = line.substr(eq + 1);
  key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
  value.erase(value.begin(), std::find_if(value.begin(), value.end(), notspace));

  const auto as_int = [&] { return std::stoi(value); };
  const auto as_double = [&] { return std::stod(value); };
  if (key == "n_games") cfg.n_games = as_int();
  else if (key == "eval_games") cfg.eval_games = as_int();
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "metrics_path") cfg.metrics_path = value;
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "reward_a") cfg.reward_a = as_double();
  else if (key == "penalty_b") cfg.penalty_b = as_double();
  else if (key == "decay_rate") cfg.decay_rate = as_double();
  else if (key == "t_max") cfg.t_max = as_double();
  else if (key == "max_steps") cfg.max_steps = as_int();
  else if (key == "noise_sigma") cfg.noise_sigma = as_double();
  else if (key == "gamma") cfg.gamma = as_double();
  else if (key == "tau") cfg.tau = as_double();
  else if (key == "lr_actor") cfg.lr_actor = as_double();
  else if (key == "lr_critic") cfg.lr_critic = as_double();
  else if (key == "batch") cfg.batch = as_int();
  else if (key == "eps_start") cfg.eps_start = as_double();
  else if (key == "eps_end") cfg.eps_end = as_double();
  else if (key == "eps_decay_frac") cfg.eps_decay_frac = as_double();
  else if (key == "train_every") cfg.train_every = as_int();
  else if (key == "checkpoint_every") cfg.checkpoint_every = as_int();
  else if (key == "log_window") cfg.log_window = as_int();
  else throw std::invalid_argument("config: unknown key: " + key);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  while (std::getline(in, line)) apply_config_line(cfg, line);
  return cfg;
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "n_games=" << c.n_games << "\neval_games=" << c.eval_games
      << "\ncheckpoint_dir=" << c.checkpoint_dir << "\nmetrics_path=" << c.metrics_path
      << "\nseed=" << c.seed << "\nreward_a=" << c.reward_a << "\npenalty_b=" << c.penalty_b
      << "\ndecay_rate=" << c.decay_rate << "\nt_max=" << c.t_max << "\nmax_steps=" << c.max_steps
      << "\nnoise_sigma=" << c.noise_sigma << "\ngamma=" << c.gamma << "\ntau=" << c.tau
      << "\nlr_actor=" << c.lr_actor << "\nlr_critic=" << c.lr_critic << "\nbatch=" << c.batch
      << "\neps_start=" << c.eps_start << "\neps_end=" << c.eps_end
      << "\neps_decay_frac=" << c.eps_decay_frac << "\ntrain_every=" << c.train_every
      << "\ncheckpoint_every=" << c.checkpoint_every << "\nlog_window=" << c.log_window << "\n";
  return out.str();
}

void Histogram::add(double v) {
  const int n = static_cast<int>(counts.size());
  int bin = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
  bin = std::clamp(bin, 0, n - 1);
  ++counts[bin];
}

long Histogram::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

std::string EvalReport::to_json() const {
  json j;
  j["n_games"] = n_games;
  j["accuracy"] = accuracy;
  j["mean_score"] = mean_score;
  j["mean_lines"] = mean_lines;
  j["mean_scan_time_s"] = mean_scan_time_s;
  j["flip_mean_deg"] = flip_mean_deg;
  j["flip_sd_deg"] = flip_sd_deg;
  j["timeout_fraction"] = timeout_fraction;
  const auto hist_json = [](const Histogram& h) {
    return json{{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
  };
  j["histograms"] = {{"te_ms", hist_json(te_ms)}, {"tr_ms", hist_json(tr_ms)}, {"flip_deg", hist_json(flip_deg)}};
  json by_size = json::object();
  for (int s = 0; s < 9; ++s) {
    const std::string key = std::to_string(s + 2);
    by_size[key] = {{"games", games_by_size[s]}, {"correct", correct_by_size[s]}};
  }
  j["by_size"] = by_size;
  return j.dump(2);
}

void EvalReport::write_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << to_json() << "\n";
}

RawAction RandomPolicy::act(const MagnitudeImage&) {
  RawAction a;
  for (auto& x : a) x = static_cast<float>(rng_.uniform(-1.0, 1.0));
  return a;
}

RawAction make_raw_action(int pe_index, double te, double tr, double flip_rad, ShapeKind guess) {
  const auto unit = [](double v, double lo, double hi) {
    return static_cast<float>(2.0 * (v - lo) / (hi - lo) - 1.0);
  };
  RawAction a;
  a[0] = unit(pe_index, 0.0, 31.0);
  a[1] = unit(te, kTeMin, kTeMax);
  a[2] = unit(tr, kTrMin, kTrMax);
  a[3] = unit(flip_rad / kDegree, kFlipMinDeg, kFlipMaxDeg);
  a[4] = unit(static_cast<double>(guess), 0.0, 2.0);
  return a;
}

ScriptedPolicy::ScriptedPolicy(std::vector<int> lines, double te, double tr, double flip_rad)
    : lines_(std::move(lines)), te_(te), tr_(tr), flip_(flip_rad) {
  // noise-free reference image per phantom under this exact schedule
  const PhaseTable table = build_pe_table();
  Rng dummy(0);
  for (ShapeKind shape : {ShapeKind::kCircle, ShapeKind::kSquare}) {
    for (int size = kMinPhantomSize; size <= kMaxPhantomSize; ++size) {
      ScannerState state(generate_phantom(shape, size));
      KSpaceBuffer buf;
      for (int pe : lines_) {
        AcqParams p{te_, tr_, flip_, pe};
        buf.insert_line(pe, acquire_line(state, p, table, 0.0, dummy));
      }
      references_.emplace_back(shape, reconstruct(buf));
    }
  }
}

ShapeKind ScriptedPolicy::classify(const MagnitudeImage& obs) const {
  ShapeKind best = ShapeKind::kCircle;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [shape, ref] : references_) {
    const double d = (obs - ref).matrix().squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = shape;
    }
  }
  return best;
}

RawAction ScriptedPolicy::act(const MagnitudeImage& obs) {
  if (step_ < static_cast<int>(lines_.size())) {
    const int pe = lines_[step_++];
    return make_raw_action(pe, te_, tr_, flip_, ShapeKind::kUnknown);
  }
  // keep re-acquiring the last line while guessing
  return make_raw_action(lines_.back(), te_, tr_, flip_, classify(obs));
}

std::vector<int> center_out_order() {
  std::vector<int> order;
  order.push_back(16);
  for (int d = 1; d <= 16; ++d) {
    if (16 + d < kGridSize) order.push_back(16 + d);
    order.push_back(16 - d);
  }
  return order;  // 16, 17, 15, 18, 14, ..., 31, 1, 0
}

std::vector<int> edge_only_order() { return {0, 31, 1, 30}; }

std::unique_ptr<Policy> make_baseline_policy(const std::string& name, std::uint64_t seed) {
  const double flip = kScriptFlipDeg * kDegree;
  if (name == "random") return std::make_unique<RandomPolicy>(Rng(seed).child("policy"));
  if (name == "center-out")
    return std::make_unique<ScriptedPolicy>(center_out_order(), kScriptTe, kScriptTr, flip);
  if (name == "edge-only")
    return std::make_unique<ScriptedPolicy>(edge_only_order(), kScriptTe, kScriptTr, flip);
  throw std::invalid_argument("unknown baseline policy: " + name);
}

EvalReport run_eval(Policy& policy, const GameConfig& cfg, int n_games, std::uint64_t seed) {
  EvalReport rep;
  rep.n_games = n_games;
  const Rng master(seed);
  long correct = 0, timeouts = 0;
  double score_sum = 0.0, lines_sum = 0.0, time_sum = 0.0;
  double flip_sum = 0.0, flip_sq_sum = 0.0;

  for (int g = 0; g < n_games; ++g) {
    BlochGame env(cfg, master.child("eval_episode", g).seed());
    MagnitudeImage obs = env.reset();
    policy.begin_episode();
    double te_sum = 0.0, tr_sum = 0.0, fl_sum = 0.0;
    int steps = 0;
    StepResult sr;
    while (true) {
      const RawAction a = policy.act(obs);
      const ScaledAction s = scale_action(a);
      sr = env.step(s.acq, s.guess);
      te_sum += s.acq.te;
      tr_sum += s.acq.tr;
      fl_sum += s.acq.flip / kDegree;
      ++steps;
      obs = sr.observation;
      if (sr.done) break;
    }
    const bool won = !sr.info.timed_out && sr.info.guess == sr.info.true_shape;
    correct += won;
    timeouts += sr.info.timed_out;
    score_sum += env.episode_score();
    lines_sum += steps;
    time_sum += env.clock();
    const double mean_flip = fl_sum / steps;
    flip_sum += mean_flip;
    flip_sq_sum += mean_flip * mean_flip;
    rep.te_ms.add(te_sum / steps * 1e3);
    rep.tr_ms.add(tr_sum / steps * 1e3);
    rep.flip_deg.add(mean_flip);
    const int size_idx = std::clamp(env.true_size() - 2, 0, 8);
    ++rep.games_by_size[size_idx];
    if (won) ++rep.correct_by_size[size_idx];
  }

  rep.accuracy = static_cast<double>(correct) / n_games;
  rep.timeout_fraction = static_cast<double>(timeouts) / n_games;
  rep.mean_score = score_sum / n_games;
  rep.mean_lines = lines_sum / n_games;
  rep.mean_scan_time_s = time_sum / n_games;
  rep.flip_mean_deg = flip_sum / n_games;
  const double var = std::max(0.0, flip_sq_sum / n_games - rep.flip_mean_deg * rep.flip_mean_deg);
  rep.flip_sd_deg = std::sqrt(var);
  return rep;
}

TrainResult train(const RunConfig& cfg) {
  const Rng master(cfg.seed);
  Rng explore = master.child("explore");
  Rng buffer_rng = master.child("buffer");
  DdpgAgent agent(cfg.hyperparams(), master.child("init").seed());

  if (!cfg.checkpoint_dir.empty()) fs::create_directories(cfg.checkpoint_dir);
  std::ofstream metrics(cfg.metrics_path);
  if (!metrics) throw std::runtime_error("train: cannot write metrics to " + cfg.metrics_path);
  metrics << "step,episode,score,critic_loss,epsilon\n";

  TrainResult result;
  std::deque<double> window;
  float last_loss = 0.0f;
  long global_step = 0, train_steps = 0;

  for (int g = 0; g < cfg.n_games; ++g) {
    const double eps = epsilon_at(cfg.hyperparams(), cfg.n_games > 0 ? static_cast<double>(g) / cfg.n_games : 1.0);
    BlochGame env(cfg.game_config(), master.child("episode", g).seed());
    MagnitudeImage obs = env.reset();
    std::vector<float> obs_vec = image_to_vec(obs);

    while (true) {
      const RawAction a = agent.act(obs, eps, explore);
      const ScaledAction s = scale_action(a);
      StepResult sr = env.step(s.acq, s.guess);
      std::vector<float> next_vec = image_to_vec(sr.observation);
      agent.push({obs_vec, a, static_cast<float>(sr.reward), next_vec, sr.done});
      ++global_step;

      if (global_step % cfg.train_every == 0 && agent.ready_to_train()) {
        const TrainStats stats = agent.train_step(buffer_rng);
        ++train_steps;
        last_loss = stats.critic_loss;
        if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.actor_objective))
          throw std::runtime_error("train: non-finite loss at game " + std::to_string(g) +
                                   ", step " + std::to_string(global_step));
      }
      if (sr.done) break;
      obs = sr.observation;
      obs_vec = std::move(next_vec);
    }

    window.push_back(env.episode_score());
    if (static_cast<int>(window.size()) > cfg.log_window) window.pop_front();
    if ((g + 1) % cfg.log_window == 0) {
      double mean = 0.0;
      for (double v : window) mean += v;
      mean /= window.size();
      metrics << global_step << "," << (g + 1) << "," << format("%.6f", mean) << ","
              << format("%.6f", last_loss) << "," << format("%.6f", eps) << "\n";
    }
    if (cfg.checkpoint_every > 0 && (g + 1) % cfg.checkpoint_every == 0 && g + 1 < cfg.n_games) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%07d", g + 1);
      agent.save((fs::path(cfg.checkpoint_dir) / name).string());
    }
  }

  result.games = cfg.n_games;
  result.env_steps = global_step;
  result.train_steps = train_steps;
  if (!window.empty()) {
    double mean = 0.0;
    for (double v : window) mean += v;
    result.mean_score_last_window = mean / window.size();
  }
  if (cfg.n_games > 0) {
    const std::string final_path = (fs::path(cfg.checkpoint_dir) / "final").string();
    agent.save(final_path);
    result.final_checkpoint = final_path;
  }
  return result;
}

EvalReport evaluate(const std::string& checkpoint_dir, int n_games, std::uint64_t seed,
                    const GameConfig& cfg) {
  ActorPolicy policy(load_actor(checkpoint_dir));
  return run_eval(policy, cfg, n_games, seed);
}

ReplayResult replay(const std::string& checkpoint_dir, std::uint64_t seed,
                    const std::string& out_dir, const GameConfig& cfg) {
  ActorPolicy policy(load_actor(checkpoint_dir));
  fs::create_directories(out_dir);

  BlochGame env(cfg, Rng(seed).child("eval_episode", 0).seed());
  MagnitudeImage obs = env.reset();
  policy.begin_episode();

  const auto frame_path = [&](int idx) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.pgm", idx);
    return (fs::path(out_dir) / name).string();
  };
  write_pgm(obs, frame_path(0));

  std::ofstream log(fs::path(out_dir) / "log.csv");
  if (!log) throw std::runtime_error("replay: cannot write log in " + out_dir);
  log << "step,pe_index,te_ms,tr_ms,flip_deg,guess,reward,clock_s\n";

  ReplayResult result;
  double score = 0.0;
  int step = 0;
  while (!env.done()) {
    const RawAction a = policy.act(obs);
    const ScaledAction s = scale_action(a);
    StepResult sr = env.step(s.acq, s.guess);
    ++step;
    score += sr.reward;
    obs = sr.observation;
    write_pgm(obs, frame_path(step));
    log << step << "," << s.acq.pe_index << "," << format("%.6f", s.acq.te * 1e3) << ","
        << format("%.6f", s.acq.tr * 1e3) << "," << format("%.6f", s.acq.flip / kDegree) << ","
        << static_cast<int>(s.guess) << "," << format("%.6f", sr.reward) << ","
        << format("%.6f", sr.info.clock) << "\n";
  }
  log << "# episode_score=" << format("%.6f", score) << "\n";
  result.steps = step;
  result.score = score;
  return result;
}

EvalReport baseline(const std::string& policy_name, int n_games, std::uint64_t seed,
                    const GameConfig& cfg) {
  auto policy = make_baseline_policy(policy_name, seed);
  return run_eval(*policy, cfg, n_games, seed);
}

}  // namespace blochgame
