// Training, evaluation, baseline and replay drivers. A run is fully
// reproducible from (config, seed): every stochastic stream is derived
// from the master seed, and all file output uses fixed formatting.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "blochgame/ddpg.hpp"
#include "blochgame/game.hpp"

namespace blochgame {

struct RunConfig {
  int n_games = 50000;
  int eval_games = 1000;
  std::string checkpoint_dir = "checkpoints";
  std::string metrics_path = "metrics.csv";
  std::uint64_t seed = 1;

  // game
  double reward_a = 100.0;
  double penalty_b = -10.0;
  double decay_rate = 1.0;
  double t_max = 300.0;
  int max_steps = 256;
  double noise_sigma = 0.5;

  // agent
  double gamma = 0.99;
  double tau = 0.001;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int batch = 64;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_frac = 0.5;

  // trainer plumbing
  int train_every = 8;        // env steps per gradient update
  int checkpoint_every = 10000;  // games; 0 disables intermediate checkpoints
  int log_window = 100;       // games per metrics row / rolling mean

  GameConfig game_config() const;
  Hyperparams hyperparams() const;
};

// Flat key=value text, one pair per line, '#' comments; keys match the
// field names above. Unknown keys are an error.
RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& line);
std::string config_to_text(const RunConfig& cfg);

struct Histogram {
  double lo, hi;
  std::vector<long> counts;

  Histogram(double lo_, double hi_, int nbins) : lo(lo_), hi(hi_), counts(nbins, 0) {}
  void add(double v);
  long total() const;
};

struct EvalReport {
  int n_games = 0;
  double accuracy = 0.0;  // episodes ended by a correct guess / n_games
  double mean_score = 0.0;
  double mean_lines = 0.0;
  double mean_scan_time_s = 0.0;
  double flip_mean_deg = 0.0;
  double flip_sd_deg = 0.0;
  double timeout_fraction = 0.0;
  // one entry per game (the game's mean parameter value); fixed bins
  Histogram te_ms{5.0, 20.0, 16};
  Histogram tr_ms{25.0, 2000.0, 32};
  Histogram flip_deg{1.0, 90.0, 30};
  std::array<long, 9> games_by_size{};    // phantom sizes 2..10
  std::array<long, 9> correct_by_size{};

  std::string to_json() const;
  void write_json(const std::string& path) const;
};

// An acting strategy under evaluation; emits raw actions.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual RawAction act(const MagnitudeImage& obs) = 0;
};

// deterministic actor rollout (epsilon = 0)
class ActorPolicy final : public Policy {
 public:
  explicit ActorPolicy(nn::Sequential<float> actor) : actor_(std::move(actor)) {}
  RawAction act(const MagnitudeImage& obs) override { return actor_act(actor_, obs); }

 private:
  nn::Sequential<float> actor_;
};

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(Rng rng) : rng_(rng) {}
  RawAction act(const MagnitudeImage&) override;

 private:
  Rng rng_;
};

// Fixed line schedule at fixed (te, tr, flip); guesses Unknown while
// acquiring, then classifies the observation against noise-free reference
// images of every (shape, size) phantom run through the same schedule.
// Ties resolve toward circle, the likelier truth among the degenerate
// small phantoms.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(std::vector<int> lines, double te, double tr, double flip_rad);
  void begin_episode() override { step_ = 0; }
  RawAction act(const MagnitudeImage& obs) override;

  // nearest reference image, L2; returns the guessed shape
  ShapeKind classify(const MagnitudeImage& obs) const;

 private:
  std::vector<int> lines_;
  double te_, tr_, flip_;
  int step_{0};
  std::vector<std::pair<ShapeKind, MagnitudeImage>> references_;
};

// raw action that scales exactly onto the given scanner parameters
RawAction make_raw_action(int pe_index, double te, double tr, double flip_rad, ShapeKind guess);

EvalReport run_eval(Policy& policy, const GameConfig& cfg, int n_games, std::uint64_t seed);

struct TrainResult {
  int games = 0;
  long env_steps = 0;
  long train_steps = 0;
  double mean_score_last_window = 0.0;
  std::string final_checkpoint;
};

TrainResult train(const RunConfig& cfg);

EvalReport evaluate(const std::string& checkpoint_dir, int n_games, std::uint64_t seed,
                    const GameConfig& cfg);

struct ReplayResult {
  int steps = 0;
  double score = 0.0;
};

// One deterministic game: per-step PGM frames (frame 0 is the blank
// initial observation) plus an action log CSV with an episode-score footer.
ReplayResult replay(const std::string& checkpoint_dir, std::uint64_t seed,
                    const std::string& out_dir, const GameConfig& cfg);

// policy_name: random | center-out | edge-only
EvalReport baseline(const std::string& policy_name, int n_games, std::uint64_t seed,
                    const GameConfig& cfg);

std::unique_ptr<Policy> make_baseline_policy(const std::string& policy_name, std::uint64_t seed);

// Acquisition parameters shared by the scripted baselines: shortest TE,
// T1-weighting TR, low flip angle.
inline constexpr double kScriptTe = 0.005;
inline constexpr double kScriptTr = 0.050;
inline constexpr double kScriptFlipDeg = 10.0;

std::vector<int> center_out_order();
std::vector<int> edge_only_order();

}  // namespace blochgame
