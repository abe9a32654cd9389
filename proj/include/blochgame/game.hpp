// BlochGame: a phantom is placed in the virtual scanner; each step
// acquires one k-space line and may guess the shape.
//
// Reward per step:
//   no guess        +1
//   correct guess   A exp(-R t / t_max), terminal (t = virtual clock)
//   wrong guess     B, episode continues
// If the acquisition pushes the clock past t_max the game is abandoned:
// the step's reward is replaced by the negative of the score so far, so
// the episode total is exactly zero. The same rule bounds runaway
// episodes at max_steps (applied only when the episode would otherwise
// continue, so a correct guess on the capped step still counts).
#pragma once

#include <cstdint>
#include <optional>

#include "blochgame/phantom.hpp"
#include "blochgame/recon.hpp"
#include "blochgame/sequence.hpp"

namespace blochgame {

struct GameConfig {
  double reward_a = 100.0;    // correct-guess weight, > 0
  double penalty_b = -10.0;   // wrong-guess reward, < 0
  double decay_rate = 1.0;    // dimensionless R in exp(-R t / t_max)
  double t_max = 300.0;       // s of virtual scan time per game
  int max_steps = 256;
  double noise_sigma = 0.5;   // k-space noise std per channel per sample
};

struct StepInfo {
  ShapeKind true_shape;
  ShapeKind guess;
  double clock;        // s
  int lines_acquired;
  double episode_score;
  bool timed_out;
};

struct StepResult {
  MagnitudeImage observation;
  double reward;
  bool done;
  StepInfo info;
};

class BlochGame {
 public:
  BlochGame(const GameConfig& cfg, std::uint64_t seed);

  // New phantom, equilibrium magnetization, zero clock, empty k-space.
  // Returns the all-zero observation.
  MagnitudeImage reset();

  StepResult step(const AcqParams& p, ShapeKind guess);

  bool done() const { return done_; }
  double episode_score() const { return episode_score_; }
  double clock() const { return state_ ? state_->clock : 0.0; }
  int steps() const { return steps_; }
  ShapeKind true_shape() const { return true_shape_; }
  int true_size() const { return true_size_; }
  const KSpaceBuffer& kspace() const { return kspace_; }
  const GameConfig& config() const { return cfg_; }

 private:
  GameConfig cfg_;
  Rng round_rng_;   // phantom sampling
  Rng noise_rng_;   // acquisition noise
  PhaseTable pe_table_;
  std::optional<ScannerState> state_;
  KSpaceBuffer kspace_;
  ShapeKind true_shape_{ShapeKind::kUnknown};
  int true_size_{0};
  double episode_score_{0.0};
  double tr_sum_{0.0};
  int steps_{0};
  bool done_{true};
};

}  // namespace blochgame
