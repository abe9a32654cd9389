#include "blochgame/game.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace blochgame {

BlochGame::BlochGame(const GameConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      round_rng_(Rng(seed).child("round")),
      noise_rng_(Rng(seed).child("noise")),
      pe_table_(build_pe_table()) {
  if (!(cfg_.reward_a > 0.0) || !(cfg_.penalty_b < 0.0) || !(cfg_.t_max > 0.0))
    throw std::invalid_argument("GameConfig: require A > 0, B < 0, t_max > 0");
}

MagnitudeImage BlochGame::reset() {
  TissueGrid grid = sample_round(round_rng_);
  true_shape_ = grid.shape;
  true_size_ = grid.size_px;
  state_.emplace(std::move(grid));
  kspace_.clear();
  episode_score_ = 0.0;
  tr_sum_ = 0.0;
  steps_ = 0;
  done_ = false;
  return reconstruct(kspace_);
}

StepResult BlochGame::step(const AcqParams& p, ShapeKind guess) {
  if (done_) throw std::logic_error("BlochGame::step: episode is finished");

  Eigen::VectorXcd line = acquire_line(*state_, p, pe_table_, cfg_.noise_sigma, noise_rng_);
  kspace_.insert_line(p.pe_index, line);
  ++steps_;
  tr_sum_ += p.tr;
  assert(state_->clock == tr_sum_ && "virtual clock must equal the sum of TRs");

  double reward;
  bool done = false;
  bool timed_out = false;
  if (state_->clock >= cfg_.t_max) {
    // time expired during this acquisition; the game is abandoned with a
    // total score of zero regardless of the guess
    reward = -episode_score_;
    done = true;
    timed_out = true;
  } else if (guess == ShapeKind::kUnknown) {
    reward = 1.0;
  } else if (guess == true_shape_) {
    reward = cfg_.reward_a * std::exp(-cfg_.decay_rate * state_->clock / cfg_.t_max);
    done = true;
  } else {
    reward = cfg_.penalty_b;
  }
  if (!done && steps_ >= cfg_.max_steps) {
    reward = -episode_score_;
    done = true;
    timed_out = true;
  }

  episode_score_ += reward;
  done_ = done;

  StepResult r;
  r.observation = reconstruct(kspace_);
  r.reward = reward;
  r.done = done;
  r.info = {true_shape_, guess, state_->clock, kspace_.lines_acquired(), episode_score_, timed_out};
  return r;
}

}  // namespace blochgame
