// Zero-filled k-space buffer and magnitude-image reconstruction.
//
// The buffer is centred: PE index k is row k and readout sample k is
// column k, with DC at (16, 16); indices 0 and 31 are the outermost
// lines. The inverse transform uses the e^{-2 pi i} kernel with 1/N^2
// scaling, the conjugate pair of the sequence's phase-accumulation sign,
// so a fully sampled object reconstructs in place. Display normalization
// divides by a further 1024; the scale is fixed (never per-frame) so
// signal level and contrast stay comparable across steps.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>

#include "blochgame/phantom.hpp"

namespace blochgame {

using MagnitudeImage = Eigen::ArrayXXd;  // 32x32, non-negative

inline constexpr double kImageNorm = 1024.0;

class KSpaceBuffer {
 public:
  KSpaceBuffer() : data_(Eigen::MatrixXcd::Zero(kGridSize, kGridSize)) { mask_.fill(false); }

  // Row pe_index is replaced (re-acquisition overwrites); the fill mask is
  // set and the acquisition counter always increments.
  void insert_line(int pe_index, const Eigen::VectorXcd& line);

  const Eigen::MatrixXcd& data() const { return data_; }
  const std::array<bool, kGridSize>& mask() const { return mask_; }
  int lines_acquired() const { return lines_acquired_; }
  int rows_filled() const;

  void clear();

 private:
  Eigen::MatrixXcd data_;
  std::array<bool, kGridSize> mask_;
  int lines_acquired_{0};
};

// Centred inverse 2D DFT (1/N^2, e^- kernel) of the zero-filled buffer,
// before the modulus is taken.
Eigen::MatrixXcd reconstruct_field(const Eigen::MatrixXcd& kspace);

// |reconstruct_field| / 1024
MagnitudeImage reconstruct(const KSpaceBuffer& buf);

// Exact inverse of reconstruct_field up to the 1/N^2 scale: e^+ kernel,
// unscaled. forward_dft(reconstruct_field(K)) == K.
Eigen::MatrixXcd forward_dft(const Eigen::MatrixXcd& field);

// 8-bit binary PGM, pixel = round(255 * clamp(image / p99, 0, 1)) with p99
// the 99th-percentile pixel of this frame. Display only; the observation
// fed to networks is the raw image.
void write_pgm(const MagnitudeImage& image, const std::string& path);

}  // namespace blochgame
