// Virtual gradient-echo acquisition of one k-space line over a 32x32
// tissue grid. Magnetization persists between lines (no spoiling) and a
// virtual scan clock advances by TR per acquisition.
//
// Timeline within one TR:
//   t = 0       instantaneous RF of the requested flip angle about +x
//   [0, 2 ms]   encode interval: phase-encode lobe plus readout prephase
//               (-G_read * T_read/2 moment), with relaxation
//   [2 ms, te - T_read/2]   free precession
//   readout     32 samples over 5 ms (dwell 156.25 us); sample k carries
//               kx = (k - 16) / FOV, the echo centre (zero net readout
//               moment) falls on sample 16 at t = te
//   [te + T_read/2, tr]     free precession
//
// The readout gradient is derived from the FOV so that one dwell advances
// kx by exactly 1/FOV (0.7516 mT/m, i.e. 0.75 mT/m to two figures).
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "blochgame/bloch.hpp"
#include "blochgame/phantom.hpp"
#include "blochgame/rng.hpp"

namespace blochgame {

inline constexpr double kEncodeDuration = 2e-3;                    // s
inline constexpr double kReadoutDuration = 5e-3;                   // s
inline constexpr double kDwell = kReadoutDuration / kGridSize;     // s
inline constexpr double kDeltaK = 1.0 / kFov;                      // m^-1
inline constexpr double kReadoutGradient = kDeltaK / (kGammaBar * kDwell);  // T/m

// acquisition parameter ranges, as exposed to the agent
inline constexpr double kTeMin = 0.005, kTeMax = 0.020;            // s
inline constexpr double kTrMin = 0.025, kTrMax = 2.0;              // s
inline constexpr double kFlipMinDeg = 1.0, kFlipMaxDeg = 90.0;

struct AcqParams {
  double te;     // s
  double tr;     // s
  double flip;   // rad
  int pe_index;  // [0, 31]
};

// Throws std::invalid_argument if p violates the parameter ranges or the
// echo cannot fit (te < encode + half readout).
void validate(const AcqParams& p);

struct PhaseTable {
  std::array<double, kGridSize> gradients;  // T/m, entry 16 is the DC line
  double tau_pe;                            // s
};

// Entry k has G_k = (k - n/2) * dk / (gamma_bar * tau_pe) with dk = 1/fov,
// so successive lines step ky by exactly 1/fov.
PhaseTable build_pe_table(double fov = kFov, int n = kGridSize, double tau_pe = kEncodeDuration);

// Grid magnetization as transverse complex (mx + i my) plus longitudinal,
// evolved with the same rotation matrix / decay factors as the per-voxel
// functions in bloch.hpp.
struct ScannerState {
  Eigen::ArrayXXcd mxy;  // 32x32
  Eigen::ArrayXXd mz;    // 32x32
  double clock{0.0};     // s
  TissueGrid tissue;

  explicit ScannerState(TissueGrid grid);

  // thermal equilibrium: mxy = 0, mz = m0; does not touch the clock
  void reset_equilibrium();

  Magnetization voxel(int i, int j) const {
    return {mxy(i, j).real(), mxy(i, j).imag(), mz(i, j)};
  }

  void apply_rf(double flip, double axis_phase = 0.0);
  // dphi constant across the grid
  void precess(double dt, double dphi = 0.0);
  // per-voxel phase
  void precess(double dt, const Eigen::ArrayXXd& dphi);
};

// Acquires one line and advances state and clock; complex Gaussian noise
// of std noise_sigma is added per channel per sample.
Eigen::VectorXcd acquire_line(ScannerState& state, const AcqParams& p, const PhaseTable& table,
                              double noise_sigma, Rng& rng);

}  // namespace blochgame
