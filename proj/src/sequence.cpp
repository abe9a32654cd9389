#include "blochgame/sequence.hpp"

#include <cmath>
#include <stdexcept>

namespace blochgame {

namespace {

constexpr double kDegree = M_PI / 180.0;

Eigen::ArrayXd pixel_coords() {
  Eigen::ArrayXd c(kGridSize);
  for (int i = 0; i < kGridSize; ++i) c(i) = pixel_coord(i);
  return c;
}

}  // namespace

void validate(const AcqParams& p) {
  if (!(p.te >= kTeMin && p.te <= kTeMax)) throw std::invalid_argument("AcqParams: te outside [5, 20] ms");
  if (!(p.tr >= kTrMin && p.tr <= kTrMax)) throw std::invalid_argument("AcqParams: tr outside [25, 2000] ms");
  if (!(p.flip >= kFlipMinDeg * kDegree && p.flip <= kFlipMaxDeg * kDegree))
    throw std::invalid_argument("AcqParams: flip outside [1, 90] deg");
  if (p.pe_index < 0 || p.pe_index >= kGridSize) throw std::invalid_argument("AcqParams: pe_index outside [0, 31]");
  if (p.te < kEncodeDuration + kReadoutDuration / 2)
    throw std::invalid_argument("AcqParams: echo does not fit (te < encode + readout/2)");
  if (p.te + kReadoutDuration / 2 > p.tr)
    throw std::invalid_argument("AcqParams: readout extends past tr");
}

PhaseTable build_pe_table(double fov, int n, double tau_pe) {
  if (n != kGridSize) throw std::invalid_argument("build_pe_table: table size must match the grid");
  if (!(fov > 0.0) || !(tau_pe > 0.0)) throw std::invalid_argument("build_pe_table: fov and tau_pe must be positive");
  PhaseTable t;
  t.tau_pe = tau_pe;
  const double dk = 1.0 / fov;
  for (int k = 0; k < n; ++k) t.gradients[k] = (k - n / 2) * dk / (kGammaBar * tau_pe);
  return t;
}

ScannerState::ScannerState(TissueGrid grid) : tissue(std::move(grid)) {
  mxy.setZero(kGridSize, kGridSize);
  mz = tissue.m0;
}

void ScannerState::reset_equilibrium() {
  mxy.setZero(kGridSize, kGridSize);
  mz = tissue.m0;
}

void ScannerState::apply_rf(double flip, double axis_phase) {
  const Eigen::Matrix3d r = rf_rotation_matrix(flip, axis_phase);
  const Eigen::ArrayXXd mx = mxy.real();
  const Eigen::ArrayXXd my = mxy.imag();
  Eigen::ArrayXXd nx = r(0, 0) * mx + r(0, 1) * my + r(0, 2) * mz;
  Eigen::ArrayXXd ny = r(1, 0) * mx + r(1, 1) * my + r(1, 2) * mz;
  mz = r(2, 0) * mx + r(2, 1) * my + r(2, 2) * mz;
  mxy.real() = nx;
  mxy.imag() = ny;
}

void ScannerState::precess(double dt, double dphi) {
  if (dt == 0.0 && dphi == 0.0) return;
  const Eigen::ArrayXXd e1 = (-dt / tissue.t1).exp();
  const Eigen::ArrayXXd e2 = (-dt / tissue.t2).exp();
  const std::complex<double> rot(std::cos(dphi), std::sin(dphi));
  mxy = mxy * rot * e2;
  mz = mz * e1 + tissue.m0 * (1.0 - e1);
}

void ScannerState::precess(double dt, const Eigen::ArrayXXd& dphi) {
  const Eigen::ArrayXXd e1 = (-dt / tissue.t1).exp();
  const Eigen::ArrayXXd e2 = (-dt / tissue.t2).exp();
  const Eigen::ArrayXXcd rot =
      (dphi.cos() + std::complex<double>(0, 1) * dphi.sin()).cast<std::complex<double>>() * e2;
  mxy *= rot;
  mz = mz * e1 + tissue.m0 * (1.0 - e1);
}

Eigen::VectorXcd acquire_line(ScannerState& state, const AcqParams& p, const PhaseTable& table,
                              double noise_sigma, Rng& rng) {
  validate(p);
  const Eigen::ArrayXd coord = pixel_coords();
  const double g_pe = table.gradients[p.pe_index];

  state.apply_rf(p.flip);

  // encode interval: PE lobe along y plus readout prephase along x
  Eigen::ArrayXXd dphi(kGridSize, kGridSize);
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j)
      dphi(i, j) = gradient_phase(g_pe, coord(i), table.tau_pe) -
                   gradient_phase(kReadoutGradient, coord(j), kReadoutDuration / 2);
  state.precess(table.tau_pe, dphi);

  state.precess(p.te - kReadoutDuration / 2 - table.tau_pe);

  // readout: per-dwell phase advance is constant per column
  Eigen::ArrayXXd dphi_dwell(kGridSize, kGridSize);
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j)
      dphi_dwell(i, j) = gradient_phase(kReadoutGradient, coord(j), kDwell);

  Eigen::VectorXcd line(kGridSize);
  for (int k = 0; k < kGridSize; ++k) {
    if (k > 0) state.precess(kDwell, dphi_dwell);
    line(k) = state.mxy.sum();
  }
  state.precess(kDwell, dphi_dwell);  // complete the readout lobe
  state.precess(p.tr - p.te - kReadoutDuration / 2);
  state.clock += p.tr;

  if (noise_sigma > 0.0) {
    for (int k = 0; k < kGridSize; ++k) {
      const double re = noise_sigma * rng.normal();
      const double im = noise_sigma * rng.normal();
      line(k) += std::complex<double>(re, im);
    }
  }
  return line;
}

}  // namespace blochgame
