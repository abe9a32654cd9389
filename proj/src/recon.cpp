#include "blochgame/recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace blochgame {

namespace {

// W(a, b) = exp(s * 2 pi i (a-16)(b-16) / 32), symmetric
Eigen::MatrixXcd dft_kernel(double sign) {
  Eigen::MatrixXcd w(kGridSize, kGridSize);
  for (int a = 0; a < kGridSize; ++a)
    for (int b = 0; b < kGridSize; ++b) {
      const double ang = sign * 2.0 * std::numbers::pi * (a - 16) * (b - 16) / kGridSize;
      w(a, b) = std::complex<double>(std::cos(ang), std::sin(ang));
    }
  return w;
}

const Eigen::MatrixXcd& inverse_kernel() {
  static const Eigen::MatrixXcd w = dft_kernel(-1.0);
  return w;
}

const Eigen::MatrixXcd& forward_kernel() {
  static const Eigen::MatrixXcd w = dft_kernel(+1.0);
  return w;
}

}  // namespace

void KSpaceBuffer::insert_line(int pe_index, const Eigen::VectorXcd& line) {
  if (pe_index < 0 || pe_index >= kGridSize) throw std::out_of_range("insert_line: pe_index outside [0, 31]");
  if (line.size() != kGridSize) throw std::invalid_argument("insert_line: line must hold 32 samples");
  data_.row(pe_index) = line.transpose();
  mask_[pe_index] = true;
  ++lines_acquired_;
}

int KSpaceBuffer::rows_filled() const {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), true));
}

void KSpaceBuffer::clear() {
  data_.setZero();
  mask_.fill(false);
  lines_acquired_ = 0;
}

Eigen::MatrixXcd reconstruct_field(const Eigen::MatrixXcd& kspace) {
  const auto& w = inverse_kernel();
  return (w * kspace * w) / (kGridSize * kGridSize);
}

MagnitudeImage reconstruct(const KSpaceBuffer& buf) {
  return reconstruct_field(buf.data()).cwiseAbs().array() / kImageNorm;
}

Eigen::MatrixXcd forward_dft(const Eigen::MatrixXcd& field) {
  const auto& w = forward_kernel();
  return w * field * w;
}

void write_pgm(const MagnitudeImage& image, const std::string& path) {
  std::vector<double> sorted(image.data(), image.data() + image.size());
  std::sort(sorted.begin(), sorted.end());
  const auto p99_idx = static_cast<std::size_t>(std::floor(0.99 * (sorted.size() - 1)));
  const double p99 = sorted[p99_idx];

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  out << "P5\n" << kGridSize << " " << kGridSize << "\n255\n";
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double v = p99 > 0.0 ? std::clamp(image(i, j) / p99, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(255.0 * v))));
    }
}

}  // namespace blochgame
