// Shared test oracles, independent of the library's computation paths:
// a direct O(N^4) Fourier sum, central finite differences, and helpers
// for synthetic relaxation-free tissue grids.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blochgame/nn.hpp"
#include "blochgame/phantom.hpp"

namespace testutil {

inline constexpr int kN = blochgame::kGridSize;

// Predicted k-space signal for a relaxation-free acquisition at flip 90
// about +x: the pulse leaves -i * m0 transverse, and the encode/readout
// phases accumulate e^{+2 pi i ((l-16)(i-16) + (k-16)(j-16)) / 32}.
// Evaluated as a literal quadruple sum.
inline Eigen::MatrixXcd signal_oracle(const Eigen::ArrayXXd& m0) {
  Eigen::MatrixXcd out(kN, kN);
  const std::complex<double> minus_i(0.0, -1.0);
  for (int l = 0; l < kN; ++l)
    for (int k = 0; k < kN; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < kN; ++i)
        for (int j = 0; j < kN; ++j) {
          const double ang = 2.0 * M_PI * ((l - 16) * (i - 16) + (k - 16) * (j - 16)) / kN;
          acc += m0(i, j) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out(l, k) = minus_i * acc;
    }
  return out;
}

// "relaxation disabled": T1 = T2 = 1e6 s
inline blochgame::TissueGrid relax_free_grid(const Eigen::ArrayXXd& m0) {
  blochgame::TissueGrid g = blochgame::TissueGrid::filled(blochgame::TissueParams(1e6, 1e6, 1.0));
  g.m0 = m0;
  return g;
}

// m0 = 1 on the phantom mask, 0 elsewhere, relaxation disabled
inline blochgame::TissueGrid mask_object_grid(blochgame::ShapeKind shape, int size) {
  const blochgame::TissueGrid ph = blochgame::generate_phantom(shape, size);
  Eigen::ArrayXXd m0 = ph.mask.cast<double>();
  blochgame::TissueGrid g = relax_free_grid(m0);
  g.mask = ph.mask;
  g.shape = shape;
  g.size_px = size;
  return g;
}

// central finite difference of a scalar function w.r.t. one parameter
inline double central_diff(std::function<double()> f, double* param, double h) {
  const double saved = *param;
  *param = saved + h;
  const double fp = f();
  *param = saved - h;
  const double fm = f();
  *param = saved;
  return (fp - fm) / (2.0 * h);
}

// Checks analytic gradients of sum(w .* net(x)) against central
// differences on n_params parameters spread over the network.
// Returns the worst relative error.
template <class Net>
double check_gradients(Net& net, blochgame::nn::Tensor<double> input, int n_params,
                       blochgame::Rng& rng, double h = 1e-4) {
  using blochgame::nn::Tensor;
  Tensor<double> probe;  // random linear functional over outputs
  auto params = net.params();

  Tensor<double> out = net.forward(input, true);
  probe = out;
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.v(i) = rng.uniform(-1.0, 1.0);

  blochgame::nn::zero_grads(params);
  net.backward(probe);

  const auto loss = [&] {
    Tensor<double> y = net.forward(input, false);
    return (y.v * probe.v).sum();
  };

  double worst = 0.0;
  Eigen::Index total = 0;
  for (const auto& p : params) total += p.size;
  for (int t = 0; t < n_params; ++t) {
    // deterministic stratified pick across the parameter vector
    Eigen::Index target = (total * t + total / (2 * n_params)) / n_params;
    const blochgame::nn::ParamView<double>* view = nullptr;
    for (const auto& p : params) {
      if (target < p.size) {
        view = &p;
        break;
      }
      target -= p.size;
    }
    const double analytic = view->grad[target];
    const double numeric = central_diff(loss, view->value + target, h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil
