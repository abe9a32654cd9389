#include "blochgame/phantom.hpp"

#include <cmath>
#include <stdexcept>

namespace blochgame {

TissueGrid TissueGrid::filled(const TissueParams& tissue) {
  TissueGrid g;
  g.t1 = Array::Constant(kGridSize, kGridSize, tissue.t1);
  g.t2 = Array::Constant(kGridSize, kGridSize, tissue.t2);
  g.m0 = Array::Constant(kGridSize, kGridSize, tissue.m0);
  g.mask = Mask::Constant(kGridSize, kGridSize, false);
  return g;
}

TissueGrid generate_phantom(ShapeKind shape, int size_px) {
  if (shape != ShapeKind::kCircle && shape != ShapeKind::kSquare)
    throw std::invalid_argument("generate_phantom: shape must be circle or square");
  if (size_px < kMinPhantomSize || size_px > kMaxPhantomSize)
    throw std::invalid_argument("generate_phantom: size_px outside [2, 10]");

  TissueGrid g = TissueGrid::filled(background_tissue());
  g.shape = shape;
  g.size_px = size_px;

  if (shape == ShapeKind::kSquare) {
    const int lo = (size_px % 2 == 0) ? kGridSize / 2 - size_px / 2
                                      : kGridSize / 2 - (size_px - 1) / 2;
    for (int i = lo; i < lo + size_px; ++i)
      for (int j = lo; j < lo + size_px; ++j) g.mask(i, j) = true;
  } else {
    const double c = (kGridSize - 1) / 2.0;  // 15.5
    const double r = size_px / 2.0;
    for (int i = 0; i < kGridSize; ++i)
      for (int j = 0; j < kGridSize; ++j)
        g.mask(i, j) = std::hypot(i - c, j - c) <= r;
  }

  const TissueParams ph = phantom_tissue();
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j)
      if (g.mask(i, j)) {
        g.t1(i, j) = ph.t1;
        g.t2(i, j) = ph.t2;
        g.m0(i, j) = ph.m0;
      }
  return g;
}

TissueGrid sample_round(Rng& rng) {
  const ShapeKind shape = rng.uniform_int(0, 1) == 0 ? ShapeKind::kCircle : ShapeKind::kSquare;
  const int size = rng.uniform_int(kMinPhantomSize, kMaxPhantomSize);
  return generate_phantom(shape, size);
}

}  // namespace blochgame
