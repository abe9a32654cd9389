// Tissue grid generation: a centred square or circular phantom on an
// aqueous background, 32x32, FOV 20x20 cm.
#pragma once

#include <Eigen/Dense>

#include "blochgame/bloch.hpp"
#include "blochgame/rng.hpp"

namespace blochgame {

inline constexpr int kGridSize = 32;
inline constexpr double kFov = 0.2;                         // m
inline constexpr double kPixel = kFov / kGridSize;          // m
inline constexpr int kMinPhantomSize = 2;
inline constexpr int kMaxPhantomSize = 10;

// phantom: T1/T2 = 1300/20 ms; background: 3000/2000 ms; m0 = 1 everywhere
inline TissueParams phantom_tissue() { return TissueParams(1.3, 0.020, 1.0); }
inline TissueParams background_tissue() { return TissueParams(3.0, 2.0, 1.0); }

enum class ShapeKind : int { kUnknown = 0, kCircle = 1, kSquare = 2 };

inline const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    default: return "unknown";
  }
}

// Pixel centre coordinate of index i along either axis, in metres.
// Index 16 sits at the coordinate origin; the span is [-0.1, 0.1).
inline double pixel_coord(int i) { return (i - kGridSize / 2) * kPixel; }

struct TissueGrid {
  using Array = Eigen::ArrayXXd;
  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  Array t1;    // s, 32x32 (row = y index, col = x index)
  Array t2;    // s
  Array m0;    // dimensionless
  Mask mask;   // true on phantom pixels
  ShapeKind shape{ShapeKind::kUnknown};
  int size_px{0};

  // Uniform grid of one tissue; starting point for synthetic test objects.
  static TissueGrid filled(const TissueParams& tissue);
};

// Centred phantom mask. The grid centre is pixel coordinate (15.5, 15.5);
// even-sized squares are exactly centred there, odd sizes centre their
// block on pixel 16 (the coordinate origin). Circles take size_px as the
// diameter: pixels whose centre lies within size_px/2 of the grid centre.
TissueGrid generate_phantom(ShapeKind shape, int size_px);

// One game round: shape uniform over {circle, square}, size uniform over
// [2, 10].
TissueGrid sample_round(Rng& rng);

}  // namespace blochgame
