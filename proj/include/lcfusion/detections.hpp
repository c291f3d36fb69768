#pragma once

#include <compare>
#include <string>

#include "lcfusion/geometry.hpp"

namespace lcf {

/// Identifies one camera view: stereo pair index plus side.
struct ViewId {
  int pair = 0;
  CameraSide side = CameraSide::Left;

  friend auto operator<=>(const ViewId&, const ViewId&) = default;
};

/// A 3D detection as produced by the LiDAR branch (or the fusion output).
struct Detection3D {
  Box3D box;
  double score = 0.0;
  std::string label;
  int id = -1;
};

/// A 2D detection as produced by an RGB branch, tagged with its view.
struct Detection2D {
  Box2D box;
  double score = 0.0;
  std::string label;
  ViewId view;
};

/// A ground-truth annotation used by the evaluation protocol.
struct GtAnnotation {
  std::string label;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  Box2D bbox;  // 2D box in the left reference image
  Box3D box;   // internal LiDAR-frame convention
};

}  // namespace lcf
