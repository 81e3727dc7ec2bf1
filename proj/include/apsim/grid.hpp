// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/geom.hpp"

#include <compare>
#include <string>
#include <vector>

namespace apsim {

enum class GridDimensionality { TwoD, ThreeD };

/// Axis-aligned vertex lattice anchored in the base frame. The anchor is the
/// minimum corner; the cube spans [anchor, anchor + extent]. Vertical layers
/// start one spacing_z above the anchor plane, so a 0.3 m extent with 0.1 m
/// spacing gives layers at z = 0.1, 0.2, 0.3.
struct GridSpec {
  Vec3 anchor{-0.3, 0.1, 0.0};
  Vec3 extent{0.6, 0.6, 0.3};
  double spacing_xy = 0.2;
  double spacing_z = 0.1;
  GridDimensionality dimensionality = GridDimensionality::ThreeD;
  bool annotated = true;
};

/// Lattice coordinates (i, j, k). Ordering compares (k, j, i) so that ties in
/// nearest-vertex lookups and visited-set iteration resolve layer-first.
struct GridIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  friend bool operator==(const GridIndex&, const GridIndex&) = default;
  friend std::strong_ordering operator<=>(const GridIndex& a, const GridIndex& b) {
    if (auto c = a.k <=> b.k; c != 0) return c;
    if (auto c = a.j <=> b.j; c != 0) return c;
    return a.i <=> b.i;
  }
};

struct GridVertex {
  GridIndex index;
  Vec3 position = Vec3::Zero();
  std::string label;
};

/// Vertex counts per axis: nx+1 and ny+1 vertices horizontally, nz layers.
struct GridCounts {
  int nx = 0;
  int ny = 0;
  int nz = 0;
};

struct OverlaySegment {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double depth = 0;  // camera-frame depth used for draw ordering
};

struct OverlayLabel {
  double x = 0, y = 0;
  std::string text;
  double depth = 0;
};

/// Drawable form of the projected grid: clipped pixel-space segments plus
/// in-bounds vertex labels.
struct OverlayPrimitiveSet {
  std::vector<OverlaySegment> segments;
  std::vector<OverlayLabel> labels;
};

/// Throws std::invalid_argument when extents are not positive or are not
/// integer multiples of their spacing (within 1e-9).
void validate_grid(const GridSpec& spec);

GridCounts grid_counts(const GridSpec& spec);

Vec3 vertex_position(const GridSpec& spec, const GridIndex& idx);

bool index_in_grid(const GridSpec& spec, const GridIndex& idx);

/// True when p lies inside [anchor, anchor + extent] (inclusive).
bool point_in_cube(const GridSpec& spec, const Vec3& p);

/// "(x; y)" with base-frame meters at one decimal, or "" when not annotated.
std::string label_vertex(const GridVertex& v, bool annotated);

/// All lattice vertices in row-major order (k outer, then j, then i).
/// For TwoD only the k=1 layer is emitted.
std::vector<GridVertex> generate_vertices(const GridSpec& spec);

/// Projects lattice edges and labels into the image. Segments are kept when
/// both endpoints are in front of the camera, then clipped to the image
/// rectangle; labels are kept when annotated and the anchor pixel is in
/// bounds. An empty set is valid (grid fully behind the camera).
OverlayPrimitiveSet project_grid(const GridSpec& spec, const CameraIntrinsics& k,
                                 const Pose& camera_pose);

/// Vertex minimizing Euclidean distance to p; ties resolve to the smallest
/// (k, j, i) index.
GridVertex nearest_vertex(const GridSpec& spec, const Vec3& p);

}  // namespace apsim
