// SPDX-License-Identifier: Apache-2.0
#include "apsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace apsim {

namespace {

constexpr double kSpacingTol = 1e-9;

int exact_multiple(double extent, double spacing, const char* axis) {
  const int n = static_cast<int>(std::llround(extent / spacing));
  if (n < 1 || std::abs(n * spacing - extent) > kSpacingTol)
    throw std::invalid_argument(std::string("grid extent along ") + axis +
                                " is not a multiple of its spacing");
  return n;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  if (std::string_view(buf) == "-0.0") return "0.0";
  return buf;
}

// Cohen-Sutherland outcodes against [0, w-1] x [0, h-1].
enum : unsigned { kInside = 0, kLeft = 1, kRight = 2, kBottom = 4, kTop = 8 };

unsigned outcode(double x, double y, double xmax, double ymax) {
  unsigned code = kInside;
  if (x < 0.0) code |= kLeft;
  else if (x > xmax) code |= kRight;
  if (y < 0.0) code |= kBottom;
  else if (y > ymax) code |= kTop;
  return code;
}

bool clip_segment(double& x0, double& y0, double& x1, double& y1, double xmax, double ymax) {
  unsigned c0 = outcode(x0, y0, xmax, ymax);
  unsigned c1 = outcode(x1, y1, xmax, ymax);
  while (true) {
    if (!(c0 | c1)) return true;
    if (c0 & c1) return false;
    const unsigned out = c0 ? c0 : c1;
    double x = 0, y = 0;
    if (out & kTop) {
      x = x0 + (x1 - x0) * (ymax - y0) / (y1 - y0);
      y = ymax;
    } else if (out & kBottom) {
      x = x0 + (x1 - x0) * (0.0 - y0) / (y1 - y0);
      y = 0.0;
    } else if (out & kRight) {
      y = y0 + (y1 - y0) * (xmax - x0) / (x1 - x0);
      x = xmax;
    } else {
      y = y0 + (y1 - y0) * (0.0 - x0) / (x1 - x0);
      x = 0.0;
    }
    if (out == c0) {
      x0 = x;
      y0 = y;
      c0 = outcode(x0, y0, xmax, ymax);
    } else {
      x1 = x;
      y1 = y;
      c1 = outcode(x1, y1, xmax, ymax);
    }
  }
}

}  // namespace

void validate_grid(const GridSpec& spec) {
  if (!is_finite(spec.anchor)) throw std::invalid_argument("grid anchor must be finite");
  if (!(spec.extent.x() > 0.0 && spec.extent.y() > 0.0 && spec.extent.z() > 0.0))
    throw std::invalid_argument("grid extent components must be positive");
  if (!(spec.spacing_xy > 0.0 && spec.spacing_z > 0.0))
    throw std::invalid_argument("grid spacings must be positive");
  if (spec.spacing_xy > spec.extent.x() + kSpacingTol ||
      spec.spacing_xy > spec.extent.y() + kSpacingTol ||
      spec.spacing_z > spec.extent.z() + kSpacingTol)
    throw std::invalid_argument("grid spacing exceeds extent");
  exact_multiple(spec.extent.x(), spec.spacing_xy, "x");
  exact_multiple(spec.extent.y(), spec.spacing_xy, "y");
  exact_multiple(spec.extent.z(), spec.spacing_z, "z");
}

GridCounts grid_counts(const GridSpec& spec) {
  GridCounts c;
  c.nx = exact_multiple(spec.extent.x(), spec.spacing_xy, "x");
  c.ny = exact_multiple(spec.extent.y(), spec.spacing_xy, "y");
  c.nz = spec.dimensionality == GridDimensionality::TwoD
             ? 1
             : exact_multiple(spec.extent.z(), spec.spacing_z, "z");
  return c;
}

Vec3 vertex_position(const GridSpec& spec, const GridIndex& idx) {
  return spec.anchor + Vec3(idx.i * spec.spacing_xy, idx.j * spec.spacing_xy,
                            idx.k * spec.spacing_z);
}

bool index_in_grid(const GridSpec& spec, const GridIndex& idx) {
  const GridCounts c = grid_counts(spec);
  return idx.i >= 0 && idx.i <= c.nx && idx.j >= 0 && idx.j <= c.ny && idx.k >= 1 &&
         idx.k <= c.nz;
}

bool point_in_cube(const GridSpec& spec, const Vec3& p) {
  // Closed cube with a small slack so exact lattice corners (whose rounding
  // can overshoot anchor + extent by one ulp) stay inside.
  constexpr double kEdgeTol = 1e-9;
  const Vec3 hi = spec.anchor + spec.extent;
  return p.x() >= spec.anchor.x() - kEdgeTol && p.x() <= hi.x() + kEdgeTol &&
         p.y() >= spec.anchor.y() - kEdgeTol && p.y() <= hi.y() + kEdgeTol &&
         p.z() >= spec.anchor.z() - kEdgeTol && p.z() <= hi.z() + kEdgeTol;
}

std::string label_vertex(const GridVertex& v, bool annotated) {
  if (!annotated) return "";
  return "(" + format_coord(v.position.x()) + "; " + format_coord(v.position.y()) + ")";
}

std::vector<GridVertex> generate_vertices(const GridSpec& spec) {
  validate_grid(spec);
  const GridCounts c = grid_counts(spec);
  std::vector<GridVertex> out;
  out.reserve(static_cast<size_t>(c.nx + 1) * (c.ny + 1) * c.nz);
  for (int k = 1; k <= c.nz; ++k) {
    for (int j = 0; j <= c.ny; ++j) {
      for (int i = 0; i <= c.nx; ++i) {
        GridVertex v;
        v.index = {i, j, k};
        v.position = vertex_position(spec, v.index);
        v.label = label_vertex(v, spec.annotated);
        out.push_back(std::move(v));
      }
    }
  }
  return out;
}

OverlayPrimitiveSet project_grid(const GridSpec& spec, const CameraIntrinsics& k,
                                 const Pose& camera_pose) {
  validate_intrinsics(k);
  const GridCounts counts = grid_counts(spec);
  const std::vector<GridVertex> vertices = generate_vertices(spec);

  const int stride_j = counts.nx + 1;
  const int stride_k = (counts.nx + 1) * (counts.ny + 1);
  auto flat = [&](int i, int j, int kk) { return (kk - 1) * stride_k + j * stride_j + i; };

  std::vector<std::optional<PixelCoord>> projected(vertices.size());
  for (size_t n = 0; n < vertices.size(); ++n)
    projected[n] = project(k, camera_pose, vertices[n].position);

  OverlayPrimitiveSet out;
  const double xmax = k.width - 1.0;
  const double ymax = k.height - 1.0;

  auto add_edge = [&](int a, int b) {
    const auto& pa = projected[a];
    const auto& pb = projected[b];
    if (!pa || !pb) return;
    double x0 = pa->u, y0 = pa->v, x1 = pb->u, y1 = pb->v;
    if (!clip_segment(x0, y0, x1, y1, xmax, ymax)) return;
    out.segments.push_back({x0, y0, x1, y1, 0.5 * (pa->depth + pb->depth)});
  };

  for (int kk = 1; kk <= counts.nz; ++kk) {
    for (int j = 0; j <= counts.ny; ++j) {
      for (int i = 0; i <= counts.nx; ++i) {
        if (i < counts.nx) add_edge(flat(i, j, kk), flat(i + 1, j, kk));
        if (j < counts.ny) add_edge(flat(i, j, kk), flat(i, j + 1, kk));
        if (kk < counts.nz) add_edge(flat(i, j, kk), flat(i, j, kk + 1));
      }
    }
  }

  if (spec.annotated) {
    for (size_t n = 0; n < vertices.size(); ++n) {
      const auto& px = projected[n];
      if (!px || !pixel_in_bounds(k, px->u, px->v)) continue;
      out.labels.push_back({px->u, px->v, vertices[n].label, px->depth});
    }
  }
  return out;
}

GridVertex nearest_vertex(const GridSpec& spec, const Vec3& p) {
  validate_grid(spec);
  const GridCounts c = grid_counts(spec);
  const Vec3 rel = p - spec.anchor;

  auto clamped = [](double f, int lo, int hi) {
    const int a = std::clamp(static_cast<int>(std::floor(f)), lo, hi);
    const int b = std::clamp(static_cast<int>(std::ceil(f)), lo, hi);
    return std::pair<int, int>(a, b);
  };
  const auto [i0, i1] = clamped(rel.x() / spec.spacing_xy, 0, c.nx);
  const auto [j0, j1] = clamped(rel.y() / spec.spacing_xy, 0, c.ny);
  const auto [k0, k1] = clamped(rel.z() / spec.spacing_z, 1, c.nz);

  GridVertex best;
  double best_d2 = std::numeric_limits<double>::infinity();
  bool found = false;
  // Candidates are examined in (k, j, i) order so strict-improvement keeps
  // the lexicographically smallest index on exact ties.
  for (int k = k0; k <= k1; ++k) {
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        GridVertex v;
        v.index = {i, j, k};
        v.position = vertex_position(spec, v.index);
        const double d2 = (v.position - p).squaredNorm();
        if (!found || d2 < best_d2) {
          best = v;
          best_d2 = d2;
          found = true;
        }
      }
    }
  }
  best.label = label_vertex(best, spec.annotated);
  return best;
}

}  // namespace apsim
