// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/grid.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace apsim {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster. Rows are stored top to bottom.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  RasterImage() = default;
  RasterImage(int w, int h, Rgb fill = {0, 0, 0});

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
};

/// 64-bit FNV-1a; used for stable per-id colors and content hashes.
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);

/// Deterministic mid-brightness color derived from an identifier.
Rgb color_from_id(const std::string& id);

void draw_line(RasterImage& img, double x0, double y0, double x1, double y1, Rgb c);

/// Scanline fill of an arbitrary simple polygon given in pixel coordinates.
void fill_polygon(RasterImage& img, const std::vector<std::array<double, 2>>& poly, Rgb c);

/// Monotone-chain convex hull; returns vertices in counter-clockwise order.
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts);

/// 5x7 bitmap text (digits, sign, parens, separators). Unknown glyphs render
/// as a filled box.
void draw_text(RasterImage& img, int x, int y, const std::string& text, Rgb c);
int text_width(const std::string& text);

/// Encodes the raster as an 8-bit RGB PNG (deterministic bytes).
std::vector<uint8_t> encode_png(const RasterImage& img);
void write_png(const std::string& path, const RasterImage& img);

/// Standalone SVG document of an overlay, matching the raster dimensions.
std::string overlay_to_svg(const OverlayPrimitiveSet& overlay, int width, int height);

}  // namespace apsim
