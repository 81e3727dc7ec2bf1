// SPDX-License-Identifier: Apache-2.0
#include "apsim/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apsim {

RasterImage::RasterImage(int w, int h, Rgb fill) : width(w), height(h) {
  pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

void RasterImage::set(int x, int y, Rgb c) {
  if (!in_bounds(x, y)) return;
  const size_t at = (static_cast<size_t>(y) * width + x) * 3;
  pixels[at] = c.r;
  pixels[at + 1] = c.g;
  pixels[at + 2] = c.b;
}

Rgb RasterImage::get(int x, int y) const {
  const size_t at = (static_cast<size_t>(y) * width + x) * 3;
  return {pixels[at], pixels[at + 1], pixels[at + 2]};
}

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

Rgb color_from_id(const std::string& id) {
  const uint64_t h = fnv1a64(id);
  return {static_cast<uint8_t>(64 + (h & 0x7f)),
          static_cast<uint8_t>(64 + ((h >> 8) & 0x7f)),
          static_cast<uint8_t>(64 + ((h >> 16) & 0x7f))};
}

void draw_line(RasterImage& img, double x0d, double y0d, double x1d, double y1d, Rgb c) {
  int x0 = static_cast<int>(std::lround(x0d));
  int y0 = static_cast<int>(std::lround(y0d));
  const int x1 = static_cast<int>(std::lround(x1d));
  const int y1 = static_cast<int>(std::lround(y1d));
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void fill_polygon(RasterImage& img, const std::vector<std::array<double, 2>>& poly, Rgb c) {
  if (poly.size() < 3) return;
  double ymin = poly[0][1], ymax = poly[0][1];
  for (const auto& p : poly) {
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const int y0 = std::max(0, static_cast<int>(std::ceil(ymin)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(ymax)));
  std::vector<double> xs;
  for (int y = y0; y <= y1; ++y) {
    xs.clear();
    const double yc = y;
    for (size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      if ((a[1] <= yc && b[1] > yc) || (b[1] <= yc && a[1] > yc)) {
        const double t = (yc - a[1]) / (b[1] - a[1]);
        xs.push_back(a[0] + t * (b[0] - a[0]));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int xa = std::max(0, static_cast<int>(std::ceil(xs[i])));
      const int xb = std::min(img.width - 1, static_cast<int>(std::floor(xs[i + 1])));
      for (int x = xa; x <= xb; ++x) img.set(x, y, c);
    }
  }
}

std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
  if (pts.size() < 3) return pts;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * pts.size());
  size_t n = 0;
  for (const auto& p : pts) {
    while (n >= 2 && cross(hull[n - 2], hull[n - 1], p) <= 0) --n;
    hull[n++] = p;
  }
  const size_t lower = n + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (n >= lower && cross(hull[n - 2], hull[n - 1], *it) <= 0) --n;
    hull[n++] = *it;
  }
  hull.resize(n - 1);
  return hull;
}

namespace {

struct Glyph {
  char ch;
  uint8_t rows[7];  // low 5 bits per row, MSB-left
};

constexpr Glyph kFont[] = {
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'-', {0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000}},
    {'.', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100}},
    {'(', {0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010}},
    {')', {0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000}},
    {';', {0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b00100, 0b01000}},
    {',', {0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b00100, 0b01000}},
    {' ', {0, 0, 0, 0, 0, 0, 0}},
};

const Glyph* find_glyph(char ch) {
  for (const auto& g : kFont)
    if (g.ch == ch) return &g;
  return nullptr;
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32be(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc =
      crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32be(out, crc);
}

}  // namespace

void draw_text(RasterImage& img, int x, int y, const std::string& text, Rgb c) {
  int cx = x;
  for (char ch : text) {
    const Glyph* g = find_glyph(ch);
    for (int row = 0; row < 7; ++row) {
      const uint8_t bits = g ? g->rows[row] : 0b11111;
      for (int col = 0; col < 5; ++col)
        if (bits & (1 << (4 - col))) img.set(cx + col, y + row, c);
    }
    cx += 6;
  }
}

int text_width(const std::string& text) { return static_cast<int>(text.size()) * 6; }

std::vector<uint8_t> encode_png(const RasterImage& img) {
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("encode_png: empty image");

  // Raw scanlines, each prefixed with filter type 0.
  const size_t row_bytes = static_cast<size_t>(img.width) * 3;
  std::vector<uint8_t> raw;
  raw.reserve((row_bytes + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.pixels.data() + static_cast<size_t>(y) * row_bytes;
    raw.insert(raw.end(), row, row + row_bytes);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> deflated(bound);
  if (compress2(deflated.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw std::runtime_error("encode_png: deflate failed");
  deflated.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<uint8_t> ihdr;
  put_u32be(ihdr, static_cast<uint32_t>(img.width));
  put_u32be(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflated);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const std::string& path, const RasterImage& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

std::string overlay_to_svg(const OverlayPrimitiveSet& overlay, int width, int height) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  for (const auto& s : overlay.segments)
    svg << "  <line x1=\"" << s.x0 << "\" y1=\"" << s.y0 << "\" x2=\"" << s.x1 << "\" y2=\""
        << s.y1 << "\" stroke=\"#2828c8\" stroke-width=\"1\"/>\n";
  for (const auto& l : overlay.labels)
    svg << "  <text x=\"" << l.x + 2 << "\" y=\"" << l.y - 2
        << "\" font-size=\"9\" fill=\"#14148c\">" << l.text << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace apsim
