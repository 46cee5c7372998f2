#include "cagan/curves.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>

#include "cagan/errors.hpp"
#include "cagan/image_io.hpp"

namespace cagan {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 6> kPalette = {{
    {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}, {23, 190, 207}}};

struct Canvas {
  Raster8 raster;

  Canvas(int w, int h) {
    raster.width = w;
    raster.height = h;
    raster.channels = 3;
    raster.pixels.assign(static_cast<std::size_t>(w) * h * 3, 255);
  }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= raster.width || y >= raster.height) return;
    auto* p = &raster.pixels[(static_cast<std::size_t>(y) * raster.width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) set(x, y, c);
  }

  // Bresenham, drawn two pixels thick.
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      set(x0, y0 + 1, c);
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
};

}  // namespace

std::vector<CurveSeries> loss_curves(std::span<const IterationLosses> log) {
  int stages = 0;
  for (const auto& rec : log) stages = std::max(stages, rec.stages);
  std::vector<CurveSeries> out;
  for (int s = 0; s < stages; ++s) {
    CurveSeries recon{fmt::format("stage{}.recon", s + 1), {}};
    CurveSeries adv_g{fmt::format("stage{}.adv_g", s + 1), {}};
    CurveSeries adv_d{fmt::format("stage{}.adv_d", s + 1), {}};
    for (const auto& rec : log) {
      if (rec.stages <= s) continue;
      recon.values.push_back(rec.stage[static_cast<std::size_t>(s)].reconstruction);
      adv_g.values.push_back(rec.stage[static_cast<std::size_t>(s)].adversarial_g);
      adv_d.values.push_back(rec.stage[static_cast<std::size_t>(s)].adversarial_d);
    }
    out.push_back(std::move(recon));
    out.push_back(std::move(adv_g));
    out.push_back(std::move(adv_d));
  }
  return out;
}

std::vector<CurveSeries> smooth_curves(std::span<const CurveSeries> series, int window) {
  std::vector<CurveSeries> out;
  for (const auto& s : series) out.push_back({s.name, smooth_curve(s.values, window)});
  return out;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const CurveSeries> smoothed, int window) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "block,first_iteration";
  std::size_t rows = 0;
  for (const auto& s : smoothed) {
    out << ',' << s.name;
    rows = std::max(rows, s.values.size());
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out << r << ',' << r * static_cast<std::size_t>(window) + 1;
    for (const auto& s : smoothed) {
      out << ',';
      if (r < s.values.size()) out << fmt::format("{}", s.values[r]);
    }
    out << '\n';
  }
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

void plot_curves_png(const std::filesystem::path& path, std::span<const CurveSeries> series, int width,
                     int panel_height) {
  if (series.empty()) throw DataError("no curves to plot");
  if (width < 64 || panel_height < 32) throw ConfigError("plot is too small");
  constexpr int kMargin = 12;
  const int panels = static_cast<int>(series.size());
  Canvas canvas(width, panels * panel_height);
  const Rgb grid{225, 225, 225}, frame{90, 90, 90};

  for (int p = 0; p < panels; ++p) {
    const auto& values = series[static_cast<std::size_t>(p)].values;
    const int top = p * panel_height + kMargin / 2;
    const int bottom = (p + 1) * panel_height - kMargin / 2;
    const int left = kMargin, right = width - kMargin;
    for (int q = 1; q < 4; ++q) canvas.hline(left, right, top + (bottom - top) * q / 4, grid);
    canvas.hline(left, right, top, frame);
    canvas.hline(left, right, bottom, frame);
    canvas.vline(left, top, bottom, frame);
    canvas.vline(right, top, bottom, frame);

    std::vector<double> finite;
    for (double v : values)
      if (std::isfinite(v)) finite.push_back(v);
    if (finite.empty()) continue;
    double lo = *std::min_element(finite.begin(), finite.end());
    double hi = *std::max_element(finite.begin(), finite.end());
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const Rgb color = kPalette[static_cast<std::size_t>(p) % kPalette.size()];
    auto px = [&](std::size_t i) {
      if (values.size() == 1) return (left + right) / 2;
      return left + 1 + static_cast<int>(std::lround(static_cast<double>(i) * (right - left - 2) / (values.size() - 1)));
    };
    auto py = [&](double v) {
      return bottom - 1 - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top - 2)));
    };
    int prev_x = -1, prev_y = -1;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        prev_x = -1;
        continue;
      }
      const int x = px(i), y = py(values[i]);
      if (prev_x >= 0)
        canvas.line(prev_x, prev_y, x, y, color);
      else
        canvas.set(x, y, color);
      prev_x = x;
      prev_y = y;
    }
  }
  write_png8(path, canvas.raster);
}

}  // namespace cagan
