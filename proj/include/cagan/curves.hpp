#pragma once

// Loss curves from a training log: per-series extraction, block smoothing,
// CSV export and a rasterized PNG plot.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cagan/trainer.hpp"

namespace cagan {

struct CurveSeries {
  std::string name;  // "stage1.recon", "stage1.adv_g", "stage1.adv_d", "stage2.recon", ...
  std::vector<double> values;
};

// One series per (stage, loss) present in the log, in iteration order.
std::vector<CurveSeries> loss_curves(std::span<const IterationLosses> log);

// smooth_curve applied to every series.
std::vector<CurveSeries> smooth_curves(std::span<const CurveSeries> series, int window);

// Columns: block, first_iteration, then one column per series.
void write_curves_csv(const std::filesystem::path& path, std::span<const CurveSeries> smoothed, int window);

// One stacked panel per series (top to bottom in series order), each scaled
// to its own range, with a light grid at quarter ranges.
void plot_curves_png(const std::filesystem::path& path, std::span<const CurveSeries> series, int width = 800,
                     int panel_height = 140);

}  // namespace cagan
