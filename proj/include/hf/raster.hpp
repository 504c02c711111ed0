// Grayscale raster IO and simple scientific graphics: binary PGM (P5) read
// and write, PNG export, nodal-field heatmaps, phase-mask conversion, and a
// minimal polyline plotter for curve exports.  Images are row-major with the
// top row first; heatmaps flip the grid's y axis so larger X2 appears higher
// in the image.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hf/materials.hpp"
#include "hf/types.hpp"

namespace hf {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first

  static GrayImage filled(int width, int height, std::uint8_t value);

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  void validate() const;
};

void write_pgm(const std::string& path, const GrayImage& img);
GrayImage read_pgm(const std::string& path);
void write_png(const std::string& path, const GrayImage& img);

// Writes PNG when the path ends in ".png", PGM otherwise.
void write_image(const std::string& path, const GrayImage& img);

// Nodal scalar field -> heatmap, nearest-neighbor upscaled by `scale`
// (one grid node becomes a scale x scale pixel block).  Values are mapped
// linearly from [vmin, vmax] to [0, 255] and clamped; pass vmin >= vmax to
// use the field's own range.
GrayImage heatmap(const Grid2D& grid, const VecX& nodal_values, int scale = 8,
                  Real vmin = 0.0, Real vmax = -1.0);

// Element-label mask -> image (labels spread evenly over [0, 255]) and back.
// `labels` is (nx-1)*(ny-1) long, row-major by element like PhaseMap; images
// of any resolution are resampled to the element grid by nearest neighbor.
GrayImage mask_to_image(const Grid2D& grid, const std::vector<int>& labels,
                        int n_labels, int scale = 8);
std::vector<int> labels_from_image(const GrayImage& img, const Grid2D& grid,
                                   int n_labels);

// Polyline plot of one or more (x, y) series on a white canvas with a thin
// frame.  Each series is an n x 2 matrix; series are drawn in successively
// lighter gray so they remain distinguishable.
GrayImage plot_curves(const std::vector<MatX>& series, int width = 480,
                      int height = 360);

}  // namespace hf
