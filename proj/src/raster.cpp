#include "hf/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace hf {

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

std::uint8_t level_for_label(int label, int n_labels) {
  if (n_labels <= 1) return 0;
  return static_cast<std::uint8_t>(std::lround(255.0 * label / (n_labels - 1)));
}

}  // namespace

GrayImage GrayImage::filled(int width, int height, std::uint8_t value) {
  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, value);
  return img;
}

void GrayImage::validate() const {
  if (width <= 0 || height <= 0)
    throw DimensionError("GrayImage: non-positive dimensions");
  if (pixels.size() != static_cast<std::size_t>(width) * height)
    throw DimensionError("GrayImage: pixel buffer size mismatch");
}

void write_pgm(const std::string& path, const GrayImage& img) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("write failure: " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  if (next_token(in) != "P5")
    throw DataError("not a binary PGM (P5) file: " + path);
  GrayImage img;
  try {
    img.width = std::stoi(next_token(in));
    img.height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw DataError("PGM maxval must be 255 in " + path);
  } catch (const std::logic_error&) {
    throw DataError("malformed PGM header in " + path);
  }
  if (img.width <= 0 || img.height <= 0)
    throw DataError("non-positive PGM dimensions in " + path);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw DataError("truncated PGM pixel data in " + path);
  return img;
}

void write_png(const std::string& path, const GrayImage& img) {
  img.validate();
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  png_infop pinfo = png ? png_create_info_struct(png) : nullptr;
  if (!png || !pinfo) {
    if (png) png_destroy_write_struct(&png, &pinfo);
    std::fclose(fp);
    throw IoError("libpng initialization failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &pinfo);
    std::fclose(fp);
    throw IoError("libpng write failure for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, pinfo, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, pinfo);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(
                           img.pixels.data() + static_cast<std::size_t>(y) * img.width));
  png_write_end(png, pinfo);
  png_destroy_write_struct(&png, &pinfo);
  std::fclose(fp);
}

void write_image(const std::string& path, const GrayImage& img) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
    write_png(path, img);
  else
    write_pgm(path, img);
}

GrayImage heatmap(const Grid2D& grid, const VecX& nodal_values, int scale, Real vmin,
                  Real vmax) {
  grid.validate();
  if (nodal_values.size() != grid.size())
    throw DimensionError("heatmap: field length must match the node count");
  if (scale < 1) throw ConfigurationError("heatmap: scale must be >= 1");
  if (vmin >= vmax) {
    vmin = nodal_values.minCoeff();
    vmax = nodal_values.maxCoeff();
    if (vmax <= vmin) vmax = vmin + 1.0;  // constant field -> all black
  }
  GrayImage img = GrayImage::filled(grid.nx * scale, grid.ny * scale, 0);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Real t = (nodal_values[grid.index(ix, iy)] - vmin) / (vmax - vmin);
      const auto v = static_cast<std::uint8_t>(
          clampi(static_cast<int>(std::lround(255.0 * t)), 0, 255));
      // Flip y: grid row 0 (smallest X2) lands at the image bottom.
      const int py0 = (grid.ny - 1 - iy) * scale;
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) img.at(ix * scale + dx, py0 + dy) = v;
    }
  }
  return img;
}

GrayImage mask_to_image(const Grid2D& grid, const std::vector<int>& labels,
                        int n_labels, int scale) {
  grid.validate();
  const int ex = grid.nx - 1, ey = grid.ny - 1;
  if (static_cast<int>(labels.size()) != ex * ey)
    throw DimensionError("mask_to_image: need one label per element");
  if (scale < 1) throw ConfigurationError("mask_to_image: scale must be >= 1");
  GrayImage img = GrayImage::filled(ex * scale, ey * scale, 0);
  for (int iy = 0; iy < ey; ++iy) {
    for (int ix = 0; ix < ex; ++ix) {
      const int label = labels[iy * ex + ix];
      if (label < 0 || label >= n_labels)
        throw DataError("mask_to_image: label out of range");
      const std::uint8_t v = level_for_label(label, n_labels);
      const int py0 = (ey - 1 - iy) * scale;
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) img.at(ix * scale + dx, py0 + dy) = v;
    }
  }
  return img;
}

std::vector<int> labels_from_image(const GrayImage& img, const Grid2D& grid,
                                   int n_labels) {
  img.validate();
  grid.validate();
  if (n_labels < 1) throw ConfigurationError("labels_from_image: need n_labels >= 1");
  const int ex = grid.nx - 1, ey = grid.ny - 1;
  std::vector<int> labels(static_cast<std::size_t>(ex) * ey, 0);
  for (int iy = 0; iy < ey; ++iy) {
    for (int ix = 0; ix < ex; ++ix) {
      // Element centers sampled by nearest neighbor; image y runs downward.
      const int px = clampi((2 * ix + 1) * img.width / (2 * ex), 0, img.width - 1);
      const int py =
          clampi((2 * (ey - 1 - iy) + 1) * img.height / (2 * ey), 0, img.height - 1);
      const int v = img.at(px, py);
      int best = 0;
      int best_dist = std::numeric_limits<int>::max();
      for (int l = 0; l < n_labels; ++l) {
        const int dist = std::abs(v - static_cast<int>(level_for_label(l, n_labels)));
        if (dist < best_dist) {
          best_dist = dist;
          best = l;
        }
      }
      labels[static_cast<std::size_t>(iy) * ex + ix] = best;
    }
  }
  return labels;
}

GrayImage plot_curves(const std::vector<MatX>& series, int width, int height) {
  if (width < 32 || height < 32)
    throw ConfigurationError("plot_curves: canvas too small");
  GrayImage img = GrayImage::filled(width, height, 255);

  Real xmin = std::numeric_limits<Real>::infinity(), xmax = -xmin;
  Real ymin = xmin, ymax = -xmin;
  for (const MatX& s : series) {
    if (s.cols() != 2) throw DimensionError("plot_curves: series need 2 columns");
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      xmin = std::min(xmin, s(i, 0));
      xmax = std::max(xmax, s(i, 0));
      ymin = std::min(ymin, s(i, 1));
      ymax = std::max(ymax, s(i, 1));
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin)) return img;  // nothing to draw
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  const int margin = 12;
  const auto px = [&](Real x) {
    return margin + static_cast<int>(std::lround((width - 1 - 2 * margin) *
                                                 (x - xmin) / (xmax - xmin)));
  };
  const auto py = [&](Real y) {
    return height - 1 - margin -
           static_cast<int>(
               std::lround((height - 1 - 2 * margin) * (y - ymin) / (ymax - ymin)));
  };
  // Frame.
  for (int x = margin; x <= width - 1 - margin; ++x)
    img.at(x, margin) = img.at(x, height - 1 - margin) = 200;
  for (int y = margin; y <= height - 1 - margin; ++y)
    img.at(margin, y) = img.at(width - 1 - margin, y) = 200;

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto shade = static_cast<std::uint8_t>(std::min<std::size_t>(s * 70, 180));
    const MatX& pts = series[s];
    for (Eigen::Index i = 0; i + 1 < pts.rows(); ++i) {
      int x0 = px(pts(i, 0)), y0 = py(pts(i, 1));
      const int x1 = px(pts(i + 1, 0)), y1 = py(pts(i + 1, 1));
      const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
      const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
      int err = dx + dy;
      while (true) {
        img.at(clampi(x0, 0, width - 1), clampi(y0, 0, height - 1)) = shade;
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
  }
  return img;
}

}  // namespace hf
