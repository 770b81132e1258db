#include "synesthesia/canvas.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw ParameterError("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[3 * i] = fill[0];
    data_[3 * i + 1] = fill[1];
    data_[3 * i + 2] = fill[2];
  }
}

Rgb Image::pixel(int x, int y) const {
  const std::size_t i = index(x, y);
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_pixel(int x, int y, const Rgb& rgb) {
  const std::size_t i = index(x, y);
  data_[i] = rgb[0];
  data_[i + 1] = rgb[1];
  data_[i + 2] = rgb[2];
}

bool in_unit_range(const Image& img) {
  return std::ranges::all_of(img.data(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

CanvasImage load_png(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open PNG file: " + path.string());
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("invalid PNG " + path.string() + ": " + image.message);
  }
  const auto fmt = image.format;
  if (!(fmt & PNG_FORMAT_FLAG_COLOR) || (fmt & PNG_FORMAT_FLAG_LINEAR) ||
      (fmt & PNG_FORMAT_FLAG_COLORMAP)) {
    png_image_free(&image);
    throw FormatError("unsupported PNG color type or bit depth (need 8-bit RGB/RGBA): " +
                      path.string());
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("failed to decode PNG " + path.string() + ": " + msg);
  }
  CanvasImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const png_byte* px = &buffer[(static_cast<std::size_t>(y) * out.width() + x) * 4];
      const double alpha = px[3] / 255.0;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = alpha * (px[c] / 255.0) + (1.0 - alpha);
      }
    }
  }
  return out;
}

void save_png(const CanvasImage& img, const std::filesystem::path& path) {
  if (img.empty()) throw ParameterError("cannot save an empty image");
  std::vector<png_byte> buffer(img.pixel_count() * 3);
  const auto data = img.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<png_byte>(std::clamp(std::round(data[i] * 255.0), 0.0, 255.0));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("failed to write PNG " + path.string() + ": " + image.message);
  }
}

namespace {

struct BilinearTaps {
  int x0, x1, y0, y1;
  double fx, fy;
  bool clamped_u, clamped_v;
};

BilinearTaps bilinear_taps(int w, int h, double u, double v) {
  BilinearTaps t{};
  const double uc = std::clamp(u, 0.0, static_cast<double>(w - 1));
  const double vc = std::clamp(v, 0.0, static_cast<double>(h - 1));
  t.clamped_u = u < 0.0 || u > w - 1;
  t.clamped_v = v < 0.0 || v > h - 1;
  t.x0 = static_cast<int>(std::floor(uc));
  t.y0 = static_cast<int>(std::floor(vc));
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.fx = uc - t.x0;
  t.fy = vc - t.y0;
  return t;
}

}  // namespace

Rgb sample_bilinear(const Image& img, double u, double v) {
  const BilinearTaps t = bilinear_taps(img.width(), img.height(), u, v);
  const double w00 = (1 - t.fx) * (1 - t.fy), w10 = t.fx * (1 - t.fy);
  const double w01 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = w00 * img.at(t.x0, t.y0, c) + w10 * img.at(t.x1, t.y0, c) +
             w01 * img.at(t.x0, t.y1, c) + w11 * img.at(t.x1, t.y1, c);
  }
  return out;
}

void sample_bilinear_vjp(ImageGradient& grad, double u, double v, const Rgb& upstream) {
  const BilinearTaps t = bilinear_taps(grad.width(), grad.height(), u, v);
  const double w00 = (1 - t.fx) * (1 - t.fy), w10 = t.fx * (1 - t.fy);
  const double w01 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
  for (int c = 0; c < 3; ++c) {
    grad.at(t.x0, t.y0, c) += w00 * upstream[c];
    grad.at(t.x1, t.y0, c) += w10 * upstream[c];
    grad.at(t.x0, t.y1, c) += w01 * upstream[c];
    grad.at(t.x1, t.y1, c) += w11 * upstream[c];
  }
}

std::array<Rgb, 2> sample_bilinear_coord_grad(const Image& img, double u, double v) {
  const BilinearTaps t = bilinear_taps(img.width(), img.height(), u, v);
  std::array<Rgb, 2> g{};
  for (int c = 0; c < 3; ++c) {
    const double p00 = img.at(t.x0, t.y0, c), p10 = img.at(t.x1, t.y0, c);
    const double p01 = img.at(t.x0, t.y1, c), p11 = img.at(t.x1, t.y1, c);
    g[0][c] = t.clamped_u ? 0.0 : (1 - t.fy) * (p10 - p00) + t.fy * (p11 - p01);
    g[1][c] = t.clamped_v ? 0.0 : (1 - t.fx) * (p01 - p00) + t.fx * (p11 - p10);
  }
  return g;
}

SamplingGrid SamplingGrid::from_coords(int src_w, int src_h, int out_w, int out_h,
                                       std::span<const std::array<double, 2>> coords) {
  if (coords.size() != static_cast<std::size_t>(out_w) * out_h) {
    throw ParameterError("sampling grid: coordinate count does not match output size");
  }
  SamplingGrid grid{out_w, out_h, src_w, src_h, {}, {}};
  grid.offsets.reserve(coords.size() + 1);
  grid.taps.reserve(coords.size() * 4);
  grid.offsets.push_back(0);
  const auto idx = [src_w](int x, int y) { return static_cast<std::uint32_t>(y * src_w + x); };
  for (const auto& uv : coords) {
    const BilinearTaps t = bilinear_taps(src_w, src_h, uv[0], uv[1]);
    // Same order as sample_bilinear, so results agree bit for bit.
    grid.taps.push_back({idx(t.x0, t.y0), (1 - t.fx) * (1 - t.fy)});
    grid.taps.push_back({idx(t.x1, t.y0), t.fx * (1 - t.fy)});
    grid.taps.push_back({idx(t.x0, t.y1), (1 - t.fx) * t.fy});
    grid.taps.push_back({idx(t.x1, t.y1), t.fx * t.fy});
    grid.offsets.push_back(static_cast<std::uint32_t>(grid.taps.size()));
  }
  return grid;
}

Image SamplingGrid::apply(const Image& src) const {
  if (src.width() != src_width || src.height() != src_height) {
    throw ParameterError("sampling grid: source shape mismatch");
  }
  Image out(width, height);
  const auto in = src.data();
  auto o = out.data();
  for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
    double acc[3] = {0.0, 0.0, 0.0};
    for (std::uint32_t i = offsets[k]; i < offsets[k + 1]; ++i) {
      const Tap& tap = taps[i];
      for (int c = 0; c < 3; ++c) acc[c] += tap.weight * in[3 * std::size_t{tap.source} + c];
    }
    for (int c = 0; c < 3; ++c) o[3 * k + c] = acc[c];
  }
  return out;
}

void SamplingGrid::apply_vjp(const Image& upstream, ImageGradient& grad) const {
  if (upstream.width() != width || upstream.height() != height) {
    throw ParameterError("sampling grid VJP: upstream shape mismatch");
  }
  if (grad.width() != src_width || grad.height() != src_height) {
    throw ParameterError("sampling grid VJP: gradient shape mismatch");
  }
  const auto u = upstream.data();
  auto g = grad.data();
  for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
    for (std::uint32_t i = offsets[k]; i < offsets[k + 1]; ++i) {
      const Tap& tap = taps[i];
      for (int c = 0; c < 3; ++c) g[3 * std::size_t{tap.source} + c] += tap.weight * u[3 * k + c];
    }
  }
}

namespace {

struct AxisTap {
  int index;
  double weight;
};

/// Normalized tent-filter weights for every output position along one axis.
std::vector<std::vector<AxisTap>> tent_weights(int src, int out) {
  const double scale = static_cast<double>(src) / out;
  const double support = std::max(scale, 1.0);
  std::vector<std::vector<AxisTap>> rows(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale - 0.5;
    const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
    const int hi = std::min(src - 1, static_cast<int>(std::ceil(center + support)));
    double total = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double w = 1.0 - std::abs(j - center) / support;
      if (w > 0.0) {
        rows[i].push_back({j, w});
        total += w;
      }
    }
    if (rows[i].empty()) {
      // Center beyond the border with a unit tent: take the nearest pixel.
      rows[i].push_back({std::clamp(static_cast<int>(std::lround(center)), 0, src - 1), 1.0});
      total = 1.0;
    }
    for (auto& t : rows[i]) t.weight /= total;
  }
  return rows;
}

}  // namespace

SamplingGrid resize_grid(int src_w, int src_h, int out_w, int out_h) {
  if (src_w < 1 || src_h < 1 || out_w < 1 || out_h < 1) {
    throw ParameterError("resize: dimensions must be >= 1");
  }
  const auto wx = tent_weights(src_w, out_w);
  const auto wy = tent_weights(src_h, out_h);
  SamplingGrid grid{out_w, out_h, src_w, src_h, {}, {}};
  grid.offsets.reserve(static_cast<std::size_t>(out_w) * out_h + 1);
  grid.offsets.push_back(0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (const AxisTap& ty : wy[y]) {
        for (const AxisTap& tx : wx[x]) {
          grid.taps.push_back({static_cast<std::uint32_t>(ty.index * src_w + tx.index), ty.weight * tx.weight});
        }
      }
      grid.offsets.push_back(static_cast<std::uint32_t>(grid.taps.size()));
    }
  }
  return grid;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  return resize_grid(img.width(), img.height(), out_w, out_h).apply(img);
}

Homography::Homography(const std::array<std::array<double, 2>, 4>& q) {
  // Square-to-quad mapping (Heckbert); in homogeneous form
  // [x y w] = [a b 1] * [[a11 a12 a13] [a21 a22 a23] [a31 a32 1]].
  const double dx1 = q[1][0] - q[2][0], dx2 = q[3][0] - q[2][0];
  const double dy1 = q[1][1] - q[2][1], dy2 = q[3][1] - q[2][1];
  const double sx = q[0][0] - q[1][0] + q[2][0] - q[3][0];
  const double sy = q[0][1] - q[1][1] + q[2][1] - q[3][1];
  const double det = dx1 * dy2 - dx2 * dy1;
  if (std::abs(det) < 1e-12) throw ParameterError("degenerate quadrilateral for homography");
  a13_ = (sx * dy2 - dx2 * sy) / det;
  a23_ = (dx1 * sy - sx * dy1) / det;
  a11_ = q[1][0] - q[0][0] + a13_ * q[1][0];
  a21_ = q[3][0] - q[0][0] + a23_ * q[3][0];
  a31_ = q[0][0];
  a12_ = q[1][1] - q[0][1] + a13_ * q[1][1];
  a22_ = q[3][1] - q[0][1] + a23_ * q[3][1];
  a32_ = q[0][1];
}

std::array<double, 2> Homography::operator()(double a, double b) const {
  const double w = a13_ * a + a23_ * b + 1.0;
  return {(a11_ * a + a21_ * b + a31_) / w, (a12_ * a + a22_ * b + a32_) / w};
}

void AugmentationSpec::validate() const {
  if (count < 0) throw ParameterError("augmentation count must be >= 0");
  if (!(min_crop_fraction > 0.0 && min_crop_fraction <= 1.0)) {
    throw ParameterError("min_crop_fraction must lie in (0, 1]");
  }
  if (!(max_corner_jitter_fraction >= 0.0 && max_corner_jitter_fraction <= 0.2)) {
    throw ParameterError("max_corner_jitter_fraction must lie in [0, 0.2]");
  }
  if (output_size_px < 8) throw ParameterError("output_size_px must be >= 8");
}

std::vector<SamplingGrid> view_grids(int src_w, int src_h, const AugmentationSpec& spec) {
  spec.validate();
  const int size = spec.output_size_px;
  std::vector<SamplingGrid> grids;
  grids.reserve(static_cast<std::size_t>(spec.count) + 1);
  grids.push_back(resize_grid(src_w, src_h, size, size));

  // Draw order per view: crop fraction, origin x, origin y, then (dx, dy) for
  // the corners (0,0), (1,0), (1,1), (0,1).
  Rng rng(spec.seed);
  const double short_side = std::min(src_w, src_h);
  for (int view = 0; view < spec.count; ++view) {
    const double side = rng.uniform(spec.min_crop_fraction, 1.0) * short_side;
    if (side < 2.0) {
      throw ParameterError("augmentation crop side " + std::to_string(side) + " px is degenerate");
    }
    const double ox = rng.uniform(0.0, src_w - side);
    const double oy = rng.uniform(0.0, src_h - side);
    std::array<std::array<double, 2>, 4> corners{{{ox, oy},
                                                  {ox + side, oy},
                                                  {ox + side, oy + side},
                                                  {ox, oy + side}}};
    const double jitter = spec.max_corner_jitter_fraction * side;
    for (auto& corner : corners) {
      corner[0] += rng.uniform(-jitter, jitter);
      corner[1] += rng.uniform(-jitter, jitter);
    }
    const Homography warp(corners);
    std::vector<std::array<double, 2>> coords;
    coords.reserve(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const auto p = warp((x + 0.5) / size, (y + 0.5) / size);
        coords.push_back({p[0] - 0.5, p[1] - 0.5});
      }
    }
    SamplingGrid grid = SamplingGrid::from_coords(src_w, src_h, size, size, coords);
    grids.push_back(std::move(grid));
  }
  return grids;
}

std::vector<Image> augment_views(const Image& img, const AugmentationSpec& spec) {
  const auto grids = view_grids(img.width(), img.height(), spec);
  std::vector<Image> views;
  views.reserve(grids.size());
  for (const auto& grid : grids) views.push_back(grid.apply(img));
  return views;
}

ImageGradient augment_views_vjp(int src_w, int src_h, const AugmentationSpec& spec,
                                std::span<const Image> upstream) {
  const auto grids = view_grids(src_w, src_h, spec);
  if (upstream.size() != grids.size()) {
    throw ParameterError("augment_views_vjp: expected " + std::to_string(grids.size()) +
                         " upstream views, got " + std::to_string(upstream.size()));
  }
  ImageGradient grad(src_w, src_h);
  for (std::size_t i = 0; i < grids.size(); ++i) grids[i].apply_vjp(upstream[i], grad);
  return grad;
}

}  // namespace synesthesia
