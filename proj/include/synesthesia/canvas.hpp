#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace synesthesia {

using Rgb = std::array<double, 3>;

/// Row-major RGB raster with double channels. Used both for canvases (values
/// in [0,1]) and for gradients w.r.t. canvases (unconstrained).
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0.0, 0.0, 0.0});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[index(x, y) + c]; }
  Rgb pixel(int x, int y) const;
  void set_pixel(int x, int y, const Rgb& rgb);

  /// Channel data, interleaved RGB, length 3 * width * height.
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

using CanvasImage = Image;
using ImageGradient = Image;

/// True when every channel lies in [0, 1].
bool in_unit_range(const Image& img);

/// Loads an 8-bit RGB/RGBA PNG; alpha is composited over white.
CanvasImage load_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG, quantizing each channel as round(v * 255).
void save_png(const CanvasImage& img, const std::filesystem::path& path);

/// Bilinear sample at continuous pixel coordinates (pixel (i, j) sits at
/// u = i, v = j). Coordinates outside the image clamp to the border.
Rgb sample_bilinear(const Image& img, double u, double v);

/// Adds the pullback of `upstream` through sample_bilinear(img, u, v) into
/// `grad` (which has the shape of the sampled image).
void sample_bilinear_vjp(ImageGradient& grad, double u, double v, const Rgb& upstream);

/// Partial derivatives of sample_bilinear w.r.t. u and v. Zero along an axis
/// where the coordinate is clamped.
std::array<Rgb, 2> sample_bilinear_coord_grad(const Image& img, double u, double v);

/// Fixed linear resampling map: each output pixel is a weighted sum of source
/// pixels. Applying it is linear in the source image, which makes the VJP an
/// exact scatter of the same weights.
struct SamplingGrid {
  struct Tap {
    std::uint32_t source;  ///< source pixel index y * src_width + x
    double weight;
  };

  int width = 0;
  int height = 0;
  int src_width = 0;
  int src_height = 0;
  std::vector<std::uint32_t> offsets;  ///< taps of pixel k: [offsets[k], offsets[k + 1])
  std::vector<Tap> taps;

  /// One clamped bilinear sample per output pixel at the given row-major
  /// (u, v) source coordinates.
  static SamplingGrid from_coords(int src_w, int src_h, int out_w, int out_h,
                                  std::span<const std::array<double, 2>> coords);

  Image apply(const Image& src) const;
  /// Accumulates the pullback of `upstream` (shape width x height) into `grad`.
  void apply_vjp(const Image& upstream, ImageGradient& grad) const;
};

/// Grid that resizes a src_w x src_h image to out_w x out_h with a separable
/// tent filter. Output center i sits at (i + 0.5) * scale - 0.5 in source
/// pixels; the tent's half-width is max(scale, 1), so downscaling averages
/// every source pixel and upscaling reduces to bilinear interpolation.
/// Weights falling outside the source are dropped and the rest renormalized.
SamplingGrid resize_grid(int src_w, int src_h, int out_w, int out_h);

/// Applies resize_grid.
Image resize_bilinear(const Image& img, int out_w, int out_h);

/// Projective map taking the unit square corners (0,0), (1,0), (1,1), (0,1)
/// to the four given points in order.
class Homography {
 public:
  explicit Homography(const std::array<std::array<double, 2>, 4>& corners);
  std::array<double, 2> operator()(double a, double b) const;

 private:
  double a11_, a12_, a13_, a21_, a22_, a23_, a31_, a32_;
};

struct AugmentationSpec {
  int count = 8;
  double min_crop_fraction = 0.7;
  double max_corner_jitter_fraction = 0.05;
  int output_size_px = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sampling grids of every view: index 0 is the full image resized to
/// output_size_px, the rest are jittered square crops.
std::vector<SamplingGrid> view_grids(int src_w, int src_h, const AugmentationSpec& spec);

std::vector<Image> augment_views(const Image& img, const AugmentationSpec& spec);

/// Gradient w.r.t. the source image given one upstream gradient per view.
ImageGradient augment_views_vjp(int src_w, int src_h, const AugmentationSpec& spec,
                                std::span<const Image> upstream);

}  // namespace synesthesia
