#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "synesthesia/matrix.hpp"

namespace synesthesia {

/// Named float32 tensor, row-major.
struct Tensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// SYNW1 container. Layout, all integers little-endian u32:
///   "SYNW1" | entry count | per entry: name length, name bytes, rank,
///   dims..., float32 data.
class WeightFile {
 public:
  WeightFile() = default;

  /// Throws FormatError on a duplicate name or a data/shape size mismatch.
  void add(Tensor tensor);
  void add(std::string name, const Matrix& m);
  void add(std::string name, const std::vector<double>& v);

  const std::vector<Tensor>& entries() const { return entries_; }
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;

  /// Fetches a tensor as a matrix / vector, throwing FormatError when the
  /// stored shape differs from the expected one.
  Matrix matrix(std::string_view name, std::size_t rows, std::size_t cols) const;
  std::vector<double> vector(std::string_view name, std::size_t n) const;

  std::vector<std::uint8_t> serialize() const;
  static WeightFile parse(const std::vector<std::uint8_t>& bytes);

  friend bool operator==(const WeightFile&, const WeightFile&) = default;

 private:
  std::vector<Tensor> entries_;
};

WeightFile load_weight_file(const std::filesystem::path& path);
void save_weight_file(const WeightFile& wf, const std::filesystem::path& path);

}  // namespace synesthesia
