#include "synesthesia/weight_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "synesthesia/error.hpp"

namespace synesthesia {
namespace {

constexpr char kMagic[] = "SYNW1";
constexpr std::size_t kMagicSize = 5;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("SYNW1 truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += 4;
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string shape_string(const std::vector<std::uint32_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

std::size_t Tensor::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t d) { return a * d; });
}

void WeightFile::add(Tensor tensor) {
  if (contains(tensor.name)) throw FormatError("duplicate tensor name '" + tensor.name + "'");
  if (tensor.data.size() != tensor.element_count()) {
    throw FormatError("tensor '" + tensor.name + "' has " + std::to_string(tensor.data.size()) +
                      " values for shape " + shape_string(tensor.shape));
  }
  entries_.push_back(std::move(tensor));
}

void WeightFile::add(std::string name, const Matrix& m) {
  Tensor t{std::move(name),
           {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
           {m.data.begin(), m.data.end()}};
  add(std::move(t));
}

void WeightFile::add(std::string name, const std::vector<double>& v) {
  Tensor t{std::move(name), {static_cast<std::uint32_t>(v.size())}, {v.begin(), v.end()}};
  add(std::move(t));
}

bool WeightFile::contains(std::string_view name) const {
  return std::ranges::any_of(entries_, [&](const Tensor& t) { return t.name == name; });
}

const Tensor& WeightFile::get(std::string_view name) const {
  for (const auto& t : entries_) {
    if (t.name == name) return t;
  }
  throw FormatError("missing tensor '" + std::string(name) + "'");
}

Matrix WeightFile::matrix(std::string_view name, std::size_t rows, std::size_t cols) const {
  const Tensor& t = get(name);
  if (t.shape.size() != 2 || t.shape[0] != rows || t.shape[1] != cols) {
    throw FormatError("tensor '" + std::string(name) + "' has shape " + shape_string(t.shape) +
                      ", expected [" + std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
  Matrix m(rows, cols);
  std::copy(t.data.begin(), t.data.end(), m.data.begin());
  return m;
}

std::vector<double> WeightFile::vector(std::string_view name, std::size_t n) const {
  const Tensor& t = get(name);
  if (t.shape.size() != 1 || t.shape[0] != n) {
    throw FormatError("tensor '" + std::string(name) + "' has shape " + shape_string(t.shape) +
                      ", expected [" + std::to_string(n) + "]");
  }
  return {t.data.begin(), t.data.end()};
}

std::vector<std::uint8_t> WeightFile::serialize() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& t : entries_) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u32(out, d);
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightFile WeightFile::parse(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0) {
    throw FormatError("bad SYNW1 magic");
  }
  Reader r(bytes);
  r.str(kMagicSize, "magic");
  const std::uint32_t count = r.u32("entry count");
  WeightFile wf;
  for (std::uint32_t e = 0; e < count; ++e) {
    Tensor t;
    const std::uint32_t name_len = r.u32("name length");
    t.name = r.str(name_len, "name");
    const std::uint32_t rank = r.u32("rank");
    r.need(static_cast<std::size_t>(rank) * 4, "dims");
    for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(r.u32("dims"));
    const std::size_t n = t.element_count();
    if (n > (1ULL << 32)) throw FormatError("tensor '" + t.name + "' is implausibly large");
    r.need(n * 4, "tensor data");
    t.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.data.push_back(std::bit_cast<float>(r.u32("data")));
    wf.add(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after SYNW1 entries");
  return wf;
}

WeightFile load_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return WeightFile::parse(bytes);
}

void save_weight_file(const WeightFile& wf, const std::filesystem::path& path) {
  const auto bytes = wf.serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing weight file: " + path.string());
}

}  // namespace synesthesia
