#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "found/error.hpp"
#include "found/image.hpp"
#include "found/vmf.hpp"

namespace found::io {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Netpbm: binary P6 (RGB) and P5 (gray), maxval 1..65535.

namespace detail {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  // Where the most recent number began.
  std::size_t number_start() const { return start_; }

  unsigned long next_number() {
    skip_space_and_comments();
    const std::size_t start = start_ = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000ul) throw FormatError("PNM header value too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw FormatError("truncated PNM header", pos_);
      throw FormatError("expected a decimal number in PNM header", pos_);
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  void end_of_header() {
    if (pos_ >= bytes_.size()) throw FormatError("truncated PNM header", pos_);
    if (!is_space(bytes_[pos_])) throw FormatError("expected whitespace after PNM maxval", pos_);
    ++pos_;
  }

 private:
  static bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
  std::size_t start_ = 2;
};

}  // namespace detail

inline ImageTensor decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw FormatError("truncated PNM header", bytes.size());
  if (bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5'))
    throw FormatError("not a binary PNM file (expected P5 or P6 magic)", 0);
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  detail::PnmHeaderReader hdr(bytes);
  const unsigned long width = hdr.next_number();
  if (width == 0) throw FormatError("PNM width is zero", hdr.number_start());
  const unsigned long height = hdr.next_number();
  if (height == 0) throw FormatError("PNM height is zero", hdr.number_start());
  const unsigned long maxval = hdr.next_number();
  if (maxval == 0 || maxval > 65535) throw FormatError("PNM maxval must be in 1..65535", hdr.number_start());
  hdr.end_of_header();

  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t expected = std::size_t{width} * height * channels * sample_bytes;
  const std::size_t raster = hdr.offset();
  if (bytes.size() - raster < expected)
    throw FormatError("truncated PNM raster: need " + std::to_string(expected) + " bytes, have " +
                          std::to_string(bytes.size() - raster),
                      bytes.size());
  if (bytes.size() - raster > expected) throw FormatError("trailing bytes after PNM raster", raster + expected);

  ImageTensor img(height, width, channels);
  auto out = img.data();
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned v = sample_bytes == 1 ? bytes[raster + i]
                                   : (unsigned{bytes[raster + 2 * i]} << 8) | bytes[raster + 2 * i + 1];
    if (v > maxval) throw FormatError("PNM sample exceeds maxval", raster + i * sample_bytes);
    out[i] = static_cast<double>(v) * scale;
  }
  return img;
}

inline std::uint8_t quantize8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// 8-bit P6 for three channels, P5 for one. Values are clamped to [0, 1].
inline std::vector<std::uint8_t> encode_pnm(const ImageTensor& img) {
  img.validate();
  const std::string header = std::string(img.channels() == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width()) +
                             " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.data()) bytes.push_back(quantize8(v));
  return bytes;
}

inline ImageTensor load_image(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

inline void save_image(const ImageTensor& img, const std::filesystem::path& path) { write_bytes(path, encode_pnm(img)); }

inline bool is_image_path(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

// Regular image files of a directory, sorted by file name.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_path(entry.path())) out.push_back(entry.path());
  std::ranges::sort(out);
  return out;
}

// ---------------------------------------------------------------------------
// EMB1: "EMB1", u32 n, u32 d, u32 K, n*d float32, n u32 labels (all little-endian).

struct Emb1 {
  std::uint32_t n = 0;
  std::uint32_t dim = 0;
  std::uint32_t n_classes = 0;
  std::vector<float> values;
  std::vector<std::uint32_t> labels;
};

namespace detail {

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
         (std::uint32_t{b[at + 3]} << 24);
}

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace detail

inline Emb1 decode_emb1(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw FormatError("truncated EMB1 header", bytes.size());
  if (std::memcmp(bytes.data(), "EMB1", 4) != 0) throw FormatError("bad EMB1 magic", 0);
  Emb1 e;
  e.n = detail::get_u32(bytes, 4);
  e.dim = detail::get_u32(bytes, 8);
  e.n_classes = detail::get_u32(bytes, 12);
  if (e.dim == 0) throw FormatError("EMB1 dimension is zero", 8);
  const std::uint64_t expected = 16 + 4ull * e.n * e.dim + 4ull * e.n;
  if (bytes.size() != expected)
    throw FormatError("EMB1 declares " + std::to_string(expected) + " bytes but file has " +
                          std::to_string(bytes.size()),
                      std::min<std::uint64_t>(bytes.size(), expected));
  e.values.resize(std::size_t{e.n} * e.dim);
  for (std::size_t i = 0; i < e.values.size(); ++i)
    e.values[i] = std::bit_cast<float>(detail::get_u32(bytes, 16 + 4 * i));
  const std::size_t label_at = 16 + 4 * e.values.size();
  e.labels.resize(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    e.labels[i] = detail::get_u32(bytes, label_at + 4 * i);
    if (e.labels[i] >= e.n_classes) throw FormatError("EMB1 label out of range [0, K)", label_at + 4 * i);
  }
  for (std::size_t i = 0; i < e.values.size(); ++i)
    if (!std::isfinite(e.values[i])) throw FormatError("EMB1 value is not finite", 16 + 4 * i);
  return e;
}

inline std::vector<std::uint8_t> encode_emb1(const Emb1& e) {
  if (e.values.size() != std::size_t{e.n} * e.dim || e.labels.size() != e.n)
    throw DataError("EMB1 payload does not match its header");
  std::vector<std::uint8_t> b{'E', 'M', 'B', '1'};
  b.reserve(16 + 4 * (e.values.size() + e.labels.size()));
  detail::put_u32(b, e.n);
  detail::put_u32(b, e.dim);
  detail::put_u32(b, e.n_classes);
  for (float v : e.values) detail::put_u32(b, std::bit_cast<std::uint32_t>(v));
  for (std::uint32_t l : e.labels) detail::put_u32(b, l);
  return b;
}

inline Emb1 load_emb1(const std::filesystem::path& path) {
  try {
    return decode_emb1(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

inline void save_emb1(const Emb1& e, const std::filesystem::path& path) { write_bytes(path, encode_emb1(e)); }

// Rows are renormalized after the float32 round trip.
inline vmf::EmbeddingBatch to_batch(const Emb1& e) {
  vmf::EmbeddingBatch b{e.dim, std::vector<double>(e.values.begin(), e.values.end()), e.labels};
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::span<double> r(b.features.data() + i * b.dim, b.dim);
    const double n = vmf::norm(r);
    if (std::abs(n - 1.0) > 1e-4) throw DataError("EMB1 row " + std::to_string(i) + " is not unit-norm");
    for (double& x : r) x /= n;
  }
  b.validate();
  return b;
}

inline Emb1 from_batch(const vmf::EmbeddingBatch& b, std::uint32_t n_classes) {
  Emb1 e;
  e.n = static_cast<std::uint32_t>(b.size());
  e.dim = static_cast<std::uint32_t>(b.dim);
  e.n_classes = n_classes;
  e.values.assign(b.features.begin(), b.features.end());
  e.labels = b.labels;
  return e;
}

// ---------------------------------------------------------------------------
// Text embeddings and the source-to-target shift vector.

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

inline EmbeddingVector semantic_shift(const EmbeddingVector& source, const EmbeddingVector& target) {
  if (source.dim() != target.dim())
    throw DataError("embedding dimension mismatch: " + std::to_string(source.dim()) + " vs " +
                    std::to_string(target.dim()));
  EmbeddingVector out{std::vector<double>(source.dim())};
  for (std::size_t i = 0; i < source.dim(); ++i) out.values[i] = target.values[i] - source.values[i];
  return out;
}

// A single-vector EMB1 file (n = 1).
inline EmbeddingVector load_embedding_vector(const std::filesystem::path& path) {
  const Emb1 e = load_emb1(path);
  if (e.n != 1) throw DataError("'" + path.string() + "' holds " + std::to_string(e.n) + " vectors, expected 1");
  return {std::vector<double>(e.values.begin(), e.values.end())};
}

inline void save_embedding_vector(const EmbeddingVector& v, const std::filesystem::path& path) {
  Emb1 e;
  e.n = 1;
  e.dim = static_cast<std::uint32_t>(v.dim());
  e.n_classes = 1;
  e.values.assign(v.values.begin(), v.values.end());
  e.labels = {0};
  save_emb1(e, path);
}

}  // namespace found::io
