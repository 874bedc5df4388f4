#include "siad/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "siad/error.hpp"

namespace siad::io {

namespace {

static_assert(sizeof(double) == 8);

class Writer {
 public:
  void magic(const char* m) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void magic(const char* m) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) {
      throw FormatError(FormatFault::MagicMismatch, std::string(what_) + ": magic bytes are not '" + m + "'");
    }
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  void version(std::uint32_t expected) {
    const std::uint32_t v = u32();
    if (v != expected) {
      throw FormatError(FormatFault::VersionMismatch, std::string(what_) + ": unsupported format version " +
                                                          std::to_string(v) + " (expected " +
                                                          std::to_string(expected) + ")");
    }
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw FormatError(FormatFault::TrailingData, std::string(what_) + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(FormatFault::Truncated, std::string(what_) + ": truncated file");
  }
  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(FormatFault::MalformedCsv, "manifest line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

Bytes encode_image(const Tensor& image) {
  std::uint32_t H = 0, W = 0;
  if (image.rank() == 3 && image.channels() == 1) {
    H = static_cast<std::uint32_t>(image.height());
    W = static_cast<std::uint32_t>(image.width());
  } else if (image.rank() == 2) {
    H = static_cast<std::uint32_t>(image.extent(0));
    W = static_cast<std::uint32_t>(image.extent(1));
  } else {
    throw InvalidInput("encode_image: expected a single-channel image");
  }
  Writer w;
  w.magic("SIIM");
  w.u32(kImageVersion);
  w.u32(H);
  w.u32(W);
  for (double v : image.values()) w.f64(v);
  return w.take();
}

Tensor decode_image(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "image file");
  r.magic("SIIM");
  r.version(kImageVersion);
  const std::uint32_t H = r.u32(), W = r.u32();
  std::vector<double> data(std::size_t{H} * W);
  for (double& v : data) v = r.f64();
  r.finish();
  return Tensor({1, H, W}, std::move(data));
}

Bytes encode_weights(const ModelWeights& w) {
  w.validate();
  Writer out;
  out.magic("SIAD");
  out.u32(kWeightsVersion);
  out.u32(w.arch.side);
  out.u32(static_cast<std::uint32_t>(w.arch.blocks()));
  for (auto c : w.arch.channels) out.u32(c);
  out.u32(w.arch.latent);
  out.u32(w.arch.kernel);
  out.u32(w.arch.conditions);
  for (auto span : w.parameters())
    for (double v : span) out.f64(v);
  return out.take();
}

ModelWeights decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "weight file");
  r.magic("SIAD");
  r.version(kWeightsVersion);
  ArchitectureSpec arch;
  arch.side = r.u32();
  const std::uint32_t blocks = r.u32();
  if (blocks > 16) throw FormatError(FormatFault::Truncated, "weight file: implausible block count");
  arch.channels.assign(blocks, 0);
  for (auto& c : arch.channels) c = r.u32();
  arch.latent = r.u32();
  arch.kernel = r.u32();
  arch.conditions = r.u32();
  ModelWeights w = ModelWeights::zeros(arch);
  for (auto span : w.parameters())
    for (double& v : span) v = r.f64();
  r.finish();
  w.validate();
  return w;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatFault::Io, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatFault::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatFault::Io, "short write to " + path.string());
}

Tensor read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }
void write_image(const std::filesystem::path& path, const Tensor& image) { write_file(path, encode_image(image)); }
ModelWeights read_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }
void write_weights(const std::filesystem::path& path, const ModelWeights& w) { write_file(path, encode_weights(w)); }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_manifest(std::span<const ManifestRow> rows) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.id << ',' << r.role << ',' << r.path << ',' << format_double(r.age) << ',' << format_double(r.time_gap)
        << ',' << r.label << ',' << r.region_path << '\n';
  }
  return out.str();
}

std::vector<ManifestRow> parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError(FormatFault::MalformedCsv, std::string("manifest header must be '") + kManifestHeader + "'");
  }
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) {
      throw FormatError(FormatFault::MalformedCsv, "manifest line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                                       std::to_string(cells.size()));
    }
    ManifestRow r;
    r.id = cells[0];
    r.role = cells[1];
    r.path = cells[2];
    r.age = parse_double(cells[3], line_no);
    r.time_gap = parse_double(cells[4], line_no);
    const double label = parse_double(cells[5], line_no);
    if (label != 0.0 && label != 1.0) {
      throw FormatError(FormatFault::MalformedCsv, "manifest line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    r.label = static_cast<int>(label);
    r.region_path = cells[6];
    if (r.id.empty() || r.path.empty()) {
      throw FormatError(FormatFault::MalformedCsv, "manifest line " + std::to_string(line_no) + ": empty id or path");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  const std::string text = format_manifest(rows);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return parse_manifest(std::string(b.begin(), b.end()));
}

}  // namespace siad::io
