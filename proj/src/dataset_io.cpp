#include "thpi/dataset_io.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>

namespace thpi {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{0x54, 0x48, 0x50, 0x49};  // "THPI"
constexpr std::uint8_t kMatrixVersion = 0x01;
// High bit distinguishes the model container from matrix files.
constexpr std::uint8_t kModelVersion = 0x81;
constexpr std::size_t kMatrixHeaderSize = 13;

enum class Tag : std::uint8_t {
  end = 0x00,
  method = 0x01,
  mean = 0x02,
  preprocessing = 0x03,
  rotation = 0x04,
  bits = 0x05,
  hyperparams = 0x06,
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw DataError(fmt::format("truncated file: {} needs {} bytes at offset {}, {} left", what,
                                  n, pos_, remaining()));
    }
  }
  std::uint8_t u8(std::string_view what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(std::string_view what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(std::string_view what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64(std::string_view what) { return std::bit_cast<double>(u64(what)); }
  std::span<const std::uint8_t> take(std::size_t n, std::string_view what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_magic(ByteReader& in) {
  for (std::uint8_t expected : kMagic) {
    const std::size_t at = in.offset();
    if (in.u8("magic") != expected) {
      throw DataError(fmt::format("version mismatch: bad magic at offset {}, not a THPI file", at));
    }
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

void write_dense(ByteWriter& out, const Matrix& m) {
  out.u32(static_cast<std::uint32_t>(m.rows()));
  out.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.f64(m(i, j));
}

Matrix read_dense(ByteReader& in, std::string_view what) {
  const std::uint32_t rows = in.u32(what);
  const std::uint32_t cols = in.u32(what);
  const std::uint64_t count = std::uint64_t{rows} * cols;
  if (count > in.remaining() / 8) {
    throw DataError(fmt::format("{}: {}x{} payload exceeds remaining {} bytes at offset {}", what,
                                rows, cols, in.remaining(), in.offset()));
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = in.f64(what);
  return m;
}

}  // namespace

MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::thpi_bin;
}

MatrixFormat parse_format(std::string_view name) {
  if (name == "csv") return MatrixFormat::csv;
  if (name == "thpi-bin" || name == "bin") return MatrixFormat::thpi_bin;
  throw ConfigError(fmt::format("unknown matrix format '{}' (expected csv or thpi-bin)", name));
}

DataMatrix parse_csv_matrix(std::string_view text, bool skip_header) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (skip_header && line_no == 1) continue;
    if (line.empty()) {
      // Only a trailing newline may produce an empty line.
      if (pos >= text.size()) break;
      throw DataError(fmt::format("csv line {}: empty line", line_no));
    }
    Index count = 0;
    std::size_t cell_start = 0;
    while (true) {
      std::size_t comma = line.find(',', cell_start);
      std::string_view cell =
          line.substr(cell_start, comma == std::string_view::npos ? std::string_view::npos
                                                                  : comma - cell_start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc{} || ptr != last) {
        throw DataError(fmt::format("csv line {}, column {}: non-numeric cell '{}'", line_no,
                                    count + 1, cell));
      }
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("csv line {}, column {}: non-finite value", line_no,
                                    count + 1));
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw DataError(fmt::format("csv line {}: ragged row with {} cells, expected {}", line_no,
                                  count, cols));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("csv: no data rows");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return DataMatrix(std::move(m));
}

std::string to_csv(const DataMatrix& x) {
  std::string out;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out.push_back(',');
      out += fmt::format("{}", x.values()(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::uint8_t> to_thpi_bin(const DataMatrix& x) {
  ByteWriter out;
  out.raw(kMagic);
  out.u8(kMatrixVersion);
  write_dense(out, x.values());
  return std::move(out.bytes());
}

DataMatrix parse_thpi_bin(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  check_magic(in);
  const std::uint8_t version = in.u8("version");
  if (version != kMatrixVersion) {
    throw DataError(fmt::format("offset 4: unsupported thpi-bin version 0x{:02x}", version));
  }
  const std::uint32_t rows = in.u32("row count");
  const std::uint32_t cols = in.u32("column count");
  if (rows == 0 || cols == 0) {
    throw DataError(fmt::format("offset 5: empty matrix header ({}x{})", rows, cols));
  }
  const std::uint64_t count = std::uint64_t{rows} * cols;
  if (count > in.remaining() / 8 || count * 8 != in.remaining()) {
    throw DataError(fmt::format("offset {}: payload of {} bytes does not match header {}x{}",
                                kMatrixHeaderSize, in.remaining(), rows, cols));
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const std::size_t at = in.offset();
      const double v = in.f64("payload");
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("offset {}: non-finite value", at));
      }
      m(i, j) = v;
    }
  }
  return DataMatrix(std::move(m));
}

DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format, bool csv_header) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  try {
    if (format == MatrixFormat::csv) {
      return parse_csv_matrix(
          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), csv_header);
    }
    return parse_thpi_bin(bytes);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_matrix(const std::filesystem::path& path, const DataMatrix& x, MatrixFormat format) {
  if (format == MatrixFormat::csv) {
    const std::string text = to_csv(x);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  } else {
    write_file(path, to_thpi_bin(x));
  }
}

std::vector<std::uint8_t> serialize_model(const HashModel& model) {
  model.validate();
  ByteWriter out;
  out.raw(kMagic);
  out.u8(kModelVersion);

  auto record = [&out](Tag tag, ByteWriter body) {
    out.u8(static_cast<std::uint8_t>(tag));
    out.u32(static_cast<std::uint32_t>(body.bytes().size()));
    out.raw(body.bytes());
  };

  {
    ByteWriter b;
    const std::string_view tag = to_string(model.method);
    b.raw(std::span(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
    record(Tag::method, std::move(b));
  }
  {
    ByteWriter b;
    b.u32(static_cast<std::uint32_t>(model.centering.mean.size()));
    for (Index i = 0; i < model.centering.mean.size(); ++i) b.f64(model.centering.mean(i));
    record(Tag::mean, std::move(b));
  }
  {
    ByteWriter b;
    b.u8(static_cast<std::uint8_t>(model.preprocessing.kind));
    write_dense(b, model.preprocessing.matrix);
    record(Tag::preprocessing, std::move(b));
  }
  {
    ByteWriter b;
    write_dense(b, model.rotation);
    record(Tag::rotation, std::move(b));
  }
  {
    ByteWriter b;
    b.u32(model.bits);
    record(Tag::bits, std::move(b));
  }
  {
    ByteWriter b;
    b.f64(model.hyper.lambda1);
    b.f64(model.hyper.lambda2);
    b.u32(model.hyper.k_graph);
    b.u32(model.hyper.iters);
    b.u64(model.hyper.seed);
    record(Tag::hyperparams, std::move(b));
  }
  record(Tag::end, ByteWriter{});
  return std::move(out.bytes());
}

HashModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  check_magic(in);
  const std::uint8_t version = in.u8("version");
  if (version != kModelVersion) {
    throw DataError(fmt::format("version mismatch: model container version 0x{:02x}, expected 0x{:02x}",
                                version, kModelVersion));
  }
  HashModel model;
  unsigned seen = 0;
  while (true) {
    const auto tag = static_cast<Tag>(in.u8("record tag"));
    const std::uint32_t length = in.u32("record length");
    ByteReader body(in.take(length, "record body"));
    switch (tag) {
      case Tag::end:
        if (seen != 0x3f) {
          throw DataError(fmt::format("truncated model: missing records (mask 0x{:02x})", seen));
        }
        model.validate();
        return model;
      case Tag::method: {
        auto raw = body.take(length, "method");
        model.method = parse_method(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
        seen |= 0x01;
        break;
      }
      case Tag::mean: {
        const std::uint32_t n = body.u32("mean length");
        if (n > body.remaining() / 8) throw DataError("truncated model: mean record");
        model.centering.mean.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) model.centering.mean(i) = body.f64("mean");
        seen |= 0x02;
        break;
      }
      case Tag::preprocessing: {
        const std::uint8_t kind = body.u8("projection kind");
        if (kind > static_cast<std::uint8_t>(ProjectionKind::lsh)) {
          throw DataError(fmt::format("unknown projection kind {}", kind));
        }
        model.preprocessing.kind = static_cast<ProjectionKind>(kind);
        model.preprocessing.matrix = read_dense(body, "preprocessing");
        seen |= 0x04;
        break;
      }
      case Tag::rotation:
        model.rotation = read_dense(body, "rotation");
        seen |= 0x08;
        break;
      case Tag::bits:
        model.bits = body.u32("bits");
        seen |= 0x10;
        break;
      case Tag::hyperparams:
        model.hyper.lambda1 = body.f64("lambda1");
        model.hyper.lambda2 = body.f64("lambda2");
        model.hyper.k_graph = body.u32("k");
        model.hyper.iters = body.u32("iters");
        model.hyper.seed = body.u64("seed");
        seen |= 0x20;
        break;
      default:
        break;  // unknown records are skipped
    }
  }
}

void save_model(const HashModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

HashModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

SplitBundle make_split(const DataMatrix& target_all, const DataMatrix& source_all, double alpha,
                       double test_fraction, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError(fmt::format("alpha must be in (0, 1], got {}", alpha));
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError(fmt::format("test fraction must be in [0, 1), got {}", test_fraction));
  }
  target_all.require_nonempty("make_split target");
  source_all.require_nonempty("make_split source");
  if (target_all.rows() != source_all.rows()) {
    throw DataError(fmt::format("make_split: target has {} rows, source has {}; views must be "
                                "index-parallel",
                                target_all.rows(), source_all.rows()));
  }
  const Index total = target_all.rows();
  std::vector<Index> perm(static_cast<std::size_t>(total));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(total)));
  const Index remaining = total - n_test;
  const auto n_corr = static_cast<Index>(std::llround(alpha * static_cast<double>(remaining)));
  if (remaining <= 0 || n_corr == 0) {
    throw ConfigError(fmt::format("make_split: alpha={} and test fraction={} leave no "
                                  "correspondences out of {} rows",
                                  alpha, test_fraction, total));
  }

  SplitBundle s;
  s.alpha = alpha;
  s.seed = seed;
  auto first = perm.begin();
  s.test_origin.assign(first, first + n_test);
  s.corr_origin.assign(first + n_test, first + n_test + n_corr);
  s.extra_origin.assign(first + n_test + n_corr, perm.end());
  std::sort(s.test_origin.begin(), s.test_origin.end());
  std::sort(s.corr_origin.begin(), s.corr_origin.end());
  std::sort(s.extra_origin.begin(), s.extra_origin.end());

  s.target_train = target_all.select_rows(s.corr_origin);
  s.source_corr = source_all.select_rows(s.corr_origin);
  s.source_extra = source_all.select_rows(s.extra_origin);
  s.target_test = target_all.select_rows(s.test_origin);
  std::vector<Index> db = s.corr_origin;
  db.insert(db.end(), s.extra_origin.begin(), s.extra_origin.end());
  s.target_database = target_all.select_rows(db);
  return s;
}

}  // namespace thpi
