#include "fdnn/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fdnn/error.hpp"

namespace fdnn {
namespace {

constexpr std::array<char, 8> kDataMagic{'F', 'D', 'N', 'N', 'D', 'A', 'T', 'A'};
constexpr std::array<char, 8> kParamMagic{'F', 'D', 'N', 'N', 'P', 'A', 'R', 'M'};
constexpr std::uint64_t kMaxMetaBytes = 1 << 20;
constexpr std::uint32_t kMaxDims = 64;

// Little-endian encoding, independent of the host byte order.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t load_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint32_t load_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void encode_row(std::span<const double> row, std::vector<char>& buffer) {
  buffer.resize(row.size() * 8);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(buffer.data(), row.data(), buffer.size());
  } else {
    for (std::size_t j = 0; j < row.size(); ++j) {
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(row[j]);
      for (int i = 0; i < 8; ++i) buffer[8 * j + i] = static_cast<char>(bits >> (8 * i));
    }
  }
}

void decode_row(const std::vector<char>& buffer, std::vector<double>& row) {
  row.resize(buffer.size() / 8);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(row.data(), buffer.data(), buffer.size());
  } else {
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = std::bit_cast<double>(load_u64(reinterpret_cast<const std::uint8_t*>(buffer.data()) + 8 * j));
    }
  }
}

// Bounds-checked cursor over a byte buffer.
class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}
  const std::uint8_t* take(std::size_t count) {
    if (count > bytes_.size() - pos_) throw IoError(what_ + ": truncated");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += count;
    return p;
  }
  std::uint32_t u32() { return load_u32(take(4)); }
  std::uint64_t u64() { return load_u64(take(8)); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> dataset_header_bytes(const std::vector<std::size_t>& dims, std::size_t n,
                                               const DatasetMeta& meta) {
  std::vector<std::uint8_t> out(kDataMagic.begin(), kDataMagic.end());
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::size_t k : dims) put_u64(out, k);
  put_u64(out, n);
  const std::string text = encode_meta(meta);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put_u64(out, fnv1a(out));
  return out;
}

void read_exact(std::istream& in, void* dst, std::size_t count, const fs::path& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw IoError(path.string() + ": truncated header");
}

DatasetHeader parse_dataset_header(std::istream& in, const fs::path& path) {
  std::vector<std::uint8_t> bytes(8 + 4 + 4);
  read_exact(in, bytes.data(), bytes.size(), path);
  if (!std::equal(kDataMagic.begin(), kDataMagic.end(), bytes.begin())) {
    throw IoError(path.string() + ": not a dataset file (bad magic)");
  }
  const std::uint32_t version = load_u32(bytes.data() + 8);
  if (version != kDatasetVersion) {
    throw IoError(path.string() + ": unsupported dataset version " + std::to_string(version));
  }
  const std::uint32_t d = load_u32(bytes.data() + 12);
  if (d == 0 || d > kMaxDims) throw IoError(path.string() + ": bad dimension count " + std::to_string(d));
  auto grow = [&](std::size_t count) {
    const std::size_t at = bytes.size();
    bytes.resize(at + count);
    read_exact(in, bytes.data() + at, count, path);
    return at;
  };
  DatasetHeader header;
  std::size_t at = grow(8 * static_cast<std::size_t>(d) + 16);
  for (std::uint32_t k = 0; k < d; ++k) header.dims.push_back(load_u64(bytes.data() + at + 8 * k));
  header.n = load_u64(bytes.data() + at + 8 * d);
  const std::uint64_t meta_len = load_u64(bytes.data() + at + 8 * d + 8);
  if (meta_len > kMaxMetaBytes) throw IoError(path.string() + ": metadata block too large");
  at = grow(meta_len);
  const std::string text(reinterpret_cast<const char*>(bytes.data() + at), meta_len);
  const std::uint64_t expected = fnv1a(bytes);
  std::uint8_t sum[8];
  read_exact(in, sum, 8, path);
  if (load_u64(sum) != expected) throw IoError(path.string() + ": header checksum mismatch");
  for (std::size_t k : header.dims) {
    if (k == 0) throw IoError(path.string() + ": zero grid count in header");
  }
  header.meta = decode_meta(text);
  header.payload_offset = bytes.size() + 8;
  return header;
}

std::uint64_t payload_bytes(const DatasetHeader& header) {
  const std::uint64_t points = header.points();
  if (header.n != 0 && points > std::numeric_limits<std::uint64_t>::max() / 8 / header.n) {
    throw IoError("dataset payload size overflows");
  }
  return 8 * header.n * points;
}

template <class T>
T parse_number(std::string_view text, const std::string& what) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw IoError("cannot parse " + what + " '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t hash) {
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::size_t DatasetHeader::points() const {
  std::size_t total = 1;
  for (std::size_t k : dims) {
    if (total > std::numeric_limits<std::size_t>::max() / k) throw IoError("grid size overflows");
    total *= k;
  }
  return total;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string encode_meta(const DatasetMeta& meta) {
  std::ostringstream out;
  out << "mean=" << meta.mean_id << '\n'
      << "kernel=" << meta.kernel << '\n'
      << "noise=" << meta.noise << '\n'
      << "sigma=" << format_double(meta.sigma) << '\n'
      << "seed=" << meta.seed << '\n';
  return out.str();
}

DatasetMeta decode_meta(const std::string& text) {
  DatasetMeta meta;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "mean") meta.mean_id = value;
    else if (key == "kernel") meta.kernel = value;
    else if (key == "noise") meta.noise = value;
    else if (key == "sigma") meta.sigma = parse_number<double>(value, "metadata sigma");
    else if (key == "seed") meta.seed = parse_number<std::uint64_t>(value, "metadata seed");
  }
  return meta;
}

DatasetWriter::DatasetWriter(const fs::path& path, const std::vector<std::size_t>& dims, std::size_t n,
                             const DatasetMeta& meta)
    : path_(path), n_(n) {
  points_ = GridDesign(dims).size();
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot create " + path.string());
  const auto header = dataset_header_bytes(dims, n, meta);
  out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  if (!out_) throw IoError("write failed: " + path.string());
}

void DatasetWriter::write_row(std::span<const double> row) {
  if (row.size() != points_) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " values, grid has " +
                                std::to_string(points_));
  }
  if (written_ >= n_) throw std::invalid_argument("more rows than declared n = " + std::to_string(n_));
  encode_row(row, buffer_);
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw IoError("write failed: " + path_.string());
  ++written_;
}

void DatasetWriter::finish() {
  if (written_ != n_) {
    throw IoError(path_.string() + ": wrote " + std::to_string(written_) + " of " + std::to_string(n_) + " rows");
  }
  out_.close();
  if (!out_) throw IoError("write failed: " + path_.string());
}

DatasetReader::DatasetReader(const fs::path& path) : path_(path) {
  in_.open(path, std::ios::binary);
  if (!in_) throw IoError("cannot open " + path.string());
  header_ = parse_dataset_header(in_, path);
  std::error_code ec;
  const std::uint64_t size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());
  const std::uint64_t expected = header_.payload_offset + payload_bytes(header_);
  if (size != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(size));
  }
}

bool DatasetReader::next_row(std::vector<double>& row) {
  if (read_ == header_.n) return false;
  buffer_.resize(header_.points() * 8);
  in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (static_cast<std::size_t>(in_.gcount()) != buffer_.size()) throw IoError(path_.string() + ": truncated payload");
  decode_row(buffer_, row);
  ++read_;
  return true;
}

DatasetHeader read_dataset_header(const fs::path& path) { return DatasetReader(path).header(); }

void write_dataset(const fs::path& path, const FunctionalDataset& dataset) {
  DatasetWriter writer(path, dataset.grid.dims(), dataset.subjects(), dataset.meta);
  for (Eigen::Index i = 0; i < dataset.y.rows(); ++i) {
    writer.write_row(std::span<const double>(dataset.y.row(i).data(), static_cast<std::size_t>(dataset.y.cols())));
  }
  writer.finish();
}

FunctionalDataset read_dataset(const fs::path& path) {
  DatasetReader reader(path);
  const DatasetHeader& h = reader.header();
  FunctionalDataset out{GridDesign(h.dims), RowMatrix(h.n, h.points()), h.meta};
  std::vector<double> row;
  for (std::size_t i = 0; reader.next_row(row); ++i) {
    out.y.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), row.size());
  }
  return out;
}

bool read_le_doubles(std::istream& in, std::vector<double>& row) {
  std::vector<char> buffer(row.size() * 8);
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size()) return false;
  decode_row(buffer, row);
  return true;
}

Eigen::VectorXd read_pointwise_mean(const fs::path& path, DatasetHeader* header) {
  DatasetReader reader(path);
  if (reader.header().n == 0) throw std::invalid_argument(path.string() + ": dataset has no subjects");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reader.header().points()));
  std::vector<double> row;
  while (reader.next_row(row)) sum += Eigen::Map<const Eigen::VectorXd>(row.data(), row.size());
  if (header) *header = reader.header();
  return sum / static_cast<double>(reader.header().n);
}

std::vector<std::uint8_t> encode_network(const Network& net) {
  validate(net.arch);
  if (!net.params.matches(net.arch)) throw std::invalid_argument("parameters do not match the architecture");
  std::vector<std::uint8_t> out(kParamMagic.begin(), kParamMagic.end());
  put_u32(out, kParamsVersion);
  put_u32(out, net.arch.constrained ? 1u : 0u);
  put_u64(out, net.arch.hidden_layers());
  for (std::size_t w : net.arch.widths) put_u64(out, w);
  put_u64(out, net.arch.sparsity);
  put_f64(out, net.arch.norm_bound);
  for (const auto& w : net.params.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    }
  }
  for (const auto& v : net.params.shifts) {
    for (Eigen::Index r = 0; r < v.size(); ++r) put_f64(out, v(r));
  }
  put_u64(out, fnv1a(out));
  return out;
}

Network decode_network(std::span<const std::uint8_t> bytes) {
  const std::string what = "params file";
  if (bytes.size() < 16 || !std::equal(kParamMagic.begin(), kParamMagic.end(), bytes.begin())) {
    throw IoError(what + ": bad magic");
  }
  if (bytes.size() < 24 || fnv1a(bytes.first(bytes.size() - 8)) != load_u64(bytes.data() + bytes.size() - 8)) {
    throw IoError(what + ": checksum mismatch");
  }
  Cursor cur(bytes.first(bytes.size() - 8), what);
  cur.take(8);
  const std::uint32_t version = cur.u32();
  if (version != kParamsVersion) throw IoError(what + ": unsupported version " + std::to_string(version));
  Network net;
  net.arch.constrained = (cur.u32() & 1u) != 0;
  const std::uint64_t L = cur.u64();
  if (L == 0 || L > 10'000) throw IoError(what + ": bad depth");
  for (std::uint64_t l = 0; l < L + 2; ++l) net.arch.widths.push_back(cur.u64());
  net.arch.sparsity = cur.u64();
  net.arch.norm_bound = cur.f64();
  try {
    validate(net.arch);
  } catch (const std::invalid_argument& e) {
    throw IoError(what + ": " + e.what());
  }
  net.params = NetworkParams::zeros(net.arch);
  for (auto& w : net.params.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = cur.f64();
    }
  }
  for (auto& v : net.params.shifts) {
    for (Eigen::Index r = 0; r < v.size(); ++r) v(r) = cur.f64();
  }
  if (!cur.done()) throw IoError(what + ": trailing bytes");
  return net;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_network(const fs::path& path, const Network& net) { write_bytes(path, encode_network(net)); }

Network read_network(const fs::path& path) { return decode_network(read_bytes(path)); }

void write_records_csv(std::ostream& out, const std::vector<RiskRecord>& records) {
  out << "sigma,N,n,rep,seed,risk,seconds\n";
  for (const auto& r : records) {
    out << format_double(r.sigma) << ',' << r.n_points << ',' << r.n << ',' << r.rep << ',' << r.seed << ','
        << (r.failed ? std::string("failed") : format_double(r.risk)) << ',' << format_double(r.seconds) << '\n';
  }
}

std::vector<RiskRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sigma,N,n,rep,seed,risk,seconds") {
    throw IoError("records CSV: unexpected header");
  }
  std::vector<RiskRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw IoError("records CSV: malformed line '" + line + "'");
    RiskRecord r;
    r.sigma = parse_number<double>(f[0], "sigma");
    r.n_points = parse_number<std::size_t>(f[1], "N");
    r.n = parse_number<std::size_t>(f[2], "n");
    r.rep = parse_number<std::size_t>(f[3], "rep");
    r.seed = parse_number<std::uint64_t>(f[4], "seed");
    r.failed = f[5] == "failed";
    r.risk = r.failed ? std::numeric_limits<double>::quiet_NaN() : parse_number<double>(f[5], "risk");
    r.seconds = parse_number<double>(f[6], "seconds");
    out.push_back(r);
  }
  return out;
}

void write_table_csv(std::ostream& out, const std::vector<RiskRow>& rows) {
  out << "sigma,N,n,reps,mean_risk,sd_risk\n";
  for (const auto& r : rows) {
    out << format_double(r.sigma) << ',' << r.n_points << ',' << r.n << ',' << r.reps << ','
        << format_double(r.mean_risk) << ',' << format_double(r.sd_risk) << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, const SpectrumReport& report) {
  out << "kernel,varrho,d,N,lambda1,method,N_d,zero_mode\n";
  for (const auto& row : report.rows) {
    out << report.kernel << ',' << format_double(report.varrho) << ',' << report.d << ',' << row.n_total << ','
        << format_double(row.lambda1) << ',' << to_string(row.method) << ',' << row.n_axis << ','
        << format_double(row.zero_mode) << '\n';
  }
  if (report.fit) {
    out << "# varrho_hat=" << format_double(report.fit->rate) << " std_error=" << format_double(report.fit->std_error)
        << " points=" << report.fit->points << '\n';
  } else {
    out << "# varrho_hat=unavailable\n";
  }
}

void write_train_report_csv(std::ostream& out, const TrainReport& report, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "epoch,data_loss,l1_loss,phase\n";
  for (std::size_t e = 0; e < report.data_loss.size(); ++e) {
    out << e + 1 << ',' << format_double(report.data_loss[e]) << ','
        << (e < report.l1_loss.size() ? format_double(report.l1_loss[e]) : std::string()) << ",main\n";
  }
  for (std::size_t e = 0; e < report.finetune_data_loss.size(); ++e) {
    out << e + 1 << ',' << format_double(report.finetune_data_loss[e]) << ",,finetune\n";
  }
  out << "# final_risk=" << format_double(report.final_risk) << " nonzero=" << report.final_nonzero
      << " norm=" << format_double(report.final_norm) << " steps=" << report.steps
      << " seconds=" << format_double(report.seconds) << '\n';
}

std::vector<std::uint8_t> to_gray(std::span<const double> values, double lo, double hi) {
  std::vector<std::uint8_t> out(values.size(), 0);
  const double span = hi - lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return out;
}

void write_pgm(const fs::path& path, std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) throw std::invalid_argument("pixel count does not match width x height");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "P5 " << width << ' ' << height << " 255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fdnn
