#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/evaluate.hpp"
#include "fdnn/grid.hpp"
#include "fdnn/network.hpp"
#include "fdnn/simulate.hpp"
#include "fdnn/spectrum.hpp"
#include "fdnn/train.hpp"

namespace fdnn {

namespace fs = std::filesystem;

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

// Dataset file layout (all integers and floats little-endian):
//   "FDNNDATA" | u32 version | u32 d | u64 dims[d] | u64 n
//   | u64 meta_len | meta text | u64 fnv1a(all preceding bytes)
//   | f64 payload[n][N]   (subject-major, grid order)

inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
  std::vector<std::size_t> dims;
  std::size_t n = 0;
  DatasetMeta meta;
  std::uint64_t payload_offset = 0;

  std::size_t points() const;
};

/// Writes a dataset file one subject row at a time.
class DatasetWriter {
 public:
  /// Throws IoError if the file cannot be created.
  DatasetWriter(const fs::path& path, const std::vector<std::size_t>& dims, std::size_t n,
                const DatasetMeta& meta);
  /// Throws std::invalid_argument on a wrong row length or too many rows.
  void write_row(std::span<const double> row);
  /// Throws IoError unless exactly n rows were written.
  void finish();

 private:
  fs::path path_;
  std::ofstream out_;
  std::size_t points_ = 0;
  std::size_t n_ = 0;
  std::size_t written_ = 0;
  std::vector<char> buffer_;
};

/// Streams subject rows out of a dataset file.
class DatasetReader {
 public:
  /// Throws IoError on a bad magic, version, checksum or payload length.
  explicit DatasetReader(const fs::path& path);

  const DatasetHeader& header() const { return header_; }
  /// Fills `row` with the next subject; false after the last one.
  bool next_row(std::vector<double>& row);

 private:
  fs::path path_;
  std::ifstream in_;
  DatasetHeader header_;
  std::size_t read_ = 0;
  std::vector<char> buffer_;
};

DatasetHeader read_dataset_header(const fs::path& path);
void write_dataset(const fs::path& path, const FunctionalDataset& dataset);
FunctionalDataset read_dataset(const fs::path& path);

/// Reads row.size() little-endian doubles; false on a short read.
bool read_le_doubles(std::istream& in, std::vector<double>& row);

/// Ybar without holding the payload in memory.
Eigen::VectorXd read_pointwise_mean(const fs::path& path, DatasetHeader* header = nullptr);

/// Metadata block as "key=value" lines.
std::string encode_meta(const DatasetMeta& meta);
DatasetMeta decode_meta(const std::string& text);

// Params file layout:
//   "FDNNPARM" | u32 version | u32 flags (bit 0: constrained) | u64 L
//   | u64 widths[L+2] | u64 sparsity | f64 F
//   | f64 W_0..W_L (row-major) | f64 v_1..v_L | u64 fnv1a(all preceding bytes)

inline constexpr std::uint32_t kParamsVersion = 1;

std::vector<std::uint8_t> encode_network(const Network& net);
/// Throws IoError on a malformed buffer.
Network decode_network(std::span<const std::uint8_t> bytes);
void write_network(const fs::path& path, const Network& net);
Network read_network(const fs::path& path);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);

/// Shortest text that reads back to the same double.
std::string format_double(double value);

// CSV schemas.
//   records:  sigma,N,n,rep,seed,risk,seconds   (failed runs have risk "failed")
//   table:    sigma,N,n,reps,mean_risk,sd_risk     (failed runs are excluded)
//   spectrum: kernel,varrho,d,N,lambda1,method,N_d,zero_mode  + "# varrho_hat=..." line
//   train:    epoch,data_loss,l1_loss,phase        + "# ..." summary lines

void write_records_csv(std::ostream& out, const std::vector<RiskRecord>& records);
/// Header-checked parse; malformed lines throw IoError.
std::vector<RiskRecord> read_records_csv(std::istream& in);
void write_table_csv(std::ostream& out, const std::vector<RiskRow>& rows);
void write_spectrum_csv(std::ostream& out, const SpectrumReport& report);
void write_train_report_csv(std::ostream& out, const TrainReport& report, const std::string& header_comment);

/// Binary PGM ("P5 W H 255"). Values are mapped linearly from [lo, hi] to
/// 0..255; a constant image maps to 0.
std::vector<std::uint8_t> to_gray(std::span<const double> values, double lo, double hi);
void write_pgm(const fs::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels);

}  // namespace fdnn
