#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fdnn {

/// Evenly spaced grid on (0,1]^d. Axis k has N_k points at j_k / N_k,
/// j_k = 1..N_k. Points are ordered by the last coordinate first, then the
/// one before it, down to the first coordinate, so the first coordinate
/// varies fastest. This is the ordering under which the additive kernel
/// matrices factor into Kronecker products.
///
/// Linear indices are 0-based in code; multi-indices keep the 1-based j_k.
class GridDesign {
 public:
  /// Throws std::invalid_argument for an empty dims list or a zero count.
  explicit GridDesign(std::vector<std::size_t> dims);

  std::size_t dim() const { return dims_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Coordinates of the point at 0-based linear index. Throws std::out_of_range.
  std::vector<double> point_at(std::size_t index) const;
  /// 1-based multi-index (j_1, ..., j_d) of the point at a linear index.
  std::vector<std::size_t> multi_index(std::size_t index) const;
  /// 0-based linear index of a 1-based multi-index. Throws std::out_of_range.
  std::size_t index_of(std::span<const std::size_t> multi_index) const;

  /// d x N matrix, column j holds point j.
  const Eigen::MatrixXd& coordinates() const { return coords_; }

  /// "20x15x10"
  std::string to_string() const;

  bool operator==(const GridDesign& other) const { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::size_t size_ = 0;
  Eigen::MatrixXd coords_;
};

/// Parses "20x15x10" or "20,15,10". Throws std::invalid_argument.
std::vector<std::size_t> parse_dims(const std::string& text);

}  // namespace fdnn
