#include "fdnn/grid.hpp"

#include <limits>
#include <stdexcept>

namespace fdnn {

GridDesign::GridDesign(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("grid needs at least one axis");
  size_ = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (dims_[k] == 0) {
      throw std::invalid_argument("grid axis " + std::to_string(k + 1) + " has zero points");
    }
    if (size_ > std::numeric_limits<std::size_t>::max() / dims_[k]) {
      throw std::invalid_argument("grid size overflows");
    }
    size_ *= dims_[k];
  }
  coords_.resize(static_cast<Eigen::Index>(dims_.size()), static_cast<Eigen::Index>(size_));
  std::vector<std::size_t> j(dims_.size(), 1);
  for (std::size_t index = 0; index < size_; ++index) {
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      coords_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(index)) =
          static_cast<double>(j[k]) / static_cast<double>(dims_[k]);
    }
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (++j[k] <= dims_[k]) break;
      j[k] = 1;
    }
  }
}

std::vector<std::size_t> GridDesign::multi_index(std::size_t index) const {
  if (index >= size_) {
    throw std::out_of_range("grid index " + std::to_string(index) + " out of range for N=" +
                            std::to_string(size_));
  }
  std::vector<std::size_t> out(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    out[k] = index % dims_[k] + 1;
    index /= dims_[k];
  }
  return out;
}

std::vector<double> GridDesign::point_at(std::size_t index) const {
  const auto j = multi_index(index);
  std::vector<double> x(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    x[k] = static_cast<double>(j[k]) / static_cast<double>(dims_[k]);
  }
  return x;
}

std::size_t GridDesign::index_of(std::span<const std::size_t> multi_index) const {
  if (multi_index.size() != dims_.size()) {
    throw std::out_of_range("multi-index has " + std::to_string(multi_index.size()) +
                            " entries, grid has " + std::to_string(dims_.size()) + " axes");
  }
  std::size_t index = 0;
  for (std::size_t k = dims_.size(); k-- > 0;) {
    if (multi_index[k] < 1 || multi_index[k] > dims_[k]) {
      throw std::out_of_range("multi-index entry " + std::to_string(k + 1) + " out of range");
    }
    index = index * dims_[k] + (multi_index[k] - 1);
  }
  return index;
}

std::string GridDesign::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (k) out += 'x';
    out += std::to_string(dims_[k]);
  }
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of("x,", pos);
    if (end == std::string::npos) end = text.size();
    const std::string token = text.substr(pos, end - pos);
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad grid dims '" + text + "'");
    }
    try {
      dims.push_back(std::stoull(token));
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("grid count '" + token + "' is too large");
    }
    if (dims.back() == 0) throw std::invalid_argument("grid dims '" + text + "' contain a zero count");
    pos = end + 1;
  }
  return dims;
}

}  // namespace fdnn
