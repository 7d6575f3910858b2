#include "fdnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fdnn {
namespace {

template <class Fn>
void for_each_block(NetworkParams& params, Fn&& fn) {
  for (auto& w : params.weights) fn(w.reshaped());
  for (auto& v : params.shifts) fn(v.reshaped());
}

template <class Fn>
void for_each_block(const NetworkParams& params, Fn&& fn) {
  for (const auto& w : params.weights) fn(w.reshaped());
  for (const auto& v : params.shifts) fn(v.reshaped());
}

std::size_t ceil_count(double value) {
  // Guard against pow() landing a hair above an exact integer.
  return static_cast<std::size_t>(std::ceil(value - 1e-9));
}

}  // namespace

std::size_t Architecture::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) total += widths[l] * widths[l + 1];
  for (std::size_t l = 1; l + 1 < widths.size(); ++l) total += widths[l];
  return total;
}

void validate(const Architecture& arch) {
  if (arch.widths.size() < 3) throw std::invalid_argument("architecture needs at least one hidden layer");
  if (arch.widths.back() != 1) throw std::invalid_argument("architecture output width must be 1");
  for (std::size_t w : arch.widths) {
    if (w < 1) throw std::invalid_argument("architecture widths must be >= 1");
  }
  if (arch.sparsity < 1) throw std::invalid_argument("sparsity budget must be >= 1");
  if (!(arch.norm_bound > 0.0)) throw std::invalid_argument("norm bound must be positive");
}

NetworkParams NetworkParams::zeros(const Architecture& arch) {
  validate(arch);
  NetworkParams p;
  const std::size_t L = arch.hidden_layers();
  for (std::size_t l = 0; l <= L; ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arch.widths[l + 1]),
                                              static_cast<Eigen::Index>(arch.widths[l])));
  }
  for (std::size_t l = 1; l <= L; ++l) {
    p.shifts.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.widths[l])));
  }
  return p;
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  if (weights.size() != other.weights.size() || shifts.size() != other.shifts.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
  }
  for (std::size_t l = 0; l < shifts.size(); ++l) {
    if (shifts[l].size() != other.shifts[l].size()) return false;
  }
  return true;
}

bool NetworkParams::matches(const Architecture& arch) const {
  if (arch.widths.size() < 3) return false;
  const std::size_t L = arch.hidden_layers();
  if (weights.size() != L + 1 || shifts.size() != L) return false;
  for (std::size_t l = 0; l <= L; ++l) {
    if (weights[l].rows() != static_cast<Eigen::Index>(arch.widths[l + 1]) ||
        weights[l].cols() != static_cast<Eigen::Index>(arch.widths[l])) {
      return false;
    }
  }
  for (std::size_t l = 1; l <= L; ++l) {
    if (shifts[l - 1].size() != static_cast<Eigen::Index>(arch.widths[l])) return false;
  }
  return true;
}

double NetworkParams::abs_sum() const {
  double total = 0.0;
  for_each_block(*this, [&](const auto& block) { total += block.cwiseAbs().sum(); });
  return total;
}

double NetworkParams::max_abs() const {
  double best = 0.0;
  for_each_block(*this, [&](const auto& block) {
    if (block.size() > 0) best = std::max(best, block.cwiseAbs().maxCoeff());
  });
  return best;
}

double forward(const NetworkParams& params, std::span<const double> x) {
  if (params.weights.empty()) throw std::invalid_argument("network has no layers");
  if (static_cast<Eigen::Index>(x.size()) != params.weights[0].cols()) {
    throw std::invalid_argument("network expects " + std::to_string(params.weights[0].cols()) +
                                " inputs, got " + std::to_string(x.size()));
  }
  Eigen::VectorXd h = params.weights[0] * Eigen::Map<const Eigen::VectorXd>(x.data(), params.weights[0].cols());
  for (std::size_t l = 1; l < params.weights.size(); ++l) {
    h = params.weights[l] * (h - params.shifts[l - 1]).cwiseMax(0.0);
  }
  return h(0);
}

Eigen::VectorXd forward_points(const NetworkParams& params, const Eigen::MatrixXd& points) {
  if (params.weights.empty()) throw std::invalid_argument("network has no layers");
  if (points.rows() != params.weights[0].cols()) {
    throw std::invalid_argument("network expects " + std::to_string(params.weights[0].cols()) +
                                "-dimensional points, got " + std::to_string(points.rows()));
  }
  Eigen::MatrixXd h = params.weights[0] * points;
  for (std::size_t l = 1; l < params.weights.size(); ++l) {
    h = params.weights[l] * (h.colwise() - params.shifts[l - 1]).cwiseMax(0.0);
  }
  return h.row(0).transpose();
}

Eigen::VectorXd forward_batch(const NetworkParams& params, const GridDesign& grid) {
  // Chunked so very fine prediction grids do not materialize width x N blocks.
  constexpr Eigen::Index kChunk = 4096;
  const auto& coords = grid.coordinates();
  Eigen::VectorXd out(coords.cols());
  for (Eigen::Index start = 0; start < coords.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, coords.cols() - start);
    out.segment(start, len) = forward_points(params, coords.middleCols(start, len));
  }
  return out;
}

std::size_t count_nonzero(const NetworkParams& params, double zero_threshold) {
  std::size_t count = 0;
  for_each_block(params, [&](const auto& block) {
    count += static_cast<std::size_t>((block.array().abs() > zero_threshold).count());
  });
  return count;
}

NetworkParams hard_threshold(NetworkParams params, double threshold) {
  for_each_block(params, [&](auto block) {
    block = (block.array().abs() <= threshold).select(0.0, block);
  });
  return params;
}

NetworkParams keep_largest(NetworkParams params, std::size_t keep, NetworkParams* mask) {
  std::vector<double*> entries;
  for_each_block(params, [&](auto block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) entries.push_back(&block(i));
  });
  NetworkParams m = params;
  for_each_block(m, [](auto block) { block.setOnes(); });
  if (keep < entries.size()) {
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(*entries[a]) > std::abs(*entries[b]);
    });
    std::vector<double*> mask_entries;
    for_each_block(m, [&](auto block) {
      for (Eigen::Index i = 0; i < block.size(); ++i) mask_entries.push_back(&block(i));
    });
    for (std::size_t r = keep; r < order.size(); ++r) {
      *entries[order[r]] = 0.0;
      *mask_entries[order[r]] = 0.0;
    }
  }
  if (mask) *mask = std::move(m);
  return params;
}

NetworkParams project_params(NetworkParams params) {
  for_each_block(params, [](auto block) { block = block.cwiseMax(-1.0).cwiseMin(1.0); });
  return params;
}

double empirical_norm(const NetworkParams& params, const GridDesign& grid) {
  const Eigen::VectorXd f = forward_batch(params, grid);
  return std::sqrt(f.squaredNorm() / static_cast<double>(f.size()));
}

ClassCheck is_in_class(const Network& net, const GridDesign& grid, double zero_threshold) {
  ClassCheck check;
  check.shapes = net.params.matches(net.arch) && grid.dim() == net.arch.input_dim();
  if (!check.shapes) return check;
  check.max_abs = net.params.max_abs();
  check.bounded = !net.arch.constrained || check.max_abs <= 1.0;
  check.nonzero = count_nonzero(net.params, zero_threshold);
  check.sparse = check.nonzero <= net.arch.sparsity;
  check.empirical_norm = empirical_norm(net.params, grid);
  check.norm = check.empirical_norm <= net.arch.norm_bound;
  return check;
}

Architecture architecture_from_theory(std::size_t n, std::size_t n_points, double varrho, double theta,
                                      const ArchitectureConstants& constants, std::size_t d,
                                      double norm_bound) {
  if (n < 1 || n_points < 1 || d < 1) throw std::invalid_argument("n, N and d must be >= 1");
  if (!(varrho >= 0.0)) throw std::invalid_argument("varrho must be >= 0");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  if (!(constants.c_depth > 0.0) || !(constants.c_width > 0.0) || !(constants.c_sparsity > 0.0)) {
    throw std::invalid_argument("architecture constants must be > 0");
  }
  const double effective = static_cast<double>(n) * std::pow(static_cast<double>(n_points), varrho);
  const double growth = std::pow(effective, 1.0 / (theta + 1.0));
  const std::size_t L = std::max<std::size_t>(1, ceil_count(constants.c_depth * std::log2(effective)));
  const std::size_t width = std::max<std::size_t>(1, ceil_count(constants.c_width * growth));
  Architecture arch;
  arch.widths.assign(L + 2, width);
  arch.widths.front() = d;
  arch.widths.back() = 1;
  arch.sparsity = std::max<std::size_t>(1, ceil_count(constants.c_sparsity * growth * static_cast<double>(L)));
  arch.norm_bound = norm_bound;
  return arch;
}

Architecture practical_architecture(std::size_t n, std::size_t n_points, double varrho, double theta,
                                    const ArchitectureConstants& constants, std::size_t d,
                                    std::size_t layers, double norm_bound) {
  if (layers < 1) throw std::invalid_argument("need at least one hidden layer");
  Architecture arch = architecture_from_theory(n, n_points, varrho, theta, constants, d, norm_bound);
  const std::size_t width = arch.widths[1];
  const double growth = std::pow(static_cast<double>(n) * std::pow(static_cast<double>(n_points), varrho),
                                 1.0 / (theta + 1.0));
  arch.widths.assign(layers + 2, width);
  arch.widths.front() = d;
  arch.widths.back() = 1;
  arch.sparsity = std::max<std::size_t>(
      1, ceil_count(constants.c_sparsity * growth * static_cast<double>(layers)));
  return arch;
}

InitScheme parse_init_scheme(const std::string& text) {
  if (text == "he-normal") return InitScheme::kHeNormal;
  if (text == "he-uniform") return InitScheme::kHeUniform;
  throw std::invalid_argument("unknown init scheme '" + text + "'");
}

NetworkParams init_params(const Architecture& arch, InitScheme scheme, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(arch);
  for (auto& w : p.weights) {
    const double fan_in = static_cast<double>(w.cols());
    const double sd = std::sqrt(2.0 / fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = scheme == InitScheme::kHeNormal ? sd * rng.normal()
                                                  : std::sqrt(3.0) * sd * (2.0 * rng.uniform() - 1.0);
      }
    }
  }
  if (arch.constrained) p = project_params(std::move(p));
  return p;
}

}  // namespace fdnn
