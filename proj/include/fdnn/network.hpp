#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"
#include "fdnn/rng.hpp"

namespace fdnn {

/// Sparse ReLU network class F(L, p, s, F).
struct Architecture {
  /// p_0..p_{L+1}; p_0 is the input dimension and p_{L+1} must be 1.
  std::vector<std::size_t> widths;
  /// Budget on the number of nonzero weights and shifts.
  std::size_t sparsity = std::numeric_limits<std::size_t>::max();
  /// Bound on the empirical norm ||f||_N; also the output clip.
  double norm_bound = std::numeric_limits<double>::infinity();
  /// Parameters are kept in [-1, 1] when set.
  bool constrained = false;

  std::size_t hidden_layers() const { return widths.size() - 2; }
  std::size_t input_dim() const { return widths.front(); }
  std::size_t parameter_count() const;
};

/// Throws std::invalid_argument unless L >= 1, p_0 >= 1, p_{L+1} == 1,
/// every width >= 1, s >= 1 and F > 0.
void validate(const Architecture& arch);

/// Weights W_0..W_L (W_l is p_{l+1} x p_l) and shifts v_1..v_L (v_l has p_l
/// entries). The input shift v_0 is fixed at zero and not stored. Gradients
/// and optimizer moments reuse this layout.
struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> shifts;

  static NetworkParams zeros(const Architecture& arch);
  bool same_shape(const NetworkParams& other) const;
  bool matches(const Architecture& arch) const;
  double abs_sum() const;
  double max_abs() const;
};

struct Network {
  Architecture arch;
  NetworkParams params;
};

/// f(x) = W_L s_{v_L} W_{L-1} ... W_1 s_{v_1} W_0 x, s_v(y) = max(y - v, 0).
/// Throws std::invalid_argument when x does not have p_0 entries.
double forward(const NetworkParams& params, std::span<const double> x);

/// Forward pass for the columns of a p_0 x B matrix.
Eigen::VectorXd forward_points(const NetworkParams& params, const Eigen::MatrixXd& points);

/// f at every grid point, in grid order.
Eigen::VectorXd forward_batch(const NetworkParams& params, const GridDesign& grid);

/// Entries with |value| > zero_threshold across all W_l and v_l.
std::size_t count_nonzero(const NetworkParams& params, double zero_threshold = 0.0);

/// Sets entries with |value| <= threshold to exactly zero, so that
/// count_nonzero(hard_threshold(p, t), 0) == count_nonzero(p, t).
NetworkParams hard_threshold(NetworkParams params, double threshold);

/// Keeps the `keep` largest-magnitude entries (ties broken by storage order)
/// and zeros the rest. Returns the 0/1 mask alongside.
NetworkParams keep_largest(NetworkParams params, std::size_t keep, NetworkParams* mask = nullptr);

/// Clamps every entry to [-1, 1].
NetworkParams project_params(NetworkParams params);

/// ((1/N) sum_j f(X_j)^2)^(1/2).
double empirical_norm(const NetworkParams& params, const GridDesign& grid);

/// Each conjunct of F(L, p, s, F) membership, reported separately.
struct ClassCheck {
  bool shapes = false;
  bool bounded = false;  ///< all entries in [-1, 1] (always true when unconstrained)
  bool sparse = false;
  bool norm = false;
  std::size_t nonzero = 0;
  double empirical_norm = 0.0;
  double max_abs = 0.0;

  bool passed() const { return shapes && bounded && sparse && norm; }
};

ClassCheck is_in_class(const Network& net, const GridDesign& grid, double zero_threshold = 0.0);

/// Growth constants (c_L, c_p, c_s) for the architecture selector.
struct ArchitectureConstants {
  double c_depth = 1.0;
  double c_width = 1.0;
  double c_sparsity = 1.0;
};

/// With M = n N^varrho:
///   L = max(1, ceil(c_L log2 M)), p_l = ceil(c_p M^(1/(theta+1))),
///   s = ceil(c_s M^(1/(theta+1)) L).
/// Throws std::invalid_argument on nonpositive inputs.
Architecture architecture_from_theory(std::size_t n, std::size_t n_points, double varrho, double theta,
                                      const ArchitectureConstants& constants, std::size_t d,
                                      double norm_bound = std::numeric_limits<double>::infinity());

/// Fixed-depth variant: `layers` hidden layers of the selector's width.
Architecture practical_architecture(std::size_t n, std::size_t n_points, double varrho, double theta,
                                    const ArchitectureConstants& constants, std::size_t d,
                                    std::size_t layers = 3,
                                    double norm_bound = std::numeric_limits<double>::infinity());

enum class InitScheme { kHeNormal, kHeUniform };
InitScheme parse_init_scheme(const std::string& text);

/// Zero-mean weights with variance 2 / fan_in, clamped to [-1, 1] for
/// constrained architectures; shifts start at zero.
NetworkParams init_params(const Architecture& arch, InitScheme scheme, Rng& rng);

}  // namespace fdnn
