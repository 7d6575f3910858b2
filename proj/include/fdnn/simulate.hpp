#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"
#include "fdnn/rng.hpp"
#include "fdnn/spectrum.hpp"

namespace fdnn {

/// -8 / (1 + exp(cot(x1^2) cos(2 pi x2))) on (0,1]^2. The exponent saturates
/// at +-700, returning the limits 0 and -8.
struct Case1Mean {};
/// log(sin(2 pi x1) + 2 |tan(2 pi x2)| + 2), natural logarithm.
struct Case2Mean {};
/// exp(x1/3 + x2/3 + sqrt(x3 + 0.1)).
struct Case3DMean {};
/// f(x) = x1 on any dimension.
struct IdentityMean {
  std::size_t d = 1;
};
struct ConstantMean {
  double value = 0.0;
  std::size_t d = 1;
};
/// f(x) = sum_k f_k(x_k).
struct AdditiveMean {
  std::vector<std::function<double(double)>> components;
};

/// Parameters of the composition class G(q, d, t, beta, K).
struct CompositionSpec {
  std::size_t q = 0;
  std::vector<std::size_t> d_vec;  ///< d_0..d_{q+1}
  std::vector<std::size_t> t_vec;  ///< t_0..t_q
  std::vector<double> beta_vec;    ///< beta_0..beta_q
  std::vector<double> k_vec;       ///< K_0..K_q
};

/// Throws std::invalid_argument on inconsistent lengths or t_i > d_i,
/// beta_i <= 0, K_i <= 0.
void validate(const CompositionSpec& spec);

/// beta*_i = beta_i prod_{k>i} min(beta_k, 1).
std::vector<double> effective_betas(const CompositionSpec& spec);

/// theta = min_i 2 beta*_i / t_i.
double effective_smoothness(const CompositionSpec& spec);

/// f0 = g_q o ... o g_0 with g_i mapping R^{d_i} to R^{d_{i+1}}.
struct CompositionMean {
  using Layer = std::function<std::vector<double>(std::span<const double>)>;
  CompositionSpec spec;
  std::vector<Layer> layers;
};

using MeanFunction = std::variant<Case1Mean, Case2Mean, Case3DMean, IdentityMean, ConstantMean,
                                  AdditiveMean, CompositionMean>;

/// Input dimension f0 expects.
std::size_t mean_dimension(const MeanFunction& f0);

/// Stable identifier: "case1-2d", "case2-2d", "case3d", "identity", "constant",
/// "additive", "composition".
std::string mean_id(const MeanFunction& f0);

/// Builds a named mean: "case1-2d", "case2-2d", "case3d", "identity:<d>",
/// "constant:<value>:<d>", "zero:<d>". Throws std::invalid_argument.
MeanFunction mean_from_id(const std::string& id);

/// Throws std::invalid_argument on a dimension mismatch.
double eval_mean(const MeanFunction& f0, std::span<const double> x);

/// f0 at every grid point, in grid order.
Eigen::VectorXd eval_mean_grid(const MeanFunction& f0, const GridDesign& grid);

/// Measurement error standard deviation tau(X_j).
struct NoNoise {};
struct ConstantNoise {
  double sigma = 1.0;
};
struct GridNoise {
  std::vector<double> tau;
};
using NoiseSpec = std::variant<NoNoise, ConstantNoise, GridNoise>;

void validate(const NoiseSpec& noise, const GridDesign& grid);
std::string describe(const NoiseSpec& noise);
/// sigma for constant noise, 0 when disabled, NaN for per-point noise.
double noise_sigma(const NoiseSpec& noise);

/// Draws mean-zero Gaussian process paths with covariance G on a fixed grid.
/// Cosine kernels use the exact random-phase representation (2d normals per
/// draw); spectral kernels use their Mercer terms; everything else factors
/// the dense covariance once (Karhunen-Loeve).
class EtaSampler {
 public:
  /// Throws std::invalid_argument for a non-PSD table (negative eigenvalue
  /// beyond 1e-8 of the largest) and std::length_error above the dense limit.
  EtaSampler(const KernelSpec& kernel, const GridDesign& grid, std::size_t dense_limit = kDenseLimit);

  Eigen::VectorXd draw(Rng& rng) const;

 private:
  enum class Path { kZero, kCosine, kFactor };
  Path path_ = Path::kZero;
  std::size_t n_ = 0;
  double cosine_sd_ = 0.0;
  Eigen::MatrixXd cos_;  ///< N x d
  Eigen::MatrixXd sin_;  ///< N x d
  Eigen::MatrixXd factor_;  ///< N x r, eta = factor * z
};

Eigen::VectorXd sample_eta(const KernelSpec& kernel, const GridDesign& grid, Rng& rng);

struct DatasetMeta {
  std::string mean_id;
  std::string kernel;
  std::string noise;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n noisy realizations over the grid; row i is subject i in grid order.
struct FunctionalDataset {
  GridDesign grid;
  RowMatrix y;
  DatasetMeta meta;

  std::size_t subjects() const { return static_cast<std::size_t>(y.rows()); }
};

/// Y_ij = f0(X_j) + eta_i(X_j) + tau(X_j) e_ij. Subject i draws eta from
/// substream (seed, i, eta) and noise from (seed, i, noise), so results do
/// not depend on `jobs` and a smaller n is a prefix of a larger one.
FunctionalDataset simulate_dataset(std::size_t n, const GridDesign& grid, const MeanFunction& f0,
                                   const KernelSpec& kernel, const NoiseSpec& noise,
                                   std::uint64_t seed, std::size_t jobs = 1);

/// Column means Ybar_.j. Throws std::invalid_argument on an empty dataset.
Eigen::VectorXd pointwise_mean(const FunctionalDataset& dataset);

}  // namespace fdnn
