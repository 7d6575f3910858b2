#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"

namespace fdnn {

/// Additive Bernoulli polynomial kernel: per coordinate
///   G0(x, x') = 2 sum_{k=1}^{k_max} cos(2 pi k (x - x')) / (2 pi k)^(varrho d),
/// summed over the d coordinates.
struct BernoulliPolynomial {
  double varrho = 2.0;
  std::size_t d = 1;
  std::size_t k_max = 1'000'000;
};

/// Covariance of the random-phase cosine process
///   eta(x) = sum_k xi_k cos(2 pi x_k) + xi'_k sin(2 pi x_k),
/// G(x, x') = xi_var * sum_k cos(2 pi (x_k - x'_k)), times 1/d when normalized.
struct CosineProcess {
  double xi_var = 1.0;
  std::size_t d = 1;
  bool normalize_by_d = false;
};

/// Mercer form G(x, x') = sum_k lambda_k psi_k(x) psi_k(x'), truncated to the
/// listed terms. An empty list is the zero kernel.
struct SpectralKernel {
  using Eigenfunction = std::function<double(std::span<const double>)>;
  std::vector<double> eigenvalues;
  std::vector<Eigenfunction> eigenfunctions;
};

/// Covariance given as an explicit N x N table of G(X_j, X_j') on a grid.
struct GridKernel {
  Eigen::MatrixXd values;
};

using KernelSpec = std::variant<BernoulliPolynomial, CosineProcess, SpectralKernel, GridKernel>;

KernelSpec zero_kernel();
bool is_zero_kernel(const KernelSpec& spec);

/// Throws std::invalid_argument when the kernel parameters are inadmissible.
void validate(const KernelSpec& spec);

/// Short text form, e.g. "cosine(xi_var=1,d=2,normalize=0)".
std::string describe(const KernelSpec& spec);

/// G(x, x'). Grid kernels have no pointwise form and throw std::invalid_argument.
double kernel_value(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kDenseLimit = 10'000;

/// C_N = [G(X_j, X_j') / N].
struct KernelMatrix {
  GridDesign grid;
  Eigen::MatrixXd values;
};

/// Throws std::length_error if grid.size() exceeds dense_limit.
KernelMatrix kernel_matrix(const KernelSpec& spec, const GridDesign& grid,
                           std::size_t dense_limit = kDenseLimit);

/// Dense covariance [G(X_j, X_j')] (i.e. N * C_N).
Eigen::MatrixXd covariance_matrix(const KernelSpec& spec, const GridDesign& grid,
                                  std::size_t dense_limit = kDenseLimit);

/// Symmetric circulant matrix with C(l, l') = row[(l' - l) mod n].
Eigen::MatrixXd circulant_matrix(std::span<const double> first_row);

/// All eigenvalues of the circulant matrix generated by first_row, in DFT
/// frequency order (entry j belongs to frequency j).
std::vector<std::complex<double>> circulant_spectrum(std::span<const double> first_row);

/// Real eigenvalues of a symmetric circulant (row[m] == row[n - m]).
/// Imaginary parts below 1e-10 are dropped; larger ones throw std::invalid_argument.
std::vector<double> circulant_eigenvalues(std::span<const double> first_row);

/// First row of the per-axis block A of an additive kernel on n_axis points,
/// defined so that C_N = sum_k n_axis^(1-d) (1 x ... x A x ... x 1) on an
/// n_axis^d grid. Bernoulli: A(l, l') = (2 / n_axis) sum_k cos(2 pi k (l - l') / n_axis) / (2 pi k)^(varrho d).
/// Cosine: A(l, l') = (xi_var [/ d] / n_axis) cos(2 pi (l - l') / n_axis).
std::vector<double> axis_row(const KernelSpec& spec, std::size_t n_axis);

/// Closed-form eigenvalues lambda*_0..lambda*_{n_axis-1} of the Bernoulli
/// block A. With k_max unset the infinite aliasing sums are evaluated
/// exactly through the Hurwitz zeta function; with k_max set, only kernel
/// frequencies k <= k_max contribute (the exact spectrum of the truncated
/// kernel's block).
std::vector<double> bernoulli_eigenvalues(double varrho, std::size_t d, std::size_t n_axis,
                                          std::optional<std::size_t> k_max = std::nullopt);

struct PowerIterationOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 200'000;
  /// Matrices up to this size are also solved densely and compared.
  std::size_t dense_check_limit = 500;
  double cross_check_tolerance = 1e-8;
};

struct MaxEigenvalue {
  double value = 0.0;
  std::size_t iterations = 0;
  std::optional<double> dense_value;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration, seeded
/// with the all-ones vector plus a small deterministic perturbation.
/// Throws NumericalError on non-convergence or a failed dense cross-check.
MaxEigenvalue max_eigenvalue(const Eigen::MatrixXd& matrix, const PowerIterationOptions& options = {});
MaxEigenvalue max_eigenvalue(const KernelMatrix& matrix, const PowerIterationOptions& options = {});

double dense_max_eigenvalue(const Eigen::MatrixXd& symmetric);
double dense_min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// n_axis^(1-d) * (1 x ... x A x ... x 1) with A in Kronecker slot for
/// coordinate `axis` (1-based; coordinate 1 is the last factor).
Eigen::MatrixXd kronecker_axis_component(const Eigen::MatrixXd& axis_matrix, std::size_t d,
                                         std::size_t axis);

/// Largest eigenvalue of n_axis^(1-d) (1 x ... x A x ... x 1) from the factor
/// spectra: the all-ones block contributes n_axis once and zeros otherwise.
double kronecker_max_eigenvalue(const Eigen::MatrixXd& axis_matrix, std::size_t d);

/// Largest eigenvalue of the additive C_N = sum_k C_{N,k} given the per-axis
/// block spectrum in DFT order. All C_{N,k} share the tensor Fourier basis, so
/// the zero frequency collects d * lambda_0 and every other frequency that is
/// nonzero on exactly one axis carries lambda_j.
double additive_max_eigenvalue(std::span<const double> axis_eigenvalues, std::size_t d);

struct DecayFit {
  double rate = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;
};

/// Fits log lambda = a - rate * log N by least squares. Needs >= 3 distinct N
/// and positive lambdas; throws std::invalid_argument otherwise.
DecayFit estimate_decay_rate(std::span<const std::pair<double, double>> lambda_by_n);

enum class SpectrumMethod { kFormula, kPower, kDense };
std::string to_string(SpectrumMethod method);
SpectrumMethod parse_spectrum_method(const std::string& text);

struct SpectrumRow {
  std::size_t n_axis = 0;
  std::size_t n_total = 0;
  double lambda1 = 0.0;
  /// Eigenvalue on the all-ones (zero-frequency) direction, d * lambda*_0.
  double zero_mode = 0.0;
  SpectrumMethod method = SpectrumMethod::kFormula;
};

struct SpectrumReport {
  std::string kernel;
  double varrho = 0.0;
  std::size_t d = 0;
  std::vector<SpectrumRow> rows;
  std::optional<DecayFit> fit;
};

/// lambda_{1,N} on n_axis^d grids for each requested n_axis. Only
/// Bernoulli and cosine kernels have a structured path.
SpectrumReport spectrum_sweep(const KernelSpec& spec, std::span<const std::size_t> axis_counts,
                              SpectrumMethod method = SpectrumMethod::kFormula);

}  // namespace fdnn
