#include "fdnn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>
#include <unsupported/Eigen/FFT>

#include "fdnn/error.hpp"

namespace fdnn {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(std::span<const double> x, std::span<const double> y, std::size_t d) {
  if (x.size() != d || y.size() != d) {
    throw std::invalid_argument("kernel expects " + std::to_string(d) + "-dimensional points");
  }
}

/// Per-frequency weights t_k = (2 pi k)^(-p), k = 1..k_max.
std::vector<double> bernoulli_weights(double exponent, std::size_t k_max) {
  std::vector<double> t(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    t[k - 1] = std::pow(kTwoPi * static_cast<double>(k), -exponent);
  }
  return t;
}

/// G0(m / n) for m = 0..n-1 of the truncated Bernoulli series. Frequencies are
/// folded by residue so the cost is k_max + n^2 rather than k_max * n.
std::vector<double> bernoulli_table(double exponent, std::size_t k_max, std::size_t n) {
  const auto t = bernoulli_weights(exponent, k_max);
  std::vector<double> residue(n, 0.0);
  for (std::size_t k = k_max; k >= 1; --k) residue[k % n] += t[k - 1];
  std::vector<double> table(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    double sum = 0.0;
    for (std::size_t r = n; r-- > 0;) {
      const std::size_t phase = (r * m) % n;
      sum += residue[r] * std::cos(kTwoPi * static_cast<double>(phase) / static_cast<double>(n));
    }
    table[m] = 2.0 * sum;
  }
  return table;
}

double cosine_scale(const CosineProcess& c) {
  return c.normalize_by_d ? c.xi_var / static_cast<double>(c.d) : c.xi_var;
}

}  // namespace

KernelSpec zero_kernel() { return SpectralKernel{}; }

bool is_zero_kernel(const KernelSpec& spec) {
  return std::visit(Overloaded{
                        [](const BernoulliPolynomial&) { return false; },
                        [](const CosineProcess& c) { return c.xi_var == 0.0; },
                        [](const SpectralKernel& s) {
                          return std::all_of(s.eigenvalues.begin(), s.eigenvalues.end(),
                                             [](double v) { return v == 0.0; });
                        },
                        [](const GridKernel& g) { return g.values.isZero(0.0); },
                    },
                    spec);
}

void validate(const KernelSpec& spec) {
  std::visit(Overloaded{
                 [](const BernoulliPolynomial& b) {
                   if (b.d < 1) throw std::invalid_argument("bernoulli kernel needs d >= 1");
                   if (b.k_max < 1) throw std::invalid_argument("bernoulli kernel needs k_max >= 1");
                   if (!(b.varrho * static_cast<double>(b.d) > 1.0)) {
                     throw std::invalid_argument("bernoulli kernel needs varrho * d > 1");
                   }
                 },
                 [](const CosineProcess& c) {
                   if (c.d < 1) throw std::invalid_argument("cosine kernel needs d >= 1");
                   if (!(c.xi_var >= 0.0) || !std::isfinite(c.xi_var)) {
                     throw std::invalid_argument("cosine kernel needs a finite xi_var >= 0");
                   }
                 },
                 [](const SpectralKernel& s) {
                   if (s.eigenvalues.size() != s.eigenfunctions.size()) {
                     throw std::invalid_argument("spectral kernel: eigenvalue/eigenfunction count mismatch");
                   }
                   for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
                     if (!(s.eigenvalues[k] >= 0.0)) {
                       throw std::invalid_argument("spectral kernel: negative eigenvalue");
                     }
                     if (k > 0 && s.eigenvalues[k] > s.eigenvalues[k - 1]) {
                       throw std::invalid_argument("spectral kernel: eigenvalues must be nonincreasing");
                     }
                   }
                 },
                 [](const GridKernel& g) {
                   if (g.values.rows() != g.values.cols()) {
                     throw std::invalid_argument("grid kernel table must be square");
                   }
                   if (!g.values.allFinite()) throw std::invalid_argument("grid kernel has non-finite entries");
                   if (!g.values.isApprox(g.values.transpose(), 1e-12) && !g.values.isZero(0.0)) {
                     throw std::invalid_argument("grid kernel table must be symmetric");
                   }
                 },
             },
             spec);
}

std::string describe(const KernelSpec& spec) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const BernoulliPolynomial& b) {
                   out << "bernoulli(varrho=" << b.varrho << ",d=" << b.d << ",k_max=" << b.k_max << ")";
                 },
                 [&](const CosineProcess& c) {
                   out << "cosine(xi_var=" << c.xi_var << ",d=" << c.d
                       << ",normalize=" << (c.normalize_by_d ? 1 : 0) << ")";
                 },
                 [&](const SpectralKernel& s) {
                   if (s.eigenvalues.empty()) {
                     out << "zero";
                   } else {
                     out << "spectral(terms=" << s.eigenvalues.size() << ")";
                   }
                 },
                 [&](const GridKernel& g) { out << "grid(N=" << g.values.rows() << ")"; },
             },
             spec);
  return out.str();
}

double kernel_value(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const BernoulliPolynomial& b) {
            require_dim(x, y, b.d);
            const double exponent = b.varrho * static_cast<double>(b.d);
            double total = 0.0;
            for (std::size_t k = 0; k < b.d; ++k) {
              const double delta = x[k] - y[k];
              double sum = 0.0;
              for (std::size_t f = b.k_max; f >= 1; --f) {
                const double w = kTwoPi * static_cast<double>(f);
                sum += std::cos(w * delta) * std::pow(w, -exponent);
              }
              total += 2.0 * sum;
            }
            return total;
          },
          [&](const CosineProcess& c) {
            require_dim(x, y, c.d);
            double sum = 0.0;
            for (std::size_t k = 0; k < c.d; ++k) sum += std::cos(kTwoPi * (x[k] - y[k]));
            return cosine_scale(c) * sum;
          },
          [&](const SpectralKernel& s) {
            double sum = 0.0;
            for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
              sum += s.eigenvalues[k] * s.eigenfunctions[k](x) * s.eigenfunctions[k](y);
            }
            return sum;
          },
          [](const GridKernel&) -> double {
            throw std::invalid_argument("grid kernel has no pointwise form; use kernel_matrix");
          },
      },
      spec);
}

Eigen::MatrixXd covariance_matrix(const KernelSpec& spec, const GridDesign& grid,
                                  std::size_t dense_limit) {
  validate(spec);
  const std::size_t n = grid.size();
  if (n > dense_limit) {
    throw std::length_error("grid has " + std::to_string(n) + " points, dense limit is " +
                            std::to_string(dense_limit) +
                            "; use the structured circulant/Kronecker paths instead");
  }
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N, N);

  // Additive kernels only depend on per-axis index differences, so build one
  // lookup table per axis and sum.
  auto additive = [&](std::size_t d_kernel, auto&& axis_table) {
    if (grid.dim() != d_kernel) {
      throw std::invalid_argument("kernel dimension " + std::to_string(d_kernel) +
                                  " does not match grid dimension " + std::to_string(grid.dim()));
    }
    for (std::size_t k = 0; k < grid.dim(); ++k) {
      const std::size_t nk = grid.dims()[k];
      std::vector<double> table = axis_table(nk);
      // Even kernel: make G(a, b) and G(b, a) read the same entry so the
      // matrix is exactly symmetric.
      for (std::size_t m = nk / 2 + 1; m < nk; ++m) table[m] = table[nk - m];
      std::size_t stride = 1;
      for (std::size_t m = 0; m < k; ++m) stride *= grid.dims()[m];
      for (Eigen::Index a = 0; a < N; ++a) {
        const std::size_t ja = (static_cast<std::size_t>(a) / stride) % nk;
        for (Eigen::Index b = 0; b < N; ++b) {
          const std::size_t jb = (static_cast<std::size_t>(b) / stride) % nk;
          g(a, b) += table[(ja + nk - jb) % nk];
        }
      }
    }
  };

  std::visit(Overloaded{
                 [&](const BernoulliPolynomial& b) {
                   const double exponent = b.varrho * static_cast<double>(b.d);
                   additive(b.d, [&](std::size_t nk) { return bernoulli_table(exponent, b.k_max, nk); });
                 },
                 [&](const CosineProcess& c) {
                   const double scale = cosine_scale(c);
                   additive(c.d, [&](std::size_t nk) {
                     std::vector<double> table(nk);
                     for (std::size_t m = 0; m < nk; ++m) {
                       table[m] = scale * std::cos(kTwoPi * static_cast<double>(m) / static_cast<double>(nk));
                     }
                     return table;
                   });
                 },
                 [&](const SpectralKernel& s) {
                   if (s.eigenvalues.empty()) return;
                   Eigen::MatrixXd phi(N, static_cast<Eigen::Index>(s.eigenvalues.size()));
                   for (Eigen::Index j = 0; j < N; ++j) {
                     const auto x = grid.point_at(static_cast<std::size_t>(j));
                     for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
                       phi(j, static_cast<Eigen::Index>(k)) = s.eigenfunctions[k](x);
                     }
                   }
                   const Eigen::VectorXd lambda =
                       Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), phi.cols());
                   g = phi * lambda.asDiagonal() * phi.transpose();
                   g = (0.5 * (g + g.transpose())).eval();
                 },
                 [&](const GridKernel& t) {
                   if (t.values.rows() != N) {
                     throw std::invalid_argument("grid kernel table is " + std::to_string(t.values.rows()) +
                                                 "x" + std::to_string(t.values.rows()) + ", grid has N=" +
                                                 std::to_string(n));
                   }
                   g = t.values;
                 },
             },
             spec);
  return g;
}

KernelMatrix kernel_matrix(const KernelSpec& spec, const GridDesign& grid, std::size_t dense_limit) {
  Eigen::MatrixXd g = covariance_matrix(spec, grid, dense_limit);
  g /= static_cast<double>(grid.size());
  return KernelMatrix{grid, std::move(g)};
}

Eigen::MatrixXd circulant_matrix(std::span<const double> first_row) {
  const auto n = static_cast<Eigen::Index>(first_row.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index m = 0; m < n; ++m) c(l, m) = first_row[static_cast<std::size_t>((m - l + n) % n)];
  }
  return c;
}

std::vector<std::complex<double>> circulant_spectrum(std::span<const double> first_row) {
  if (first_row.empty()) throw std::invalid_argument("circulant row is empty");
  // lambda_j = sum_m c_m w^(j m) with w = exp(2 pi i / n), i.e. n times the
  // inverse DFT of the row. Eigen's inverse FFT already divides by n.
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(first_row.begin(), first_row.end());
  std::vector<std::complex<double>> out;
  fft.inv(out, in);
  const double n = static_cast<double>(first_row.size());
  for (auto& v : out) v *= n;
  return out;
}

std::vector<double> circulant_eigenvalues(std::span<const double> first_row) {
  const auto spectrum = circulant_spectrum(first_row);
  std::vector<double> real(spectrum.size());
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    if (std::abs(spectrum[j].imag()) >= 1e-10) {
      throw std::invalid_argument("circulant row is not symmetric; eigenvalues are complex");
    }
    real[j] = spectrum[j].real();
  }
  return real;
}

std::vector<double> axis_row(const KernelSpec& spec, std::size_t n_axis) {
  if (n_axis == 0) throw std::invalid_argument("axis needs at least one point");
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const BernoulliPolynomial& b) {
            auto row = bernoulli_table(b.varrho * static_cast<double>(b.d), b.k_max, n_axis);
            for (auto& v : row) v /= static_cast<double>(n_axis);
            return row;
          },
          [&](const CosineProcess& c) {
            std::vector<double> row(n_axis);
            const double scale = cosine_scale(c) / static_cast<double>(n_axis);
            for (std::size_t m = 0; m < n_axis; ++m) {
              row[m] = scale * std::cos(kTwoPi * static_cast<double>(m) / static_cast<double>(n_axis));
            }
            return row;
          },
          [](const auto&) -> std::vector<double> {
            throw std::invalid_argument("only bernoulli and cosine kernels have an axis block");
          },
      },
      spec);
}

std::vector<double> bernoulli_eigenvalues(double varrho, std::size_t d, std::size_t n_axis,
                                          std::optional<std::size_t> k_max) {
  const double p = varrho * static_cast<double>(d);
  if (d < 1 || !(p > 1.0)) throw std::invalid_argument("bernoulli eigenvalues need varrho * d > 1");
  if (n_axis == 0) throw std::invalid_argument("bernoulli eigenvalues need n_axis >= 1");
  std::vector<double> lambda(n_axis, 0.0);
  if (k_max) {
    if (*k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    const auto t = bernoulli_weights(p, *k_max);
    for (std::size_t k = *k_max; k >= 1; --k) {
      const std::size_t r = k % n_axis;
      lambda[r] += t[k - 1];
      lambda[(n_axis - r) % n_axis] += t[k - 1];
    }
    return lambda;
  }
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  const double nd = static_cast<double>(n_axis);
  const double base = std::pow(kTwoPi * nd, -p);
  auto hzeta = [&](double q) {
    gsl_sf_result result;
    const int status = gsl_sf_hzeta_e(p, q, &result);
    if (status != GSL_SUCCESS) {
      throw NumericalError(std::string("Hurwitz zeta failed: ") + gsl_strerror(status));
    }
    return result.val;
  };
  try {
    lambda[0] = 2.0 * base * hzeta(1.0);
    for (std::size_t j = 1; j < n_axis; ++j) {
      const double q = static_cast<double>(j) / nd;
      lambda[j] = base * (hzeta(1.0 - q) + hzeta(q));
    }
  } catch (...) {
    gsl_set_error_handler(previous);
    throw;
  }
  gsl_set_error_handler(previous);
  return lambda;
}

double dense_max_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  return solver.eigenvalues().maxCoeff();
}

double dense_min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

MaxEigenvalue max_eigenvalue(const Eigen::MatrixXd& matrix, const PowerIterationOptions& options) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("matrix must be square");
  const Eigen::Index n = matrix.rows();
  MaxEigenvalue result;
  if (n == 0) return result;

  Eigen::VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Weyl sequence perturbation: deterministic and not aligned with any
    // Fourier mode.
    const double frac = std::fmod(static_cast<double>(j + 1) * 0.6180339887498949, 1.0);
    x(j) = 1.0 + 0.1 * (frac - 0.5);
  }
  x.normalize();

  double lambda = 0.0;
  bool converged = false;
  Eigen::VectorXd y(n);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    y.noalias() = matrix * x;
    const double next = x.dot(y);
    const double norm = y.norm();
    result.iterations = it;
    if (norm == 0.0) {
      lambda = 0.0;
      converged = true;
      break;
    }
    const double residual = (y - next * x).norm();
    const bool stable = std::abs(next - lambda) <= options.tolerance * std::abs(next);
    lambda = next;
    if (stable && residual <= std::sqrt(options.tolerance) * std::abs(next)) {
      converged = true;
      break;
    }
    x = y / norm;
  }
  if (!converged) {
    throw NumericalError("power iteration did not converge after " +
                         std::to_string(options.max_iterations) + " iterations (last estimate " +
                         std::to_string(lambda) + ")");
  }
  result.value = lambda;

  if (static_cast<std::size_t>(n) <= options.dense_check_limit) {
    const double dense = dense_max_eigenvalue(matrix);
    result.dense_value = dense;
    const double scale = std::max(std::abs(dense), std::numeric_limits<double>::min());
    if (std::abs(dense - lambda) > options.cross_check_tolerance * scale &&
        std::abs(dense - lambda) > 1e-14) {
      throw NumericalError("power iteration (" + std::to_string(lambda) +
                           ") disagrees with dense eigensolver (" + std::to_string(dense) + ")");
    }
  }
  return result;
}

MaxEigenvalue max_eigenvalue(const KernelMatrix& matrix, const PowerIterationOptions& options) {
  return max_eigenvalue(matrix.values, options);
}

Eigen::MatrixXd kronecker_axis_component(const Eigen::MatrixXd& axis_matrix, std::size_t d,
                                         std::size_t axis) {
  if (axis_matrix.rows() != axis_matrix.cols()) throw std::invalid_argument("axis matrix must be square");
  if (d < 1 || axis < 1 || axis > d) throw std::invalid_argument("axis must lie in 1..d");
  const Eigen::Index nd = axis_matrix.rows();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(nd, nd);
  // Kronecker factors run from coordinate d (first) to coordinate 1 (last).
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (std::size_t slot = d; slot >= 1; --slot) {
    const Eigen::MatrixXd& factor = slot == axis ? axis_matrix : ones;
    Eigen::MatrixXd next(out.rows() * nd, out.cols() * nd);
    for (Eigen::Index a = 0; a < out.rows(); ++a) {
      for (Eigen::Index b = 0; b < out.cols(); ++b) {
        next.block(a * nd, b * nd, nd, nd) = out(a, b) * factor;
      }
    }
    out = std::move(next);
  }
  return std::pow(static_cast<double>(nd), 1.0 - static_cast<double>(d)) * out;
}

double kronecker_max_eigenvalue(const Eigen::MatrixXd& axis_matrix, std::size_t d) {
  if (axis_matrix.rows() != axis_matrix.cols() || axis_matrix.rows() == 0) {
    throw std::invalid_argument("axis matrix must be square and nonempty");
  }
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  const double nd = static_cast<double>(axis_matrix.rows());
  const double weight = std::pow(nd, 1.0 - static_cast<double>(d));
  const double ones_top = std::pow(nd, static_cast<double>(d) - 1.0);
  double best = weight * ones_top * dense_max_eigenvalue(axis_matrix);
  // Any factor pairing with a zero eigenvalue of the all-ones block.
  if (d > 1 && axis_matrix.rows() > 1) best = std::max(best, 0.0);
  return best;
}

double additive_max_eigenvalue(std::span<const double> axis_eigenvalues, std::size_t d) {
  if (axis_eigenvalues.empty()) throw std::invalid_argument("empty axis spectrum");
  double best = static_cast<double>(d) * axis_eigenvalues[0];
  for (std::size_t j = 1; j < axis_eigenvalues.size(); ++j) best = std::max(best, axis_eigenvalues[j]);
  return best;
}

DecayFit estimate_decay_rate(std::span<const std::pair<double, double>> lambda_by_n) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [n, lambda] : lambda_by_n) {
    if (!(n > 0.0)) throw std::invalid_argument("decay fit needs positive N");
    if (!(lambda > 0.0)) throw std::invalid_argument("decay fit needs positive eigenvalues");
    xs.push_back(std::log(n));
    ys.push_back(std::log(lambda));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw std::invalid_argument("decay fit needs at least 3 distinct N values");

  const double m = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    ssr += r * r;
  }
  DecayFit fit;
  fit.rate = -slope;
  fit.std_error = xs.size() > 2 ? std::sqrt(ssr / (m - 2.0) / sxx) : 0.0;
  fit.points = xs.size();
  return fit;
}

std::string to_string(SpectrumMethod method) {
  switch (method) {
    case SpectrumMethod::kFormula: return "formula";
    case SpectrumMethod::kPower: return "power-iteration";
    case SpectrumMethod::kDense: return "dense";
  }
  return "?";
}

SpectrumMethod parse_spectrum_method(const std::string& text) {
  if (text == "formula") return SpectrumMethod::kFormula;
  if (text == "power" || text == "power-iteration") return SpectrumMethod::kPower;
  if (text == "dense") return SpectrumMethod::kDense;
  throw std::invalid_argument("unknown spectrum method '" + text + "'");
}

SpectrumReport spectrum_sweep(const KernelSpec& spec, std::span<const std::size_t> axis_counts,
                              SpectrumMethod method) {
  validate(spec);
  SpectrumReport report;
  std::visit(Overloaded{
                 [&](const BernoulliPolynomial& b) {
                   report.kernel = "bernoulli";
                   report.varrho = b.varrho;
                   report.d = b.d;
                 },
                 [&](const CosineProcess& c) {
                   report.kernel = "cosine";
                   report.d = c.d;
                 },
                 [](const auto&) {
                   throw std::invalid_argument("spectrum sweeps support bernoulli and cosine kernels");
                 },
             },
             spec);

  for (std::size_t nd : axis_counts) {
    SpectrumRow row;
    row.n_axis = nd;
    row.method = method;
    row.n_total = 1;
    for (std::size_t k = 0; k < report.d; ++k) row.n_total *= nd;

    std::vector<double> axis_eigs;
    if (const auto* b = std::get_if<BernoulliPolynomial>(&spec)) {
      axis_eigs = bernoulli_eigenvalues(b->varrho, b->d, nd, b->k_max);
    } else {
      axis_eigs = circulant_eigenvalues(axis_row(spec, nd));
    }
    row.zero_mode = static_cast<double>(report.d) * axis_eigs[0];

    switch (method) {
      case SpectrumMethod::kFormula:
        row.lambda1 = additive_max_eigenvalue(axis_eigs, report.d);
        break;
      case SpectrumMethod::kDense: {
        const GridDesign grid(std::vector<std::size_t>(report.d, nd));
        row.lambda1 = dense_max_eigenvalue(kernel_matrix(spec, grid).values);
        break;
      }
      case SpectrumMethod::kPower: {
        const GridDesign grid(std::vector<std::size_t>(report.d, nd));
        PowerIterationOptions options;
        options.dense_check_limit = 0;
        row.lambda1 = max_eigenvalue(kernel_matrix(spec, grid), options).value;
        break;
      }
    }
    report.rows.push_back(row);
  }

  std::vector<std::pair<double, double>> points;
  for (const auto& row : report.rows) {
    if (row.lambda1 > 0.0) points.emplace_back(static_cast<double>(row.n_total), row.lambda1);
  }
  try {
    report.fit = estimate_decay_rate(points);
  } catch (const std::invalid_argument&) {
    report.fit.reset();
  }
  return report;
}

}  // namespace fdnn
