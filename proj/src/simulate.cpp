#include "fdnn/simulate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fdnn/parallel.hpp"

namespace fdnn {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void validate(const CompositionSpec& spec) {
  const std::size_t layers = spec.q + 1;
  if (spec.d_vec.size() != layers + 1 || spec.t_vec.size() != layers || spec.beta_vec.size() != layers ||
      spec.k_vec.size() != layers) {
    throw std::invalid_argument("composition spec: expected d of length q+2 and t, beta, K of length q+1");
  }
  for (std::size_t i = 0; i < layers; ++i) {
    if (spec.t_vec[i] < 1 || spec.t_vec[i] > spec.d_vec[i]) {
      throw std::invalid_argument("composition spec: need 1 <= t_i <= d_i");
    }
    if (!(spec.beta_vec[i] > 0.0)) throw std::invalid_argument("composition spec: need beta_i > 0");
    if (!(spec.k_vec[i] > 0.0)) throw std::invalid_argument("composition spec: need K_i > 0");
  }
}

std::vector<double> effective_betas(const CompositionSpec& spec) {
  validate(spec);
  std::vector<double> out(spec.q + 1);
  for (std::size_t i = 0; i <= spec.q; ++i) {
    double b = spec.beta_vec[i];
    for (std::size_t k = i + 1; k <= spec.q; ++k) b *= std::min(spec.beta_vec[k], 1.0);
    out[i] = b;
  }
  return out;
}

double effective_smoothness(const CompositionSpec& spec) {
  const auto betas = effective_betas(spec);
  double theta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < betas.size(); ++i) {
    theta = std::min(theta, 2.0 * betas[i] / static_cast<double>(spec.t_vec[i]));
  }
  return theta;
}

std::size_t mean_dimension(const MeanFunction& f0) {
  return std::visit(Overloaded{
                        [](const Case1Mean&) -> std::size_t { return 2; },
                        [](const Case2Mean&) -> std::size_t { return 2; },
                        [](const Case3DMean&) -> std::size_t { return 3; },
                        [](const IdentityMean& m) { return m.d; },
                        [](const ConstantMean& m) { return m.d; },
                        [](const AdditiveMean& m) { return m.components.size(); },
                        [](const CompositionMean& m) { return m.spec.d_vec.empty() ? 0 : m.spec.d_vec[0]; },
                    },
                    f0);
}

std::string mean_id(const MeanFunction& f0) {
  return std::visit(Overloaded{
                        [](const Case1Mean&) -> std::string { return "case1-2d"; },
                        [](const Case2Mean&) -> std::string { return "case2-2d"; },
                        [](const Case3DMean&) -> std::string { return "case3d"; },
                        [](const IdentityMean& m) { return "identity:" + std::to_string(m.d); },
                        [](const ConstantMean& m) {
                          std::ostringstream out;
                          out.precision(17);
                          out << "constant:" << m.value << ':' << m.d;
                          return out.str();
                        },
                        [](const AdditiveMean&) -> std::string { return "additive"; },
                        [](const CompositionMean&) -> std::string { return "composition"; },
                    },
                    f0);
}

MeanFunction mean_from_id(const std::string& id) {
  if (id == "case1-2d") return Case1Mean{};
  if (id == "case2-2d") return Case2Mean{};
  if (id == "case3d") return Case3DMean{};
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t end = id.find(':', pos);
    parts.push_back(id.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  auto parse_dim = [&](const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos || std::stoul(text) == 0) {
      throw std::invalid_argument("bad dimension in mean id '" + id + "'");
    }
    return static_cast<std::size_t>(std::stoul(text));
  };
  try {
    if (parts[0] == "identity" && parts.size() <= 2) {
      return IdentityMean{parts.size() == 2 ? parse_dim(parts[1]) : 1};
    }
    if (parts[0] == "zero" && parts.size() <= 2) {
      return ConstantMean{0.0, parts.size() == 2 ? parse_dim(parts[1]) : 1};
    }
    if (parts[0] == "constant" && (parts.size() == 2 || parts.size() == 3)) {
      std::size_t used = 0;
      const double value = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("bad constant");
      return ConstantMean{value, parts.size() == 3 ? parse_dim(parts[2]) : 1};
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad mean id '" + id + "'");
  }
  throw std::invalid_argument("unknown mean function '" + id + "'");
}

double eval_mean(const MeanFunction& f0, std::span<const double> x) {
  const std::size_t d = mean_dimension(f0);
  if (x.size() != d) {
    throw std::invalid_argument("mean function " + mean_id(f0) + " expects " + std::to_string(d) +
                                "-dimensional points, got " + std::to_string(x.size()));
  }
  return std::visit(
      Overloaded{
          [&](const Case1Mean&) {
            const double x1sq = x[0] * x[0];
            const double exponent = std::cos(x1sq) / std::sin(x1sq) * std::cos(kTwoPi * x[1]);
            if (exponent > 700.0) return 0.0;
            if (exponent < -700.0) return -8.0;
            return -8.0 / (1.0 + std::exp(exponent));
          },
          [&](const Case2Mean&) {
            return std::log(std::sin(kTwoPi * x[0]) + 2.0 * std::abs(std::tan(kTwoPi * x[1])) + 2.0);
          },
          [&](const Case3DMean&) { return std::exp(x[0] / 3.0 + x[1] / 3.0 + std::sqrt(x[2] + 0.1)); },
          [&](const IdentityMean&) { return x[0]; },
          [&](const ConstantMean& m) { return m.value; },
          [&](const AdditiveMean& m) {
            double sum = 0.0;
            for (std::size_t k = 0; k < m.components.size(); ++k) sum += m.components[k](x[k]);
            return sum;
          },
          [&](const CompositionMean& m) {
            std::vector<double> value(x.begin(), x.end());
            for (const auto& layer : m.layers) value = layer(value);
            if (value.size() != 1) throw std::invalid_argument("composition must end in a scalar");
            return value[0];
          },
      },
      f0);
}

Eigen::VectorXd eval_mean_grid(const MeanFunction& f0, const GridDesign& grid) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  const auto& coords = grid.coordinates();
  std::vector<double> x(grid.dim());
  for (Eigen::Index j = 0; j < coords.cols(); ++j) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = coords(static_cast<Eigen::Index>(k), j);
    out(j) = eval_mean(f0, x);
  }
  return out;
}

void validate(const NoiseSpec& noise, const GridDesign& grid) {
  std::visit(Overloaded{
                 [](const NoNoise&) {},
                 [](const ConstantNoise& c) {
                   if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) {
                     throw std::invalid_argument("noise sigma must be positive and finite");
                   }
                 },
                 [&](const GridNoise& g) {
                   if (g.tau.size() != grid.size()) {
                     throw std::invalid_argument("per-point noise has " + std::to_string(g.tau.size()) +
                                                 " values, grid has " + std::to_string(grid.size()));
                   }
                   for (double t : g.tau) {
                     if (!(t > 0.0) || !std::isfinite(t)) {
                       throw std::invalid_argument("per-point noise values must be positive and finite");
                     }
                   }
                 },
             },
             noise);
}

std::string describe(const NoiseSpec& noise) {
  return std::visit(Overloaded{
                        [](const NoNoise&) -> std::string { return "none"; },
                        [](const ConstantNoise& c) {
                          std::ostringstream out;
                          out << "sigma=" << c.sigma;
                          return out.str();
                        },
                        [](const GridNoise&) -> std::string { return "tau-grid"; },
                    },
                    noise);
}

double noise_sigma(const NoiseSpec& noise) {
  return std::visit(Overloaded{
                        [](const NoNoise&) { return 0.0; },
                        [](const ConstantNoise& c) { return c.sigma; },
                        [](const GridNoise&) { return std::numeric_limits<double>::quiet_NaN(); },
                    },
                    noise);
}

EtaSampler::EtaSampler(const KernelSpec& kernel, const GridDesign& grid, std::size_t dense_limit)
    : n_(grid.size()) {
  validate(kernel);
  if (is_zero_kernel(kernel)) {
    path_ = Path::kZero;
    return;
  }
  const auto N = static_cast<Eigen::Index>(n_);
  if (const auto* c = std::get_if<CosineProcess>(&kernel)) {
    if (c->d != grid.dim()) {
      throw std::invalid_argument("cosine kernel dimension does not match grid dimension");
    }
    path_ = Path::kCosine;
    cosine_sd_ = std::sqrt(c->normalize_by_d ? c->xi_var / static_cast<double>(c->d) : c->xi_var);
    const auto d = static_cast<Eigen::Index>(c->d);
    cos_.resize(N, d);
    sin_.resize(N, d);
    const auto& coords = grid.coordinates();
    for (Eigen::Index j = 0; j < N; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) {
        cos_(j, k) = std::cos(kTwoPi * coords(k, j));
        sin_(j, k) = std::sin(kTwoPi * coords(k, j));
      }
    }
    return;
  }
  path_ = Path::kFactor;
  if (const auto* s = std::get_if<SpectralKernel>(&kernel)) {
    const auto r = static_cast<Eigen::Index>(s->eigenvalues.size());
    factor_.resize(N, r);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto x = grid.point_at(static_cast<std::size_t>(j));
      for (Eigen::Index k = 0; k < r; ++k) {
        factor_(j, k) = std::sqrt(s->eigenvalues[static_cast<std::size_t>(k)]) *
                        s->eigenfunctions[static_cast<std::size_t>(k)](x);
      }
    }
    return;
  }
  const Eigen::MatrixXd g = covariance_matrix(kernel, grid, dense_limit);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double top = values.maxCoeff();
  if (values.minCoeff() < -1e-8 * std::max(top, 0.0)) {
    throw std::invalid_argument("covariance is not positive semi-definite (min eigenvalue " +
                                std::to_string(values.minCoeff()) + ")");
  }
  factor_ = solver.eigenvectors() * values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::VectorXd EtaSampler::draw(Rng& rng) const {
  const auto N = static_cast<Eigen::Index>(n_);
  switch (path_) {
    case Path::kZero:
      return Eigen::VectorXd::Zero(N);
    case Path::kCosine: {
      const Eigen::Index d = cos_.cols();
      Eigen::VectorXd xi(d);
      Eigen::VectorXd xi_prime(d);
      for (Eigen::Index k = 0; k < d; ++k) {
        xi(k) = cosine_sd_ * rng.normal();
        xi_prime(k) = cosine_sd_ * rng.normal();
      }
      return cos_ * xi + sin_ * xi_prime;
    }
    case Path::kFactor: {
      Eigen::VectorXd z(factor_.cols());
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
      return factor_ * z;
    }
  }
  return Eigen::VectorXd::Zero(N);
}

Eigen::VectorXd sample_eta(const KernelSpec& kernel, const GridDesign& grid, Rng& rng) {
  return EtaSampler(kernel, grid).draw(rng);
}

FunctionalDataset simulate_dataset(std::size_t n, const GridDesign& grid, const MeanFunction& f0,
                                   const KernelSpec& kernel, const NoiseSpec& noise,
                                   std::uint64_t seed, std::size_t jobs) {
  if (n < 1) throw std::invalid_argument("simulate_dataset needs n >= 1");
  validate(noise, grid);
  const Eigen::VectorXd mean = eval_mean_grid(f0, grid);
  if (!mean.allFinite()) throw std::invalid_argument("mean function is not finite on the grid");
  const EtaSampler sampler(kernel, grid);

  FunctionalDataset out{grid, RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size())),
                        DatasetMeta{mean_id(f0), describe(kernel), describe(noise), noise_sigma(noise), seed}};
  parallel_for(n, jobs, [&](std::size_t i) {
    Rng eta_rng(seed, i, StreamRole::kEta);
    Rng noise_rng(seed, i, StreamRole::kNoise);
    Eigen::VectorXd row = mean + sampler.draw(eta_rng);
    std::visit(Overloaded{
                   [](const NoNoise&) {},
                   [&](const ConstantNoise& c) {
                     for (Eigen::Index j = 0; j < row.size(); ++j) row(j) += c.sigma * noise_rng.normal();
                   },
                   [&](const GridNoise& g) {
                     for (Eigen::Index j = 0; j < row.size(); ++j) {
                       row(j) += g.tau[static_cast<std::size_t>(j)] * noise_rng.normal();
                     }
                   },
               },
               noise);
    out.y.row(static_cast<Eigen::Index>(i)) = row.transpose();
  });
  return out;
}

Eigen::VectorXd pointwise_mean(const FunctionalDataset& dataset) {
  if (dataset.y.rows() == 0) throw std::invalid_argument("pointwise_mean of an empty dataset");
  return dataset.y.colwise().mean().transpose();
}

}  // namespace fdnn
