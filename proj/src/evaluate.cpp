#include "fdnn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "fdnn/parallel.hpp"

namespace fdnn {

Eigen::VectorXd predict(const Network& net, const GridDesign& grid) {
  Eigen::VectorXd f = forward_batch(net.params, grid);
  const double bound = net.arch.norm_bound;
  if (std::isfinite(bound)) f = f.cwiseMax(-bound).cwiseMin(bound);
  return f;
}

double empirical_l2_risk(const Network& net, const Eigen::VectorXd& truth, const GridDesign& grid) {
  if (static_cast<std::size_t>(truth.size()) != grid.size()) {
    throw std::invalid_argument("truth vector does not match grid size");
  }
  return (predict(net, grid) - truth).squaredNorm() / static_cast<double>(grid.size());
}

double empirical_l2_risk(const Network& net, const MeanFunction& f0, const GridDesign& grid) {
  if (mean_dimension(f0) != grid.dim() || net.arch.input_dim() != grid.dim()) {
    throw std::invalid_argument("network, mean function and grid dimensions disagree");
  }
  return empirical_l2_risk(net, eval_mean_grid(f0, grid), grid);
}

std::string to_string(ArchitectureMode mode) {
  return mode == ArchitectureMode::kPractical ? "practical" : "theory";
}

ArchitectureMode parse_architecture_mode(const std::string& text) {
  if (text == "practical") return ArchitectureMode::kPractical;
  if (text == "theory") return ArchitectureMode::kTheory;
  throw std::invalid_argument("unknown architecture mode '" + text + "'");
}

Architecture resolve_architecture(const ArchitectureSettings& settings, std::size_t n, const GridDesign& grid,
                                  const Eigen::VectorXd& targets) {
  const double bound =
      settings.norm_bound.value_or(std::max(1.0, targets.size() ? targets.cwiseAbs().maxCoeff() : 1.0));
  Architecture arch;
  if (settings.mode == ArchitectureMode::kTheory) {
    arch = architecture_from_theory(n, grid.size(), settings.varrho, settings.theta, settings.constants, grid.dim(),
                                    bound);
    arch.constrained = true;
  } else {
    arch = practical_architecture(n, grid.size(), settings.varrho, settings.theta, settings.constants, grid.dim(),
                                  settings.layers, bound);
  }
  if (settings.width) {
    for (std::size_t l = 1; l + 1 < arch.widths.size(); ++l) arch.widths[l] = *settings.width;
  }
  if (settings.mode == ArchitectureMode::kPractical) arch.sparsity = std::max(arch.sparsity, arch.parameter_count());
  validate(arch);
  return arch;
}

TrainConfig resolve_train_config(const ArchitectureSettings& settings, TrainConfig config) {
  if (settings.mode == ArchitectureMode::kTheory) {
    config.constrained = true;
    config.enforce_sparsity = true;
  }
  return config;
}

std::vector<RiskRow> aggregate(const std::vector<RiskRecord>& records) {
  using Key = std::tuple<double, std::size_t, std::size_t>;
  std::map<Key, std::vector<const RiskRecord*>> groups;
  for (const auto& r : records) groups[{r.sigma, r.n_points, r.n}].push_back(&r);
  std::vector<RiskRow> rows;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [](const RiskRecord* a, const RiskRecord* b) { return a->rep < b->rep; });
    RiskRow row;
    std::tie(row.sigma, row.n_points, row.n) = key;
    double sum = 0.0;
    for (const auto* r : members) {
      if (r->failed) {
        ++row.failed;
        continue;
      }
      ++row.reps;
      sum += r->risk;
    }
    if (row.reps > 0) {
      row.mean_risk = sum / static_cast<double>(row.reps);
      double ss = 0.0;
      for (const auto* r : members) {
        if (!r->failed) ss += (r->risk - row.mean_risk) * (r->risk - row.mean_risk);
      }
      row.sd_risk = row.reps > 1 ? std::sqrt(ss / static_cast<double>(row.reps - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::uint64_t replication_data_seed(std::uint64_t seed, std::size_t rep) {
  return substream_seed(seed, rep, StreamRole::kDataset);
}

std::uint64_t replication_train_seed(std::uint64_t seed, std::size_t rep) {
  return substream_seed(seed, rep, StreamRole::kTrain);
}

RiskRecord run_replication(const ExperimentCell& cell, std::size_t rep, std::uint64_t seed) {
  const GridDesign grid(cell.dims);
  RiskRecord record;
  record.sigma = cell.sigma;
  record.n_points = grid.size();
  record.n = cell.n;
  record.rep = rep;
  record.seed = replication_data_seed(seed, rep);

  const NoiseSpec noise = cell.sigma > 0.0 ? NoiseSpec{ConstantNoise{cell.sigma}} : NoiseSpec{NoNoise{}};
  const FunctionalDataset data = simulate_dataset(cell.n, grid, cell.f0, cell.kernel, noise, record.seed);
  const Eigen::VectorXd targets = pointwise_mean(data);
  const Architecture arch = resolve_architecture(cell.arch, cell.n, grid, targets);
  TrainConfig config = resolve_train_config(cell.arch, cell.train);
  config.seed = replication_train_seed(seed, rep);
  try {
    const FitResult result = fit_targets(targets, grid, arch, config);
    record.risk = empirical_l2_risk(Network{arch, result.params}, cell.f0, grid);
    record.seconds = result.report.seconds;
  } catch (const TrainingDiverged& e) {
    record.failed = true;
    record.seconds = e.report().seconds;
  }
  return record;
}

std::vector<RiskRecord> run_replications(const ExperimentCell& cell, std::size_t reps, std::uint64_t seed,
                                         std::size_t jobs, const std::function<bool(std::size_t)>& skip,
                                         const std::function<void(const RiskRecord&)>& on_record) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  std::vector<std::size_t> todo;
  for (std::size_t r = 0; r < reps; ++r) {
    if (!skip || !skip(r)) todo.push_back(r);
  }
  std::vector<RiskRecord> records(todo.size());
  std::mutex writer;
  parallel_for(todo.size(), jobs, [&](std::size_t i) {
    records[i] = run_replication(cell, todo[i], seed);
    if (on_record) {
      std::lock_guard lock(writer);
      on_record(records[i]);
    }
  });
  return records;
}

RateDiagnostic rate_diagnostic(const std::vector<RiskRow>& rows, double varrho, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  std::vector<std::pair<double, double>> points;
  for (const auto& row : rows) {
    if (row.reps == 0) continue;
    if (!(row.mean_risk > 0.0)) throw std::invalid_argument("rate diagnostic needs positive mean risks");
    const double effective = static_cast<double>(row.n) * std::pow(static_cast<double>(row.n_points), varrho);
    points.emplace_back(effective, row.mean_risk);
  }
  // Same regression as the eigenvalue decay fit; slope = -rate.
  const DecayFit fit = estimate_decay_rate(points);
  RateDiagnostic out;
  out.slope = -fit.rate;
  out.std_error = fit.std_error;
  out.target = -theta / (theta + 1.0);
  out.groups = fit.points;
  return out;
}

namespace {

/// Legendre polynomials P_0..P_degree at t.
Eigen::VectorXd legendre(double t, std::size_t degree) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(degree + 1));
  p(0) = 1.0;
  if (degree >= 1) p(1) = t;
  for (std::size_t k = 2; k <= degree; ++k) {
    const double kk = static_cast<double>(k);
    p(static_cast<Eigen::Index>(k)) =
        ((2.0 * kk - 1.0) * t * p(static_cast<Eigen::Index>(k - 1)) - (kk - 1.0) * p(static_cast<Eigen::Index>(k - 2))) /
        kk;
  }
  return p;
}

}  // namespace

PolyFit baseline_tensor_poly(const Eigen::VectorXd& targets, const GridDesign& grid, std::size_t degree,
                             const Eigen::VectorXd& truth) {
  const std::size_t d = grid.dim();
  std::size_t terms = 1;
  for (std::size_t k = 0; k < d; ++k) terms *= degree + 1;
  if (terms > grid.size()) {
    throw std::invalid_argument("tensor polynomial has " + std::to_string(terms) + " terms but only " +
                                std::to_string(grid.size()) + " grid points");
  }
  if (static_cast<std::size_t>(targets.size()) != grid.size() || static_cast<std::size_t>(truth.size()) != grid.size()) {
    throw std::invalid_argument("targets/truth do not match grid size");
  }
  const auto N = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd design(N, static_cast<Eigen::Index>(terms));
  const auto& coords = grid.coordinates();
  std::vector<Eigen::VectorXd> axis(d);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < d; ++k) axis[k] = legendre(2.0 * coords(static_cast<Eigen::Index>(k), j) - 1.0, degree);
    for (std::size_t term = 0; term < terms; ++term) {
      std::size_t rest = term;
      double value = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        value *= axis[k](static_cast<Eigen::Index>(rest % (degree + 1)));
        rest /= degree + 1;
      }
      design(j, static_cast<Eigen::Index>(term)) = value;
    }
  }

  PolyFit out;
  out.degree = degree;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() == design.cols()) {
    out.coefficients = qr.solve(targets);
  } else {
    out.regularized = true;
    const double ridge = 1e-10 * design.squaredNorm() / static_cast<double>(design.cols());
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += ridge;
    out.coefficients = gram.ldlt().solve(design.transpose() * targets);
  }
  out.fitted = design * out.coefficients;
  out.risk = (out.fitted - truth).squaredNorm() / static_cast<double>(N);
  return out;
}

PolyFit baseline_tensor_poly(const FunctionalDataset& dataset, std::size_t degree, const MeanFunction& f0) {
  return baseline_tensor_poly(pointwise_mean(dataset), dataset.grid, degree, eval_mean_grid(f0, dataset.grid));
}

}  // namespace fdnn
