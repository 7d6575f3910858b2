#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"
#include "fdnn/network.hpp"
#include "fdnn/simulate.hpp"
#include "fdnn/spectrum.hpp"
#include "fdnn/train.hpp"

namespace fdnn {

/// Network output on the grid, clipped to [-F, F].
Eigen::VectorXd predict(const Network& net, const GridDesign& grid);

/// (1/N) sum_j (clip(f(X_j)) - f0(X_j))^2.
double empirical_l2_risk(const Network& net, const MeanFunction& f0, const GridDesign& grid);
double empirical_l2_risk(const Network& net, const Eigen::VectorXd& truth, const GridDesign& grid);

enum class ArchitectureMode { kPractical, kTheory };
std::string to_string(ArchitectureMode mode);
ArchitectureMode parse_architecture_mode(const std::string& text);

/// How a fit picks its architecture. Practical mode: `layers` hidden layers
/// of the selector width (or `width` when set), unconstrained. Theory mode:
/// full selector depth, parameters in [-1, 1], sparsity budget enforced.
struct ArchitectureSettings {
  ArchitectureMode mode = ArchitectureMode::kPractical;
  std::size_t layers = 3;
  std::optional<std::size_t> width;
  ArchitectureConstants constants;
  double varrho = 0.0;
  double theta = 1.0;
  /// Defaults to max(1, max_j |Ybar_j|).
  std::optional<double> norm_bound;
};

Architecture resolve_architecture(const ArchitectureSettings& settings, std::size_t n, const GridDesign& grid,
                                  const Eigen::VectorXd& targets);

/// Applies the mode's training overrides (projection and sparsity in theory mode).
TrainConfig resolve_train_config(const ArchitectureSettings& settings, TrainConfig config);

/// One simulation setting of a Monte Carlo study.
struct ExperimentCell {
  MeanFunction f0;
  KernelSpec kernel;
  double sigma = 1.0;
  std::vector<std::size_t> dims;
  std::size_t n = 50;
  TrainConfig train;
  ArchitectureSettings arch;
};

struct RiskRecord {
  double sigma = 0.0;
  std::size_t n_points = 0;
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double risk = 0.0;
  double seconds = 0.0;
  bool failed = false;
};

struct RiskRow {
  double sigma = 0.0;
  std::size_t n_points = 0;
  std::size_t n = 0;
  std::size_t reps = 0;
  double mean_risk = 0.0;
  double sd_risk = 0.0;
  std::size_t failed = 0;
};

/// Groups by (sigma, N, n) in ascending key order; failed records are only
/// counted. SD uses divisor reps - 1 and is 0 for a single replication.
std::vector<RiskRow> aggregate(const std::vector<RiskRecord>& records);

/// Seeds of replication `rep` under study seed `seed`.
std::uint64_t replication_data_seed(std::uint64_t seed, std::size_t rep);
std::uint64_t replication_train_seed(std::uint64_t seed, std::size_t rep);

/// simulate -> fit -> risk for a single replication. Divergence yields a
/// record with failed = true.
RiskRecord run_replication(const ExperimentCell& cell, std::size_t rep, std::uint64_t seed);

/// Runs replications 0..reps-1 on `jobs` threads, skipping those for which
/// skip(rep) is true. `on_record` is invoked under a lock as records finish.
/// Returns records sorted by rep.
std::vector<RiskRecord> run_replications(const ExperimentCell& cell, std::size_t reps, std::uint64_t seed,
                                         std::size_t jobs,
                                         const std::function<bool(std::size_t)>& skip = {},
                                         const std::function<void(const RiskRecord&)>& on_record = {});

struct RateDiagnostic {
  double slope = 0.0;
  double std_error = 0.0;
  double target = 0.0;  ///< -theta / (theta + 1)
  std::size_t groups = 0;
};

/// Least-squares slope of log(mean risk) on log(n N^varrho). Needs >= 3
/// groups with distinct abscissae and positive risks.
RateDiagnostic rate_diagnostic(const std::vector<RiskRow>& rows, double varrho, double theta);

struct PolyFit {
  std::size_t degree = 0;
  Eigen::VectorXd coefficients;  ///< tensor Legendre basis, axis 1 fastest
  Eigen::VectorXd fitted;
  double risk = 0.0;
  bool regularized = false;
};

/// Least-squares tensor-product polynomial fit (Legendre basis in 2x - 1 per
/// axis) to the targets. Risk is measured against `truth`. Rank-deficient
/// designs fall back to a ridge solve and set `regularized`.
PolyFit baseline_tensor_poly(const Eigen::VectorXd& targets, const GridDesign& grid, std::size_t degree,
                             const Eigen::VectorXd& truth);
PolyFit baseline_tensor_poly(const FunctionalDataset& dataset, std::size_t degree, const MeanFunction& f0);

}  // namespace fdnn
