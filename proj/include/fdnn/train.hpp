#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/error.hpp"
#include "fdnn/grid.hpp"
#include "fdnn/network.hpp"
#include "fdnn/simulate.hpp"

namespace fdnn {

enum class Optimizer { kAdam, kSgd };
std::string to_string(Optimizer optimizer);
Optimizer parse_optimizer(const std::string& text);

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l1_coeff = 1e-5;
  /// Project onto [-1, 1] after every step.
  bool constrained = false;
  /// Final magnitudes at or below this are set to zero.
  double zero_threshold = 1e-4;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  InitScheme init = InitScheme::kHeNormal;
  /// Magnitude pruning during the main epochs: the number of kept entries
  /// ramps down cubically to arch.sparsity between 25% and 75% of training.
  /// Afterwards the survivors are retrained for sparse_finetune_epochs.
  bool enforce_sparsity = false;
  std::size_t sparse_finetune_epochs = 50;
};

/// Throws std::invalid_argument when a field is out of range. n_points is the
/// number of training points (batch_size must not exceed it).
void validate(const TrainConfig& config, std::size_t n_points);

struct TrainReport {
  std::vector<double> data_loss;  ///< per epoch, full-grid data term
  std::vector<double> l1_loss;    ///< per epoch, penalty term
  std::vector<double> finetune_data_loss;
  double final_risk = 0.0;  ///< (1/N) sum (Ybar - f)^2 after thresholding
  std::size_t final_nonzero = 0;
  double final_norm = 0.0;
  double seconds = 0.0;
  std::size_t steps = 0;
};

/// Thrown when the loss becomes non-finite or grows past 1e6 times its
/// initial value. Carries the trajectory so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, TrainReport report)
      : NumericalError(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

/// (1/N) sum_j (targets_j - f(X_j))^2 + l1_coeff * sum |theta|.
/// Throws std::invalid_argument on a length mismatch.
double objective(const NetworkParams& params, const Eigen::VectorXd& targets, const GridDesign& grid,
                 double l1_coeff);

/// Gradient of (1/B) sum_b (y_b - f(x_b))^2 + l1_coeff * sum |theta| over the
/// columns of `points`. Uses sigma'(0) = 0 and sign(0) = 0.
NetworkParams gradients(const NetworkParams& params, const Eigen::MatrixXd& points,
                        const Eigen::VectorXd& targets, double l1_coeff, double* data_loss = nullptr);

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  std::size_t step = 0;

  static AdamState zeros_like(const NetworkParams& params);
};

/// One bias-corrected Adam update (or a plain gradient step for kSgd),
/// followed by projection when config.constrained. Entries where `mask` is
/// zero are left untouched.
void adam_step(NetworkParams& params, AdamState& state, const NetworkParams& grads, const TrainConfig& config,
               const NetworkParams* mask = nullptr);

struct TrainHooks {
  /// Called after every optimizer step with the step count and parameters.
  std::function<void(std::size_t, const NetworkParams&)> on_step;
};

struct FitResult {
  NetworkParams params;
  TrainReport report;
};

/// Minimizes the empirical risk against the given targets on the grid.
FitResult fit_targets(const Eigen::VectorXd& targets, const GridDesign& grid, const Architecture& arch,
                      const TrainConfig& config, const TrainHooks& hooks = {});

/// Computes Ybar once and fits it.
FitResult fit(const FunctionalDataset& dataset, const Architecture& arch, const TrainConfig& config,
              const TrainHooks& hooks = {});

}  // namespace fdnn
