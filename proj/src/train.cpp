#include "fdnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fdnn {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

template <class Fn>
void zip_blocks(NetworkParams& a, const NetworkParams& b, Fn&& fn) {
  for (std::size_t l = 0; l < a.weights.size(); ++l) fn(a.weights[l].reshaped(), b.weights[l].reshaped());
  for (std::size_t l = 0; l < a.shifts.size(); ++l) fn(a.shifts[l].reshaped(), b.shifts[l].reshaped());
}

}  // namespace

std::string to_string(Optimizer optimizer) { return optimizer == Optimizer::kAdam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& text) {
  if (text == "adam") return Optimizer::kAdam;
  if (text == "sgd") return Optimizer::kSgd;
  throw std::invalid_argument("unknown optimizer '" + text + "'");
}

void validate(const TrainConfig& config, std::size_t n_points) {
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (config.batch_size < 1 || config.batch_size > n_points) {
    throw std::invalid_argument("batch_size must lie in 1.." + std::to_string(n_points));
  }
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(config.l1_coeff >= 0.0)) throw std::invalid_argument("l1_coeff must be >= 0");
  if (!(config.zero_threshold >= 0.0)) throw std::invalid_argument("zero_threshold must be >= 0");
}

double objective(const NetworkParams& params, const Eigen::VectorXd& targets, const GridDesign& grid,
                 double l1_coeff) {
  if (static_cast<std::size_t>(targets.size()) != grid.size()) {
    throw std::invalid_argument("targets have " + std::to_string(targets.size()) + " entries, grid has " +
                                std::to_string(grid.size()));
  }
  const Eigen::VectorXd f = forward_batch(params, grid);
  return (targets - f).squaredNorm() / static_cast<double>(grid.size()) + l1_coeff * params.abs_sum();
}

NetworkParams gradients(const NetworkParams& params, const Eigen::MatrixXd& points,
                        const Eigen::VectorXd& targets, double l1_coeff, double* data_loss) {
  const Eigen::Index batch = points.cols();
  if (batch == 0) throw std::invalid_argument("gradient batch is empty");
  if (targets.size() != batch) throw std::invalid_argument("batch targets and points differ in length");
  const std::size_t L = params.shifts.size();

  // Forward, keeping pre-activations z_l = h_{l-1} - v_l and activations a_l.
  std::vector<Eigen::MatrixXd> pre(L);
  std::vector<Eigen::MatrixXd> act(L);
  Eigen::MatrixXd h = params.weights[0] * points;
  for (std::size_t l = 1; l <= L; ++l) {
    pre[l - 1] = h.colwise() - params.shifts[l - 1];
    act[l - 1] = pre[l - 1].cwiseMax(0.0);
    h = params.weights[l] * act[l - 1];
  }
  const Eigen::RowVectorXd residual = targets.transpose() - h.row(0);
  if (data_loss) *data_loss = residual.squaredNorm() / static_cast<double>(batch);

  NetworkParams grad;
  grad.weights.resize(L + 1);
  grad.shifts.resize(L);
  Eigen::MatrixXd delta = (-2.0 / static_cast<double>(batch)) * residual;  // d loss / d h_L
  for (std::size_t l = L; l >= 1; --l) {
    grad.weights[l].noalias() = delta * act[l - 1].transpose();
    Eigen::MatrixXd back = params.weights[l].transpose() * delta;
    back = (pre[l - 1].array() > 0.0).select(back, 0.0);
    grad.shifts[l - 1] = -back.rowwise().sum();
    delta = std::move(back);
  }
  grad.weights[0].noalias() = delta * points.transpose();

  if (l1_coeff > 0.0) {
    for (std::size_t l = 0; l <= L; ++l) {
      grad.weights[l] += l1_coeff * params.weights[l].unaryExpr(&sign);
    }
    for (std::size_t l = 0; l < L; ++l) {
      grad.shifts[l] += l1_coeff * params.shifts[l].unaryExpr(&sign);
    }
  }
  return grad;
}

AdamState AdamState::zeros_like(const NetworkParams& params) {
  AdamState state{params, params, 0};
  for (auto& w : state.m.weights) w.setZero();
  for (auto& v : state.m.shifts) v.setZero();
  state.v = state.m;
  return state;
}

void adam_step(NetworkParams& params, AdamState& state, const NetworkParams& grads, const TrainConfig& config,
               const NetworkParams* mask) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    throw std::invalid_argument("optimizer state does not match parameter shapes");
  }
  ++state.step;
  const NetworkParams before = mask ? params : NetworkParams{};
  const double lr = config.learning_rate;
  if (config.optimizer == Optimizer::kSgd) {
    zip_blocks(params, grads, [&](auto p, const auto& g) { p -= lr * g; });
  } else {
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    auto update = [&](Eigen::Ref<Eigen::VectorXd> p, Eigen::Ref<Eigen::VectorXd> m, Eigen::Ref<Eigen::VectorXd> v,
                      const Eigen::Ref<const Eigen::VectorXd>& g) {
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      update(params.weights[l].reshaped(), state.m.weights[l].reshaped(), state.v.weights[l].reshaped(),
             grads.weights[l].reshaped());
    }
    for (std::size_t l = 0; l < params.shifts.size(); ++l) {
      update(params.shifts[l], state.m.shifts[l], state.v.shifts[l], grads.shifts[l]);
    }
  }
  if (mask) {
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      params.weights[l] = (mask->weights[l].array() != 0.0).select(params.weights[l], before.weights[l]);
    }
    for (std::size_t l = 0; l < params.shifts.size(); ++l) {
      params.shifts[l] = (mask->shifts[l].array() != 0.0).select(params.shifts[l], before.shifts[l]);
    }
  }
  if (config.constrained) params = project_params(std::move(params));
}

FitResult fit_targets(const Eigen::VectorXd& targets, const GridDesign& grid, const Architecture& arch,
                      const TrainConfig& config, const TrainHooks& hooks) {
  validate(arch);
  validate(config, grid.size());
  if (grid.dim() != arch.input_dim()) {
    throw std::invalid_argument("grid dimension " + std::to_string(grid.dim()) +
                                " does not match network input dimension " + std::to_string(arch.input_dim()));
  }
  if (static_cast<std::size_t>(targets.size()) != grid.size()) {
    throw std::invalid_argument("targets do not match grid size");
  }
  if (!targets.allFinite()) throw std::invalid_argument("targets contain non-finite values");

  const auto start = std::chrono::steady_clock::now();
  TrainConfig effective = config;
  effective.constrained = config.constrained || arch.constrained;

  Rng init_rng(config.seed, 0, StreamRole::kInit);
  Rng shuffle_rng(config.seed, 0, StreamRole::kShuffle);
  NetworkParams params = init_params(arch, config.init, init_rng);
  if (effective.constrained) params = project_params(std::move(params));
  AdamState state = AdamState::zeros_like(params);

  const Eigen::MatrixXd& coords = grid.coordinates();
  const std::size_t n_points = grid.size();
  const auto d = static_cast<Eigen::Index>(grid.dim());
  std::vector<std::size_t> order(n_points);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  const double initial = objective(params, targets, grid, 0.0);
  const double guard = 1e6 * std::max(initial, 1e-12);

  const bool prune = config.enforce_sparsity && arch.sparsity < arch.parameter_count();
  NetworkParams prune_mask;
  const NetworkParams* active_mask = nullptr;
  // Budget after `epoch` main epochs: full until a quarter of the way in,
  // then a cubic ramp down to the sparsity budget by three quarters.
  auto budget = [&](std::size_t epoch) {
    const double total = static_cast<double>(arch.parameter_count());
    const double begin = 0.25 * static_cast<double>(config.epochs);
    const double end = 0.75 * static_cast<double>(config.epochs);
    const double t = std::clamp((static_cast<double>(epoch) - begin) / std::max(end - begin, 1.0), 0.0, 1.0);
    const double target = static_cast<double>(arch.sparsity) + (total - static_cast<double>(arch.sparsity)) * std::pow(1.0 - t, 3);
    return static_cast<std::size_t>(std::ceil(target));
  };

  auto run_epochs = [&](std::size_t epochs, const NetworkParams* mask, std::vector<double>& data_trace,
                        std::vector<double>* l1_trace) {
    Eigen::MatrixXd points;
    Eigen::VectorXd batch_targets;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      for (std::size_t i = n_points; i-- > 1;) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
      for (std::size_t begin = 0; begin < n_points; begin += config.batch_size) {
        const std::size_t len = std::min(config.batch_size, n_points - begin);
        points.resize(d, static_cast<Eigen::Index>(len));
        batch_targets.resize(static_cast<Eigen::Index>(len));
        for (std::size_t b = 0; b < len; ++b) {
          const auto j = static_cast<Eigen::Index>(order[begin + b]);
          points.col(static_cast<Eigen::Index>(b)) = coords.col(j);
          batch_targets(static_cast<Eigen::Index>(b)) = targets(j);
        }
        const NetworkParams grads = gradients(params, points, batch_targets, config.l1_coeff);
        adam_step(params, state, grads, effective, mask ? mask : active_mask);
        ++report.steps;
        if (hooks.on_step) hooks.on_step(report.steps, params);
      }
      if (prune && !mask) {
        const std::size_t keep = budget(epoch + 1);
        if (keep < arch.parameter_count()) {
          params = keep_largest(std::move(params), keep, &prune_mask);
          active_mask = &prune_mask;
        }
      }
      const double data = objective(params, targets, grid, 0.0);
      data_trace.push_back(data);
      if (l1_trace) l1_trace->push_back(config.l1_coeff * params.abs_sum());
      if (!std::isfinite(data) || data > guard) {
        report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        throw TrainingDiverged("training diverged at epoch " + std::to_string(data_trace.size()) +
                                   " (data loss " + std::to_string(data) + ", initial " +
                                   std::to_string(initial) + ")",
                               report);
      }
    }
  };

  run_epochs(config.epochs, nullptr, report.data_loss, &report.l1_loss);

  if (prune) {
    NetworkParams mask;
    params = keep_largest(std::move(params), arch.sparsity, &mask);
    state = AdamState::zeros_like(params);
    run_epochs(config.sparse_finetune_epochs, &mask, report.finetune_data_loss, nullptr);
  }

  params = hard_threshold(std::move(params), config.zero_threshold);
  report.final_risk = objective(params, targets, grid, 0.0);
  report.final_nonzero = count_nonzero(params, 0.0);
  report.final_norm = empirical_norm(params, grid);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return FitResult{std::move(params), std::move(report)};
}

FitResult fit(const FunctionalDataset& dataset, const Architecture& arch, const TrainConfig& config,
              const TrainHooks& hooks) {
  return fit_targets(pointwise_mean(dataset), dataset.grid, arch, config, hooks);
}

}  // namespace fdnn
