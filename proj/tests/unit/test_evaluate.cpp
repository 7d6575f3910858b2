#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdnn/evaluate.hpp"

using namespace fdnn;

namespace {

Network identity_gadget(double bound) {
  Network net;
  net.arch.widths = {1, 2, 1};
  net.arch.norm_bound = bound;
  net.params = NetworkParams::zeros(net.arch);
  net.params.weights[0] << 1.0, -1.0;
  net.params.weights[1] << 1.0, -1.0;
  return net;
}

RiskRecord rec(double sigma, std::size_t N, std::size_t n, std::size_t rep, double risk, bool failed = false) {
  RiskRecord r;
  r.sigma = sigma;
  r.n_points = N;
  r.n = n;
  r.rep = rep;
  r.risk = risk;
  r.failed = failed;
  return r;
}

ExperimentCell small_cell() {
  ExperimentCell cell;
  cell.f0 = Case2Mean{};
  cell.kernel = CosineProcess{1.0, 2, false};
  cell.sigma = 1.0;
  cell.dims = {6, 6};
  cell.n = 5;
  cell.train.epochs = 3;
  cell.train.batch_size = 8;
  cell.arch.width = 4;
  return cell;
}

}  // namespace

TEST_CASE("risk of small networks") {
  const GridDesign g({4});
  const Network zero{Architecture{{1, 2, 1}}, NetworkParams::zeros(Architecture{{1, 2, 1}})};
  // f0 = x: (1/16 + 4/16 + 9/16 + 1) / 4
  CHECK(empirical_l2_risk(zero, IdentityMean{1}, g) == doctest::Approx(0.46875));
  CHECK(empirical_l2_risk(identity_gadget(1e9), IdentityMean{1}, g) == 0.0);
  // clipped at 0.5: errors 0, 0, 0.25, 0.5
  const Network clipped = identity_gadget(0.5);
  CHECK(predict(clipped, g) == Eigen::Vector4d(0.25, 0.5, 0.5, 0.5));
  CHECK(empirical_l2_risk(clipped, IdentityMean{1}, g) == doctest::Approx((0.0625 + 0.25) / 4));
  CHECK_THROWS_AS(empirical_l2_risk(zero, Eigen::VectorXd::Zero(3), g), std::invalid_argument);
}

TEST_CASE("risk agrees with a direct loop") {
  Architecture arch{{2, 6, 6, 1}};
  arch.norm_bound = 0.8;
  Rng rng(21);
  NetworkParams p = init_params(arch, InitScheme::kHeNormal, rng);
  p.shifts[0].setConstant(-0.1);
  const Network net{arch, p};
  const GridDesign g({9, 7});
  double sum = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto x = g.point_at(j);
    const double f = std::clamp(forward(p, x), -0.8, 0.8);
    const double e = f - eval_mean(Case2Mean{}, x);
    sum += e * e;
  }
  CHECK(empirical_l2_risk(net, Case2Mean{}, g) == doctest::Approx(sum / 63).epsilon(1e-12));
  CHECK(empirical_l2_risk(net, eval_mean_grid(Case2Mean{}, g), g) ==
        empirical_l2_risk(net, Case2Mean{}, g));
}

TEST_CASE("aggregation") {
  std::vector<RiskRecord> records{rec(2, 225, 50, 0, 9), rec(1, 225, 100, 0, 0.5), rec(1, 225, 50, 0, 1),
                                  rec(1, 225, 50, 1, 2),  rec(1, 225, 50, 2, 3),   rec(1, 225, 50, 3, 100, true)};
  const auto rows = aggregate(records);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].sigma == 1.0);
  CHECK(rows[0].n == 50);
  CHECK(rows[0].reps == 3);
  CHECK(rows[0].failed == 1);
  CHECK(rows[0].mean_risk == doctest::Approx(2.0));
  CHECK(rows[0].sd_risk == doctest::Approx(1.0));
  CHECK(rows[1].n == 100);
  CHECK(rows[1].sd_risk == 0.0);
  CHECK(rows[2].sigma == 2.0);
  CHECK(aggregate({}).empty());
}

TEST_CASE("rate diagnostic") {
  std::vector<RiskRow> rows;
  for (std::size_t n : {10, 40, 160, 640}) {
    RiskRow r;
    r.n = n;
    r.n_points = 100;
    r.reps = 1;
    r.mean_risk = 3.0 / std::sqrt(static_cast<double>(n) * 10.0);
    rows.push_back(r);
  }
  const RateDiagnostic exact = rate_diagnostic(rows, 0.5, 1.0);
  CHECK(exact.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(exact.std_error < 1e-10);
  CHECK(exact.target == -0.5);
  CHECK(exact.groups == 4);
  CHECK(rate_diagnostic(rows, 0.0, 3.0).target == doctest::Approx(-0.75));

  std::vector<RiskRow> table;
  const double means[] = {0.0731, 0.0437, 0.0254};
  const std::size_t ns[] = {50, 100, 200};
  for (int i = 0; i < 3; ++i) {
    RiskRow r;
    r.n = ns[i];
    r.n_points = 225;
    r.reps = 20;
    r.mean_risk = means[i];
    table.push_back(r);
  }
  // least squares on three equally spaced abscissae: endpoints only
  const double expected = std::log(0.0254 / 0.0731) / std::log(4.0);
  CHECK(rate_diagnostic(table, 0.0, 1.0).slope == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-0.7627).epsilon(1e-3));

  table.pop_back();
  CHECK_THROWS_AS(rate_diagnostic(table, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("polynomial baseline") {
  const GridDesign g({8, 8});
  const Eigen::VectorXd lin = eval_mean_grid(IdentityMean{2}, g);
  CHECK(baseline_tensor_poly(lin, g, 1, lin).risk < 1e-20);
  const PolyFit flat = baseline_tensor_poly(lin, g, 0, lin);
  // variance of {1/8, ..., 1}
  CHECK(flat.risk == doctest::Approx(63.0 / (12.0 * 64.0)).epsilon(1e-12));
  CHECK(flat.coefficients.size() == 1);
  CHECK(baseline_tensor_poly(lin, g, 2, lin).coefficients.size() == 9);
  CHECK_FALSE(baseline_tensor_poly(lin, g, 3, lin).regularized);
  CHECK_THROWS_AS(baseline_tensor_poly(lin, g, 8, lin), std::invalid_argument);
}

TEST_CASE("architecture resolution") {
  const GridDesign g({15, 15});
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(225, -3.0);
  ArchitectureSettings s;
  s.constants.c_width = 6;
  const Architecture practical = resolve_architecture(s, 200, g, t);
  CHECK(practical.hidden_layers() == 3);
  CHECK(practical.widths[1] == 85);
  CHECK_FALSE(practical.constrained);
  CHECK(practical.norm_bound == 3.0);
  s.width = 12;
  CHECK(resolve_architecture(s, 200, g, t).widths[2] == 12);
  s.norm_bound = 7.0;
  CHECK(resolve_architecture(s, 200, g, t).norm_bound == 7.0);

  ArchitectureSettings th;
  th.mode = ArchitectureMode::kTheory;
  const Architecture theory = resolve_architecture(th, 100, GridDesign({25, 25}), Eigen::VectorXd::Zero(625));
  CHECK(theory.hidden_layers() == 7);
  CHECK(theory.constrained);
  CHECK(theory.norm_bound == 1.0);
  const TrainConfig tc = resolve_train_config(th, TrainConfig{});
  CHECK(tc.constrained);
  CHECK(tc.enforce_sparsity);
  CHECK_FALSE(resolve_train_config(s, TrainConfig{}).constrained);
  CHECK(parse_architecture_mode(to_string(ArchitectureMode::kTheory)) == ArchitectureMode::kTheory);
  CHECK_THROWS_AS(parse_architecture_mode("deep"), std::invalid_argument);
}

TEST_CASE("replication seeds") {
  CHECK(replication_data_seed(1, 0) != replication_data_seed(1, 1));
  CHECK(replication_data_seed(1, 0) != replication_train_seed(1, 0));
  CHECK(replication_data_seed(1, 0) != replication_data_seed(2, 0));
  CHECK(replication_data_seed(1, 3) == replication_data_seed(1, 3));
}

TEST_CASE("replications do not depend on the thread count") {
  const ExperimentCell cell = small_cell();
  const auto serial = run_replications(cell, 4, 77, 1);
  const auto threaded = run_replications(cell, 4, 77, 4);
  REQUIRE(serial.size() == 4);
  REQUIRE(threaded.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(serial[r].rep == r);
    CHECK(threaded[r].rep == r);
    CHECK(serial[r].risk == threaded[r].risk);
    CHECK(serial[r].seed == replication_data_seed(77, r));
    CHECK(serial[r].n_points == 36);
    CHECK(std::isfinite(serial[r].risk));
  }
  CHECK(run_replication(cell, 2, 77).risk == serial[2].risk);

  std::vector<std::size_t> seen;
  const auto partial = run_replications(
      cell, 4, 77, 2, [](std::size_t rep) { return rep % 2 == 0; },
      [&](const RiskRecord& r) { seen.push_back(r.rep); });
  REQUIRE(partial.size() == 2);
  CHECK(partial[0].rep == 1);
  CHECK(partial[1].risk == serial[3].risk);
  CHECK(seen.size() == 2);
}
