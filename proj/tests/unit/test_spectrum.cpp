#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "fdnn/error.hpp"
#include "fdnn/spectrum.hpp"

using namespace fdnn;

namespace {

constexpr double kPi = std::numbers::pi;

// sum_k cos(2 pi k x) / k^2 = pi^2 (x^2 - x + 1/6) on [0, 1], so the
// varrho d = 2 kernel is (x^2 - x + 1/6) / 2 with x = frac(x - x').
double bernoulli2_closed(double delta) {
  double x = delta - std::floor(delta);
  return (x * x - x + 1.0 / 6.0) / 2.0;
}

// Eigenvalue j of the circulant with this first row, by a direct O(n^2) sum.
double direct_dft(const std::vector<double>& row, std::size_t j) {
  const double n = static_cast<double>(row.size());
  double s = 0.0;
  for (std::size_t m = 0; m < row.size(); ++m) s += row[m] * std::cos(2 * kPi * j * m / n);
  return s;
}

}  // namespace

TEST_CASE("kernel_value examples") {
  const double x[] = {0.3, 0.7};
  CHECK(kernel_value(CosineProcess{1.0, 2, false}, x, x) == doctest::Approx(2.0).epsilon(1e-15));
  const double a[] = {0.5}, b[] = {0.25};
  CHECK(std::abs(kernel_value(CosineProcess{1.0, 1, true}, a, b)) < 1e-15);
  const double c[] = {0.5, 0.5}, e[] = {0.25, 0.5};
  CHECK(kernel_value(CosineProcess{3.0, 2, true}, c, e) == doctest::Approx(1.5 * (0.0 + 1.0)));

  const double p[] = {0.4};
  CHECK(std::abs(kernel_value(BernoulliPolynomial{2.0, 1, 1'000'000}, p, p) - 1.0 / 12.0) < 1e-7);
  const double q[] = {0.15};
  CHECK(std::abs(kernel_value(BernoulliPolynomial{2.0, 1, 1'000'000}, p, q) - bernoulli2_closed(0.25)) < 1e-7);
  // d = 2 with varrho = 1: exponent 2 per coordinate, summed over coordinates.
  const double u[] = {0.1, 0.9}, v[] = {0.6, 0.3};
  CHECK(std::abs(kernel_value(BernoulliPolynomial{1.0, 2, 1'000'000}, u, v) -
                 (bernoulli2_closed(-0.5) + bernoulli2_closed(0.6))) < 2e-7);
}

TEST_CASE("kernel_value errors") {
  const double x[] = {0.5};
  CHECK_THROWS_AS(kernel_value(BernoulliPolynomial{1.0, 1, 10}, x, x), std::invalid_argument);
  CHECK_THROWS_AS(kernel_value(BernoulliPolynomial{2.0, 1, 0}, x, x), std::invalid_argument);
  CHECK_THROWS_AS(kernel_value(GridKernel{Eigen::MatrixXd::Identity(2, 2)}, x, x), std::invalid_argument);
  const double xy[] = {0.5, 0.5};
  CHECK_THROWS_AS(kernel_value(CosineProcess{1.0, 1, false}, xy, xy), std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{CosineProcess{-1.0, 1, false}}), std::invalid_argument);
}

TEST_CASE("zero kernel matrix") {
  const GridDesign g({3, 3});
  const KernelMatrix km = kernel_matrix(zero_kernel(), g);
  CHECK(km.values.rows() == 9);
  CHECK(km.values.isZero(0.0));
  CHECK(is_zero_kernel(zero_kernel()));
}

TEST_CASE("cosine kernel matrix is the scaled B block") {
  const GridDesign g({4});
  const KernelMatrix km = kernel_matrix(CosineProcess{2.5, 1, false}, g);
  for (int l = 0; l < 4; ++l) {
    for (int m = 0; m < 4; ++m) {
      CHECK(km.values(l, m) == doctest::Approx(2.5 * std::cos(2 * kPi * (l - m) / 4.0) / 4.0));
    }
  }
}

TEST_CASE("Bernoulli d=2 kernel matrix equals the weighted Kronecker sum") {
  const std::size_t nd = 3;
  const GridDesign g({nd, nd});
  const BernoulliPolynomial spec{1.0, 2, 1'000'000};  // varrho d = 2: closed form available
  const KernelMatrix km = kernel_matrix(spec, g);
  Eigen::MatrixXd A(nd, nd);
  for (std::size_t l = 0; l < nd; ++l) {
    for (std::size_t m = 0; m < nd; ++m) A(l, m) = bernoulli2_closed((double(l) - double(m)) / nd) / nd;
  }
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(nd, nd);
  const double w = std::pow(double(nd), 1.0 - 2.0);
  // coordinate 1 varies fastest, so it is the right-hand Kronecker factor
  const Eigen::MatrixXd expected = w * (Eigen::kroneckerProduct(one, A).eval() + Eigen::kroneckerProduct(A, one).eval());
  CHECK((km.values - expected).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((kronecker_axis_component(A, 2, 1) - w * Eigen::kroneckerProduct(one, A).eval()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((kronecker_axis_component(A, 2, 2) - w * Eigen::kroneckerProduct(A, one).eval()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kernel matrices are symmetric PSD") {
  const GridDesign g({6, 5});
  for (const KernelSpec& spec : {KernelSpec{CosineProcess{1.0, 2, false}}, KernelSpec{BernoulliPolynomial{1.5, 2, 1000}},
                                 KernelSpec{BernoulliPolynomial{0.6, 2, 1000}}}) {
    const KernelMatrix km = kernel_matrix(spec, g);
    CHECK((km.values - km.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double top = dense_max_eigenvalue(km.values);
    CHECK(dense_min_eigenvalue(km.values) >= -1e-8 * top);
    CHECK((covariance_matrix(spec, g) / 30.0 - km.values).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("dense limit") {
  CHECK_THROWS_AS(kernel_matrix(CosineProcess{}, GridDesign({101, 100}), 10'000), std::length_error);
  CHECK_THROWS_AS(covariance_matrix(CosineProcess{}, GridDesign({5}), 4), std::length_error);
}

TEST_CASE("circulant eigenvalues") {
  std::vector<double> id(7, 0.0);
  id[0] = 1.0;
  for (double ev : circulant_eigenvalues(id)) CHECK(ev == doctest::Approx(1.0));

  const std::vector<double> b4{1.0, 0.0, -1.0, 0.0};  // cos(2 pi m / 4)
  const auto ev = circulant_eigenvalues(b4);
  double top = -1;
  for (double e : ev) top = std::max(top, e);
  CHECK(top == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_THROWS_AS(circulant_eigenvalues(std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(circulant_eigenvalues(std::vector<double>{}), std::invalid_argument);

  const std::vector<double> row{0.3, 0.2, -0.1, 0.2};
  const Eigen::MatrixXd C = circulant_matrix(row);
  const auto spec = circulant_eigenvalues(row);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(spec[j] == doctest::Approx(direct_dft(row, j)).epsilon(1e-14));
    CHECK(C(1, (1 + j) % 4) == row[j]);
  }
}

TEST_CASE("Bernoulli eigenvalues: closed forms and symmetry") {
  CHECK(bernoulli_eigenvalues(2.0, 1, 1)[0] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(bernoulli_eigenvalues(1.0, 2, 1)[0] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  for (std::size_t nd : {8u, 13u, 64u}) {
    // exact spectrum of the varrho d = 2 block by direct DFT of its closed-form row
    std::vector<double> row(nd);
    for (std::size_t m = 0; m < nd; ++m) row[m] = bernoulli2_closed(double(m) / nd) / nd;
    const auto ev = bernoulli_eigenvalues(2.0, 1, nd);
    REQUIRE(ev.size() == nd);
    for (std::size_t j = 0; j < nd; ++j) {
      CHECK(std::abs(ev[j] - direct_dft(row, j)) < 1e-14);
      if (j > 0) CHECK(ev[j] == doctest::Approx(ev[nd - j]).epsilon(1e-13));
    }
    CHECK(ev[0] == doctest::Approx(2.0 * (kPi * kPi / 6.0) / std::pow(2 * kPi * nd, 2.0)).epsilon(1e-12));
  }
  for (double varrho : {1.2, 1.5, 3.0}) {
    const auto ev = bernoulli_eigenvalues(varrho, 1, 10);
    for (std::size_t j = 1; j < 10; ++j) CHECK(ev[j] == doctest::Approx(ev[10 - j]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bernoulli_eigenvalues(1.0, 1, 8), std::invalid_argument);
  CHECK_THROWS_AS(bernoulli_eigenvalues(2.0, 1, 0), std::invalid_argument);
}

TEST_CASE("Bernoulli circulant route agrees with the explicit eigenvalues") {
  const std::size_t nd = 8;
  const BernoulliPolynomial spec{2.0, 1, 5000};
  const auto dft = circulant_eigenvalues(axis_row(spec, nd));
  const auto formula = bernoulli_eigenvalues(2.0, 1, nd, 5000);
  for (std::size_t j = 0; j < nd; ++j) CHECK(std::abs(dft[j] - formula[j]) < 1e-10);
  // dropped frequencies k > k_max add at most 2 sum_{k>k_max} (2 pi k)^-2 < 2 / (4 pi^2 k_max)
  const auto exact = bernoulli_eigenvalues(2.0, 1, nd);
  for (std::size_t j = 0; j < nd; ++j) {
    CHECK(exact[j] >= formula[j]);
    CHECK(exact[j] - formula[j] < 2.0 / (4 * kPi * kPi * 5000));
  }
}

TEST_CASE("Bernoulli spectrum: zero mode decays, the top eigenvalue does not") {
  // lambda*_1 contains the k = 0 alias term (2 pi)^(-varrho d), so the
  // maximum tends to that constant while lambda*_0 ~ N_d^(-varrho d).
  std::vector<std::pair<double, double>> zero_mode;
  double top_1024 = 0.0;
  for (std::size_t nd = 8; nd <= 1024; nd *= 2) {
    const auto ev = bernoulli_eigenvalues(2.0, 1, nd);
    zero_mode.emplace_back(double(nd), ev[0]);
    double top = 0.0;
    for (double e : ev) top = std::max(top, e);
    if (nd == 1024) top_1024 = top;
  }
  CHECK(estimate_decay_rate(zero_mode).rate == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(top_1024 == doctest::Approx(1.0 / (4 * kPi * kPi)).epsilon(1e-5));
}

TEST_CASE("max_eigenvalue") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(25, 25) / 25.0;
  CHECK(max_eigenvalue(id).value == doctest::Approx(1.0 / 25.0).epsilon(1e-12));

  for (std::size_t nd : {4u, 8u, 16u, 32u}) {
    const auto km = kernel_matrix(CosineProcess{1.0, 1, false}, GridDesign({nd}));
    const MaxEigenvalue m = max_eigenvalue(km);
    CHECK(std::abs(m.value - 0.5) < 1e-9);
    CHECK(m.dense_value.has_value());
  }

  const std::size_t nd = 8;
  const BernoulliPolynomial spec{1.0, 2, 1'000'000};
  const auto km = kernel_matrix(spec, GridDesign({nd, nd}));
  const double dense = dense_max_eigenvalue(km.values);
  CHECK(max_eigenvalue(km).value == doctest::Approx(dense).epsilon(1e-9));
  CHECK(additive_max_eigenvalue(bernoulli_eigenvalues(1.0, 2, nd, 1'000'000), 2) ==
        doctest::Approx(dense).epsilon(1e-9));

  Eigen::MatrixXd close = Eigen::MatrixXd::Identity(40, 40);
  close(0, 0) = 1.0 + 1e-6;
  PowerIterationOptions opts;
  opts.max_iterations = 3;
  CHECK_THROWS_AS(max_eigenvalue(close, opts), NumericalError);
}

TEST_CASE("Kronecker max eigenvalue") {
  CHECK(kronecker_max_eigenvalue(Eigen::MatrixXd::Identity(5, 5), 3) == doctest::Approx(1.0));
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto row = axis_row(CosineProcess{1.0, d, false}, 6);
    CHECK(kronecker_max_eigenvalue(circulant_matrix(row), d) == doctest::Approx(0.5).epsilon(1e-12));
  }
  const std::size_t nd = 16;
  const Eigen::MatrixXd A = circulant_matrix(axis_row(BernoulliPolynomial{1.5, 2, 1'000'000}, nd));
  const double structured = kronecker_max_eigenvalue(A, 2);
  for (std::size_t axis : {1u, 2u}) {
    const double dense = dense_max_eigenvalue(kronecker_axis_component(A, 2, axis));
    CHECK(std::abs(structured - dense) <= 1e-9 * dense);
  }
}

TEST_CASE("decay rate estimation") {
  std::vector<std::pair<double, double>> flat{{4, 0.3}, {8, 0.3}, {16, 0.3}};
  CHECK(std::abs(estimate_decay_rate(flat).rate) < 1e-12);
  std::vector<std::pair<double, double>> pw;
  for (double n : {5.0, 10.0, 40.0, 100.0}) pw.emplace_back(n, std::pow(n, -1.5));
  const DecayFit fit = estimate_decay_rate(pw);
  CHECK(fit.rate == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit.std_error < 1e-10);
  CHECK(fit.points == 4);
  CHECK_THROWS_AS(estimate_decay_rate(std::vector<std::pair<double, double>>{{4, 1}, {8, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_decay_rate(std::vector<std::pair<double, double>>{{4, 1}, {4, 2}, {8, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_decay_rate(std::vector<std::pair<double, double>>{{4, 1}, {8, 0}, {16, 1}}),
                  std::invalid_argument);
}

TEST_CASE("spectrum sweeps") {
  const std::vector<std::size_t> counts{5, 10, 15, 20};
  const SpectrumReport cos = spectrum_sweep(CosineProcess{1.0, 1, false}, counts);
  REQUIRE(cos.rows.size() == 4);
  for (const auto& r : cos.rows) CHECK(r.lambda1 == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(cos.fit.has_value());
  CHECK(std::abs(cos.fit->rate) < 1e-9);

  // normalized d = 2 example: each axis carries 1/(2d), the sum tops out at 1/4
  const SpectrumReport cos2 = spectrum_sweep(CosineProcess{1.0, 2, true}, std::vector<std::size_t>{4, 6},
                                             SpectrumMethod::kDense);
  for (const auto& r : cos2.rows) CHECK(r.lambda1 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK_FALSE(cos2.fit.has_value());

  const std::vector<std::size_t> small{4, 6, 8};
  const BernoulliPolynomial b{1.0, 2, 1000};
  const SpectrumReport f = spectrum_sweep(b, small, SpectrumMethod::kFormula);
  const SpectrumReport p = spectrum_sweep(b, small, SpectrumMethod::kPower);
  const SpectrumReport d = spectrum_sweep(b, small, SpectrumMethod::kDense);
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(p.rows[i].lambda1 == doctest::Approx(f.rows[i].lambda1).epsilon(1e-9));
    CHECK(d.rows[i].lambda1 == doctest::Approx(f.rows[i].lambda1).epsilon(1e-9));
    CHECK(f.rows[i].n_total == small[i] * small[i]);
  }
  CHECK(parse_spectrum_method(to_string(SpectrumMethod::kPower)) == SpectrumMethod::kPower);
  CHECK_THROWS_AS(parse_spectrum_method("magic"), std::invalid_argument);
}
