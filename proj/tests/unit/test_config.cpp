#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fdnn/config.hpp"
#include "fdnn/error.hpp"

using namespace fdnn;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& text) {
    path = fs::temp_directory_path() / ("fdnn-cfg-" + std::to_string(std::random_device{}()) + ".ini");
    std::ofstream(path) << text;
  }
  ~TempFile() { fs::remove(path); }
};

std::string error_of(RunConfig& c, const std::string& assignment) {
  try {
    apply_override(c, assignment);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("ini file with overrides") {
  TempFile file(
      "; comment\n[simulate]\nmean = case1-2d\ndims = 25x25\nsigma = 2\n\n[train]\nepochs = 40\n"
      "learning_rate = 0.01\n[network]\nwidth = 12\nnorm_bound = 3\n[experiment]\nns = 50,100\n"
      "dims = 15x15;20x15x10\n");
  RunConfig c;
  load_ini(c, file.path);
  CHECK(c.simulate.mean == "case1-2d");
  CHECK(c.simulate.dims == std::vector<std::size_t>{25, 25});
  CHECK(c.simulate.sigma == 2.0);
  CHECK(c.train.epochs == 40);
  CHECK(c.train.learning_rate == 0.01);
  CHECK(c.network.width == 12u);
  CHECK(c.network.norm_bound == 3.0);
  CHECK(c.experiment.ns == std::vector<std::size_t>{50, 100});
  REQUIRE(c.experiment.dims.size() == 2);
  CHECK(c.experiment.dims[1] == std::vector<std::size_t>{20, 15, 10});
  CHECK(c.train.batch_size == 32);

  apply_override(c, "train.epochs=7");
  apply_override(c, "network.width=auto");
  apply_override(c, "network.mode=theory");
  apply_override(c, "train.constrained=true");
  CHECK(c.train.epochs == 7);
  CHECK_FALSE(c.network.width.has_value());
  CHECK(c.network.mode == ArchitectureMode::kTheory);
  CHECK(c.train.constrained);
  CHECK(get_value(c, "train.epochs") == "7");
  CHECK(get_value(c, "simulate.dims") == "25x25");
}

TEST_CASE("errors name the key") {
  RunConfig c;
  CHECK(error_of(c, "train.epochz=3").find("train.epochz") != std::string::npos);
  CHECK(error_of(c, "train.epochs=many").find("train.epochs") != std::string::npos);
  CHECK(error_of(c, "train.constrained=maybe").find("train.constrained") != std::string::npos);
  CHECK(error_of(c, "simulate.dims=4x").find("simulate.dims") != std::string::npos);
  CHECK_FALSE(error_of(c, "no-equals-sign").empty());

  TempFile unknown("[train]\nspeed = 3\n");
  try {
    load_ini(c, unknown.path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.speed") != std::string::npos);
  }
  TempFile broken("[train\nepochs = 3\n");
  CHECK_THROWS_AS(load_ini(c, broken.path), ConfigError);
  CHECK_THROWS_AS(load_ini(c, "/nonexistent/fdnn.ini"), IoError);
}

TEST_CASE("validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.train.batch_size = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.simulate.sigma = -1;
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("[simulate]") != std::string::npos);
  }
  c = RunConfig{};
  c.simulate.kernel = "matern";
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("echo reloads to the same configuration") {
  RunConfig c = preset("case3d");
  apply_override(c, "network.width=9");
  apply_override(c, "train.learning_rate=0.0031");
  const std::string text = to_ini(c);
  TempFile file(text);
  RunConfig back;
  load_ini(back, file.path);
  CHECK(to_ini(back) == text);
  for (const auto& key : config_keys()) CHECK(get_value(back, key) == get_value(c, key));
}

TEST_CASE("presets") {
  CHECK(preset_names() == std::vector<std::string>{"case1-2d", "case2-2d", "case3d"});
  const RunConfig a = preset("case2-2d");
  CHECK(a.simulate.mean == "case2-2d");
  CHECK(a.experiment.sigmas == std::vector<double>{1, 2});
  CHECK(a.experiment.ns == std::vector<std::size_t>{50, 100, 200});
  CHECK(a.experiment.dims == std::vector<std::vector<std::size_t>>{{15, 15}, {25, 25}});
  CHECK(a.experiment.reps == 20);
  const RunConfig b = preset("case3d");
  CHECK(b.experiment.dims == std::vector<std::vector<std::size_t>>{{20, 15, 10}, {30, 15, 10}});
  CHECK(b.experiment.reps == 5);
  for (const auto& name : preset_names()) CHECK_NOTHROW(validate(preset(name)));
  CHECK_THROWS_AS(preset("case4"), ConfigError);
}

TEST_CASE("kernel and noise factories") {
  SimulateSettings s;
  CHECK(std::holds_alternative<CosineProcess>(make_kernel(s, 2)));
  s.kernel = "bernoulli";
  CHECK(std::get<BernoulliPolynomial>(make_kernel(s, 3)).d == 3);
  s.kernel = "zero";
  CHECK(is_zero_kernel(make_kernel(s, 2)));
  CHECK(std::holds_alternative<NoNoise>(make_noise(0.0)));
  CHECK(std::get<ConstantNoise>(make_noise(2.0)).sigma == 2.0);
}

TEST_CASE("experiment section is checked only for sweeps") {
  RunConfig c;
  c.simulate.mean = "case3d";
  c.simulate.dims = {4, 4, 4};
  CHECK_NOTHROW(validate(c, false));
  CHECK_THROWS_AS(validate(c), ConfigError);
}
