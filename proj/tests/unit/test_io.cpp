#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdnn/error.hpp"
#include "fdnn/io.hpp"

using namespace fdnn;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fdnn-io-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

FunctionalDataset sample_dataset() {
  const GridDesign g({5, 3});
  FunctionalDataset ds = simulate_dataset(4, g, Case2Mean{}, CosineProcess{1.0, 2, false}, ConstantNoise{1.0}, 9);
  ds.meta = DatasetMeta{"case2-2d", "cosine", "constant:1", 1.0, 9};
  return ds;
}

}  // namespace

TEST_CASE("fnv1a reference values") {
  const std::string empty;
  CHECK(fnv1a({}) == 0xcbf29ce484222325ULL);
  const std::uint8_t a[] = {'a'};
  CHECK(fnv1a(a) == 0xaf63dc4c8601ec8cULL);
  const std::string foobar = "foobar";
  CHECK(fnv1a({reinterpret_cast<const std::uint8_t*>(foobar.data()), foobar.size()}) == 0x85944171f73967e8ULL);
}

TEST_CASE("dataset round trip") {
  TempDir tmp;
  const FunctionalDataset ds = sample_dataset();
  const fs::path file = tmp.path / "d.bin";
  write_dataset(file, ds);
  // 8 magic + 4 + 4 + 2*8 + 8 + 8 + meta + 8 checksum + 4*15*8 payload
  const std::string meta = encode_meta(ds.meta);
  CHECK(fs::file_size(file) == 56 + meta.size() + 480);

  const FunctionalDataset back = read_dataset(file);
  CHECK(back.grid.dims() == ds.grid.dims());
  CHECK(back.y == ds.y);
  CHECK(back.meta.mean_id == "case2-2d");
  CHECK(back.meta.seed == 9);
  CHECK(back.meta.sigma == 1.0);

  DatasetHeader header;
  const Eigen::VectorXd mean = read_pointwise_mean(file, &header);
  CHECK(header.n == 4);
  CHECK(header.points() == 15);
  CHECK((mean - pointwise_mean(ds)).cwiseAbs().maxCoeff() < 1e-15);

  DatasetReader reader(file);
  std::vector<double> row(15);
  std::size_t rows = 0;
  while (reader.next_row(row)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("dataset corruption is detected") {
  TempDir tmp;
  const fs::path file = tmp.path / "d.bin";
  write_dataset(file, sample_dataset());
  std::vector<std::uint8_t> bytes = read_bytes(file);

  auto bad = bytes;
  bad[20] ^= 1;  // inside dims
  write_bytes(tmp.path / "flip.bin", bad);
  CHECK_THROWS_AS(read_dataset(tmp.path / "flip.bin"), IoError);

  bad = bytes;
  bad.pop_back();
  write_bytes(tmp.path / "short.bin", bad);
  CHECK_THROWS_AS(read_dataset(tmp.path / "short.bin"), IoError);

  bad = bytes;
  bad.push_back(0);
  write_bytes(tmp.path / "long.bin", bad);
  CHECK_THROWS_AS(read_dataset_header(tmp.path / "long.bin"), IoError);

  bad = bytes;
  bad[0] = 'X';
  write_bytes(tmp.path / "magic.bin", bad);
  CHECK_THROWS_AS(read_dataset(tmp.path / "magic.bin"), IoError);

  CHECK_THROWS_AS(read_dataset(tmp.path / "missing.bin"), IoError);
}

TEST_CASE("writer enforces the row count") {
  TempDir tmp;
  DatasetWriter w(tmp.path / "w.bin", {2, 2}, 2, {});
  const double row[] = {1, 2, 3, 4};
  w.write_row(row);
  const double wrong[] = {1, 2};
  CHECK_THROWS_AS(w.write_row(wrong), std::invalid_argument);
  CHECK_THROWS_AS(w.finish(), IoError);
}

TEST_CASE("metadata text") {
  const DatasetMeta meta{"identity:2", "bernoulli(varrho=2)", "none", 0.0, 18446744073709551615ULL};
  const DatasetMeta back = decode_meta(encode_meta(meta));
  CHECK(back.mean_id == meta.mean_id);
  CHECK(back.kernel == meta.kernel);
  CHECK(back.noise == "none");
  CHECK(back.seed == meta.seed);
}

TEST_CASE("network round trip") {
  Architecture arch{{2, 5, 4, 1}, 17, 2.5, true};
  Rng rng(4);
  Network net{arch, init_params(arch, InitScheme::kHeUniform, rng)};
  net.params.shifts[1](2) = -0.125;
  const auto bytes = encode_network(net);
  const Network back = decode_network(bytes);
  CHECK(back.arch.widths == arch.widths);
  CHECK(back.arch.sparsity == 17);
  CHECK(back.arch.norm_bound == 2.5);
  CHECK(back.arch.constrained);
  for (std::size_t l = 0; l < 3; ++l) CHECK(back.params.weights[l] == net.params.weights[l]);
  CHECK(back.params.shifts[1] == net.params.shifts[1]);
  CHECK(encode_network(back) == bytes);

  auto bad = bytes;
  bad[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode_network(bad), IoError);
  CHECK_THROWS_AS(decode_network(std::span(bytes).first(bytes.size() - 1)), IoError);

  TempDir tmp;
  write_network(tmp.path / "p.bin", net);
  CHECK(read_bytes(tmp.path / "p.bin") == bytes);
  CHECK(read_network(tmp.path / "p.bin").params.weights[2] == net.params.weights[2]);
}

TEST_CASE("shortest doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0731}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("records csv") {
  RiskRecord a;
  a.sigma = 1;
  a.n_points = 225;
  a.n = 50;
  a.rep = 3;
  a.seed = 123456789012345ULL;
  a.risk = 0.0731;
  a.seconds = 1.5;
  RiskRecord b = a;
  b.rep = 4;
  b.failed = true;
  std::stringstream ss;
  write_records_csv(ss, {a, b});
  const std::string text = ss.str();
  CHECK(text.rfind("sigma,N,n,rep,seed,risk,seconds\n", 0) == 0);
  CHECK(text.find("1,225,50,3,123456789012345,0.0731,1.5\n") != std::string::npos);
  CHECK(text.find(",failed,") != std::string::npos);
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].risk == 0.0731);
  CHECK(back[0].seed == a.seed);
  CHECK_FALSE(back[0].failed);
  CHECK(back[1].failed);

  std::stringstream broken("sigma,N,n,rep,seed,risk,seconds\n1,2,x\n");
  CHECK_THROWS_AS(read_records_csv(broken), IoError);
  std::stringstream header("a,b\n");
  CHECK_THROWS_AS(read_records_csv(header), IoError);
}

TEST_CASE("table and train report csv") {
  RiskRow row;
  row.sigma = 2;
  row.n_points = 625;
  row.n = 100;
  row.reps = 20;
  row.mean_risk = 0.25;
  row.sd_risk = 0.125;
  std::stringstream t;
  write_table_csv(t, {row});
  CHECK(t.str() == "sigma,N,n,reps,mean_risk,sd_risk\n2,625,100,20,0.25,0.125\n");

  TrainReport report;
  report.data_loss = {1.0, 0.5};
  report.l1_loss = {0.01, 0.02};
  report.finetune_data_loss = {0.4};
  std::stringstream r;
  write_train_report_csv(r, report, "mode=practical");
  const std::string text = r.str();
  CHECK(text.rfind("# mode=practical\nepoch,data_loss,l1_loss,phase\n1,1,0.01,main\n2,0.5,0.02,main\n", 0) == 0);
  CHECK(text.find(",finetune\n") != std::string::npos);
  CHECK(text.find("# final_risk=") != std::string::npos);
}

TEST_CASE("grayscale images") {
  const double v[] = {-1.0, 0.0, 1.0};
  CHECK(to_gray(v, -1, 1) == std::vector<std::uint8_t>{0, 128, 255});
  const double flat[] = {3.0, 3.0};
  CHECK(to_gray(flat, 3, 3) == std::vector<std::uint8_t>{0, 0});
  TempDir tmp;
  const std::vector<std::uint8_t> px(6, 7);
  write_pgm(tmp.path / "a.pgm", 3, 2, px);
  const auto bytes = read_bytes(tmp.path / "a.pgm");
  CHECK(std::string(bytes.begin(), bytes.begin() + 11) == "P5 3 2 255\n");
  CHECK(bytes.size() == 17);
  CHECK_THROWS_AS(write_pgm(tmp.path / "b.pgm", 4, 2, px), std::invalid_argument);
}
