#include "fdnn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "fdnn/config.hpp"
#include "fdnn/error.hpp"
#include "fdnn/evaluate.hpp"
#include "fdnn/io.hpp"

namespace fdnn::cli {
namespace {

struct Common {
  std::optional<std::string> config_file;
  std::optional<std::string> preset_name;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> reps;
};

void add_common(CLI::App* cmd, Common& c, bool with_jobs, bool with_reps) {
  cmd->add_option("--config", c.config_file, "INI config file");
  cmd->add_option("--preset", c.preset_name, "start from a named preset (case1-2d, case2-2d, case3d)");
  cmd->add_option("--set", c.overrides, "override a config key, section.key=value")->take_all();
  cmd->add_option("--seed", c.seed, "random seed");
  if (with_jobs) cmd->add_option("--jobs", c.jobs, "worker threads");
  if (with_reps) cmd->add_option("--reps", c.reps, "replications per cell");
}

RunConfig base_config(const Common& c) {
  RunConfig config = c.preset_name ? preset(*c.preset_name) : RunConfig{};
  if (c.config_file) load_ini(config, *c.config_file);
  return config;
}

void finish_config(RunConfig& config, const Common& c, bool sweep = false) {
  for (const auto& s : c.overrides) apply_override(config, s);
  validate(config, sweep);
}

template <class T>
void set_if(const std::optional<T>& value, RunConfig& config, const std::string& key) {
  if (!value) return;
  if constexpr (std::is_same_v<T, std::string>) {
    set_value(config, key, *value);
  } else if constexpr (std::is_floating_point_v<T>) {
    set_value(config, key, format_double(*value));
  } else {
    set_value(config, key, std::to_string(*value));
  }
}

fs::path output_path(const std::string& path) {
  fs::path p(path);
  const char* base = std::getenv("FDNN_OUTPUT_DIR");
  if (p.is_relative() && base && *base) p = fs::path(base) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

fs::path sibling(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

std::string widths_text(const Architecture& arch) {
  std::string out;
  for (std::size_t i = 0; i < arch.widths.size(); ++i) out += (i ? "," : "") + std::to_string(arch.widths[i]);
  return out;
}

std::string arch_summary(const Architecture& arch, ArchitectureMode mode) {
  std::ostringstream s;
  s << "mode=" << to_string(mode) << " L=" << arch.hidden_layers() << " width=" << arch.widths[1]
    << " widths=" << widths_text(arch) << " s=" << arch.sparsity << " F=" << format_double(arch.norm_bound)
    << " constrained=" << (arch.constrained ? "true" : "false");
  return s.str();
}

// Every subcommand's state, kept alive while CLI11 parses into it.
struct Options {
  Common common;
  std::string output;
  std::optional<std::string> mean;
  std::optional<std::string> dims;
  std::optional<std::size_t> n;
  std::optional<double> sigma;
  std::optional<std::string> kernel;

  std::string data;
  std::optional<std::string> report;
  std::optional<std::string> mode;
  std::optional<std::size_t> layers;
  std::optional<std::size_t> width;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> l1;
  std::optional<std::string> optimizer;
  std::optional<double> varrho;
  std::optional<double> theta;
  std::optional<double> norm_bound;

  std::string params;
  std::optional<std::string> dump;
  std::string format = "csv";

  std::string spec_kernel = "cosine";
  std::size_t spec_d = 1;
  double spec_varrho = 2.0;
  double spec_xi_var = 1.0;
  bool spec_normalize = false;
  std::optional<std::size_t> spec_k_max;
  std::vector<std::size_t> spec_nd;
  std::string spec_method = "formula";

  std::optional<std::string> preset_file;
  std::optional<std::string> out_dir;
  std::vector<double> filter_sigma;
  std::vector<std::size_t> filter_big_n;
  std::vector<std::size_t> filter_n;

  std::string input;
};

int cmd_simulate(Options& o, std::ostream& out) {
  RunConfig config = base_config(o.common);
  set_if(o.mean, config, "simulate.mean");
  set_if(o.dims, config, "simulate.dims");
  set_if(o.n, config, "simulate.n");
  set_if(o.sigma, config, "simulate.sigma");
  set_if(o.kernel, config, "simulate.kernel");
  set_if(o.common.seed, config, "simulate.seed");
  set_if(o.common.jobs, config, "simulate.jobs");
  finish_config(config, o.common);
  const auto& s = config.simulate;

  const GridDesign grid(s.dims);
  const KernelSpec kernel = make_kernel(s, grid.dim());
  const NoiseSpec noise = make_noise(s.sigma);
  FunctionalDataset data = simulate_dataset(s.n, grid, mean_from_id(s.mean), kernel, noise, s.seed, s.jobs);
  data.meta.mean_id = s.mean;
  const fs::path path = output_path(o.output);
  write_dataset(path, data);
  write_text(sibling(path, ".config.ini"), to_ini(config));
  out << "simulated n=" << s.n << " N=" << grid.size() << " dims=" << grid.to_string()
      << " sigma=" << format_double(s.sigma) << " seed=" << s.seed << " -> " << path.string() << '\n';
  return kExitOk;
}

int cmd_train(Options& o, std::ostream& out) {
  RunConfig config = base_config(o.common);
  set_if(o.mode, config, "network.mode");
  set_if(o.layers, config, "network.layers");
  set_if(o.width, config, "network.width");
  set_if(o.varrho, config, "network.varrho");
  set_if(o.theta, config, "network.theta");
  set_if(o.norm_bound, config, "network.norm_bound");
  set_if(o.epochs, config, "train.epochs");
  set_if(o.batch, config, "train.batch_size");
  set_if(o.lr, config, "train.learning_rate");
  set_if(o.l1, config, "train.l1_coeff");
  set_if(o.optimizer, config, "train.optimizer");
  set_if(o.common.seed, config, "train.seed");
  finish_config(config, o.common);

  DatasetHeader header;
  const Eigen::VectorXd ybar = read_pointwise_mean(o.data, &header);
  const GridDesign grid(header.dims);
  const Architecture arch = resolve_architecture(config.network, header.n, grid, ybar);
  const TrainConfig train = resolve_train_config(config.network, config.train);
  validate(train, grid.size());

  const fs::path path = output_path(o.output);
  const fs::path report_path = o.report ? output_path(*o.report) : sibling(path, ".report.csv");
  const std::string summary = arch_summary(arch, config.network.mode);
  write_text(sibling(path, ".config.ini"), to_ini(config));
  auto write_report = [&](const TrainReport& report) {
    std::ofstream csv(report_path);
    if (!csv) throw IoError("cannot create " + report_path.string());
    write_train_report_csv(csv, report, summary);
  };
  FitResult result;
  try {
    result = fit_targets(ybar, grid, arch, train);
  } catch (const TrainingDiverged& e) {
    write_report(e.report());
    throw;
  }
  write_report(result.report);
  const Network net{arch, result.params};
  write_network(path, net);
  out << "# " << summary << '\n';
  out << "trained n=" << header.n << " N=" << grid.size() << " final_risk=" << format_double(result.report.final_risk)
      << " nonzero=" << result.report.final_nonzero << " -> " << path.string() << '\n';
  if (arch.constrained) {
    const ClassCheck check = is_in_class(net, grid);
    out << "class_check=" << (check.passed() ? "pass" : "fail") << " nonzero=" << check.nonzero
        << " max_abs=" << format_double(check.max_abs) << " norm=" << format_double(check.empirical_norm) << '\n';
  }
  return kExitOk;
}

int cmd_eval(Options& o, std::ostream& out) {
  RunConfig config = base_config(o.common);
  set_if(o.mean, config, "simulate.mean");
  set_if(o.dims, config, "simulate.dims");
  for (const auto& s : o.common.overrides) apply_override(config, s);
  const Network net = read_network(o.params);
  const GridDesign grid(config.simulate.dims);
  const MeanFunction f0 = mean_from_id(config.simulate.mean);
  if (net.arch.input_dim() != grid.dim() || mean_dimension(f0) != grid.dim()) {
    throw ConfigError("dimension mismatch: network expects d=" + std::to_string(net.arch.input_dim()) +
                      ", mean '" + config.simulate.mean + "' d=" + std::to_string(mean_dimension(f0)) + ", grid " +
                      grid.to_string() + " d=" + std::to_string(grid.dim()));
  }
  const Eigen::VectorXd fhat = predict(net, grid);
  const Eigen::VectorXd truth = eval_mean_grid(f0, grid);
  out << format_double((fhat - truth).squaredNorm() / static_cast<double>(grid.size())) << '\n';
  if (o.dump) {
    const fs::path path = output_path(*o.dump);
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot create " + path.string());
    for (std::size_t k = 0; k < grid.dim(); ++k) csv << 'x' << k + 1 << ',';
    csv << "fhat,f0\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
      for (std::size_t k = 0; k < grid.dim(); ++k) csv << format_double(grid.coordinates()(k, j)) << ',';
      csv << format_double(fhat(j)) << ',' << format_double(truth(j)) << '\n';
    }
  }
  return kExitOk;
}

int cmd_spectrum(Options& o, std::ostream& out) {
  KernelSpec spec;
  if (o.spec_kernel == "cosine") {
    spec = CosineProcess{o.spec_xi_var, o.spec_d, o.spec_normalize};
  } else if (o.spec_kernel == "bernoulli") {
    BernoulliPolynomial b{o.spec_varrho, o.spec_d};
    if (o.spec_k_max) b.k_max = *o.spec_k_max;
    spec = b;
  } else {
    throw ConfigError("unknown kernel '" + o.spec_kernel + "' (cosine, bernoulli)");
  }
  validate(spec);
  if (o.spec_nd.empty()) throw ConfigError("--Nd needs at least one grid count");
  const SpectrumReport report = spectrum_sweep(spec, o.spec_nd, parse_spectrum_method(o.spec_method));
  if (o.output.empty()) {
    write_spectrum_csv(out, report);
    return kExitOk;
  }
  const fs::path path = output_path(o.output);
  std::ofstream csv(path);
  if (!csv) throw IoError("cannot create " + path.string());
  write_spectrum_csv(csv, report);
  std::ostringstream echo;
  echo << "[spectrum]\nkernel = " << o.spec_kernel << "\nd = " << o.spec_d
       << "\nvarrho = " << format_double(o.spec_varrho) << "\nxi_var = " << format_double(o.spec_xi_var)
       << "\nnormalize_by_d = " << (o.spec_normalize ? "true" : "false") << "\nk_max = "
       << (o.spec_k_max ? std::to_string(*o.spec_k_max) : std::to_string(BernoulliPolynomial{}.k_max))
       << "\nmethod = " << o.spec_method << "\nNd = ";
  for (std::size_t i = 0; i < o.spec_nd.size(); ++i) echo << (i ? "," : "") << o.spec_nd[i];
  echo << '\n';
  write_text(sibling(path, ".config.ini"), echo.str());
  write_spectrum_csv(out, report);
  return kExitOk;
}

using RecordKey = std::tuple<double, std::size_t, std::size_t, std::size_t>;

RecordKey key_of(const RiskRecord& r) { return {r.sigma, r.n_points, r.n, r.rep}; }

int cmd_experiment(Options& o, std::ostream& out, std::ostream& err) {
  if (!o.common.preset_name && !o.preset_file && !o.common.config_file) {
    throw ConfigError("experiment needs --preset or --preset-file");
  }
  RunConfig config = base_config(o.common);
  if (o.preset_file) load_ini(config, *o.preset_file);
  set_if(o.common.seed, config, "experiment.seed");
  set_if(o.common.jobs, config, "experiment.jobs");
  set_if(o.common.reps, config, "experiment.reps");
  finish_config(config, o.common, true);
  const auto& e = config.experiment;

  fs::path dir;
  if (o.out_dir) {
    dir = output_path(*o.out_dir);
  } else {
    dir = output_path("experiment-" + e.name);
  }
  fs::create_directories(dir);
  const fs::path records_path = dir / "records.csv";

  std::vector<RiskRecord> records;
  if (fs::exists(records_path)) {
    std::ifstream in(records_path);
    if (!in) throw IoError("cannot open " + records_path.string());
    records = read_records_csv(in);
  }
  std::set<RecordKey> done;
  for (const auto& r : records) done.insert(key_of(r));
  write_text(dir / "config.ini", to_ini(config));

  // Single writer: records are appended as replications finish, so an
  // interrupted sweep resumes from the last completed record.
  {
    std::ofstream init(records_path, std::ios::trunc);
    if (!init) throw IoError("cannot create " + records_path.string());
    write_records_csv(init, records);
  }
  std::ofstream append(records_path, std::ios::app);
  if (!append) throw IoError("cannot open " + records_path.string());

  auto selected = [](const auto& filter, const auto& value) {
    return filter.empty() || std::find(filter.begin(), filter.end(), value) != filter.end();
  };
  std::size_t cells = 0;
  const MeanFunction f0 = mean_from_id(config.simulate.mean);
  for (double sigma : e.sigmas) {
    if (!selected(o.filter_sigma, sigma)) continue;
    for (const auto& dims : e.dims) {
      const GridDesign grid(dims);
      if (!selected(o.filter_big_n, grid.size())) continue;
      for (std::size_t n : e.ns) {
        if (!selected(o.filter_n, n)) continue;
        ++cells;
        ExperimentCell cell{f0, make_kernel(config.simulate, grid.dim()), sigma, dims, n, config.train,
                            config.network};
        auto skip = [&](std::size_t rep) { return done.count({sigma, grid.size(), n, rep}) > 0; };
        auto on_record = [&](const RiskRecord& r) {
          std::ostringstream line;
          write_records_csv(line, {r});
          const std::string text = line.str();
          append << text.substr(text.find('\n') + 1) << std::flush;
          if (r.failed) {
            err << "replication failed: sigma=" << format_double(r.sigma) << " N=" << r.n_points << " n=" << r.n
                << " rep=" << r.rep << '\n';
          }
        };
        const auto fresh = run_replications(cell, e.reps, e.seed, e.jobs, skip, on_record);
        records.insert(records.end(), fresh.begin(), fresh.end());
      }
    }
  }
  append.close();
  if (cells == 0) throw ConfigError("sweep filters select no cells");

  std::sort(records.begin(), records.end(),
            [](const RiskRecord& a, const RiskRecord& b) { return key_of(a) < key_of(b); });
  {
    std::ofstream final_records(records_path, std::ios::trunc);
    if (!final_records) throw IoError("cannot write " + records_path.string());
    write_records_csv(final_records, records);
  }
  const std::vector<RiskRow> rows = aggregate(records);
  {
    std::ofstream table(dir / "table.csv");
    if (!table) throw IoError("cannot write table.csv");
    write_table_csv(table, rows);
  }
  write_table_csv(out, rows);
  for (const auto& row : rows) {
    if (row.failed > 0) {
      err << "warning: " << row.failed << " failed replication(s) excluded at sigma=" << format_double(row.sigma)
          << " N=" << row.n_points << " n=" << row.n << '\n';
    }
  }

  // Per (sigma, N) slope of log mean risk on log n.
  std::map<std::pair<double, std::size_t>, std::vector<RiskRow>> groups;
  for (const auto& row : rows) groups[{row.sigma, row.n_points}].push_back(row);
  std::ofstream rates(dir / "rates.csv");
  if (!rates) throw IoError("cannot write rates.csv");
  rates << "sigma,N,slope,std_error,target,groups\n";
  for (const auto& [key, group] : groups) {
    try {
      const RateDiagnostic r = rate_diagnostic(group, 0.0, config.network.theta);
      rates << format_double(key.first) << ',' << key.second << ',' << format_double(r.slope) << ','
            << format_double(r.std_error) << ',' << format_double(r.target) << ',' << r.groups << '\n';
      out << "# slope sigma=" << format_double(key.first) << " N=" << key.second << ": "
          << format_double(r.slope) << " (log factors ignored)\n";
    } catch (const std::invalid_argument&) {
      // fewer than three n values in this group
    }
  }
  return kExitOk;
}

int cmd_ingest(Options& o, std::ostream& out) {
  const std::vector<std::size_t> dims = parse_dims(o.dims.value_or(""));
  const GridDesign grid(dims);
  std::error_code ec;
  const std::uint64_t size = fs::file_size(o.input, ec);
  if (ec) throw IoError("cannot stat " + o.input);
  const std::uint64_t row_bytes = 8 * static_cast<std::uint64_t>(grid.size());
  std::size_t n = 0;
  if (o.n) {
    n = *o.n;
    if (size != row_bytes * n) {
      throw ConfigError("raw stack length mismatch: expected " + std::to_string(row_bytes * n) + " bytes (n=" +
                        std::to_string(n) + ", N=" + std::to_string(grid.size()) + "), found " +
                        std::to_string(size));
    }
  } else {
    if (size == 0 || size % row_bytes != 0) {
      throw ConfigError("raw stack length mismatch: " + std::to_string(size) + " bytes is not a positive multiple of " +
                        std::to_string(row_bytes) + " (8 x N, N=" + std::to_string(grid.size()) + ")");
    }
    n = size / row_bytes;
  }
  if (n == 0) throw ConfigError("raw stack has no subjects");
  std::ifstream in(o.input, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.input);
  DatasetMeta meta{"unknown", "unknown", "unknown", std::nan(""), 0};
  const fs::path path = output_path(o.output);
  DatasetWriter writer(path, dims, n, meta);
  std::vector<double> row(grid.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!read_le_doubles(in, row)) throw IoError(o.input + ": truncated at subject " + std::to_string(i));
    writer.write_row(row);
  }
  writer.finish();
  out << "ingested n=" << n << " N=" << grid.size() << " dims=" << grid.to_string() << " -> " << path.string()
      << '\n';
  return kExitOk;
}

int cmd_predict(Options& o, std::ostream& out) {
  const Network net = read_network(o.params);
  const GridDesign grid(parse_dims(o.dims.value_or("")));
  if (net.arch.input_dim() != grid.dim()) {
    throw ConfigError("dimension mismatch: network expects d=" + std::to_string(net.arch.input_dim()) + ", grid " +
                      grid.to_string() + " has d=" + std::to_string(grid.dim()));
  }
  const Eigen::VectorXd values = predict(net, grid);
  const fs::path path = output_path(o.output);
  if (o.format == "csv") {
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot create " + path.string());
    for (std::size_t k = 0; k < grid.dim(); ++k) csv << 'x' << k + 1 << ',';
    csv << "fhat\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
      for (std::size_t k = 0; k < grid.dim(); ++k) csv << format_double(grid.coordinates()(k, j)) << ',';
      csv << format_double(values(j)) << '\n';
    }
    out << "predicted " << grid.size() << " values on " << grid.to_string() << " -> " << path.string() << '\n';
    return kExitOk;
  }
  if (o.format != "pgm") throw ConfigError("unknown format '" + o.format + "' (csv, pgm)");
  // x1 runs along the width, x2 down the height; each remaining index is one
  // slice file. One global scale keeps slices comparable.
  const std::size_t width = grid.dims()[0];
  const std::size_t height = grid.dim() > 1 ? grid.dims()[1] : 1;
  const std::size_t slice = width * height;
  const std::size_t slices = grid.size() / slice;
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const auto pixels = to_gray(std::span<const double>(values.data(), grid.size()), lo, hi);
  std::vector<fs::path> files;
  if (slices == 1) {
    files.push_back(path);
  } else {
    const std::string stem = (path.parent_path() / path.stem()).string();
    for (std::size_t z = 0; z < slices; ++z) {
      std::ostringstream name;
      name << stem << "_slice" << z + 1 << ".pgm";
      files.emplace_back(name.str());
    }
  }
  for (std::size_t z = 0; z < slices; ++z) {
    write_pgm(files[z], width, height, std::span<const std::uint8_t>(pixels.data() + z * slice, slice));
  }
  std::ostringstream scale;
  scale << "min=" << format_double(lo) << "\nmax=" << format_double(hi) << "\nslices=" << slices
        << "\n# value = min + (max - min) * byte / 255\n";
  write_text(sibling(path, ".scale.txt"), scale.str());
  out << "predicted " << grid.size() << " values on " << grid.to_string() << " -> " << slices << " PGM file(s)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fdnn: mean-function estimation for functional data with sparse ReLU networks"};
  app.require_subcommand(1);
  auto opts = std::make_unique<Options>();
  Options& o = *opts;

  auto* sim = app.add_subcommand("simulate", "simulate a functional dataset");
  add_common(sim, o.common, true, false);
  sim->add_option("-o,--output", o.output, "dataset file")->required();
  sim->add_option("--mean", o.mean, "mean function id");
  sim->add_option("--dims", o.dims, "grid counts, e.g. 15x15");
  sim->add_option("--n", o.n, "number of subjects");
  sim->add_option("--sigma", o.sigma, "measurement error sd");
  sim->add_option("--kernel", o.kernel, "cosine, bernoulli or zero");

  auto* train = app.add_subcommand("train", "fit a network to a dataset's pointwise mean");
  add_common(train, o.common, false, false);
  train->add_option("--data", o.data, "dataset file")->required();
  train->add_option("-o,--output", o.output, "params file")->required();
  train->add_option("--report", o.report, "training report CSV (default <output>.report.csv)");
  train->add_option("--mode", o.mode, "practical or theory");
  train->add_option("--layers", o.layers, "hidden layers (practical mode)");
  train->add_option("--width", o.width, "hidden width override");
  train->add_option("--epochs", o.epochs);
  train->add_option("--batch", o.batch);
  train->add_option("--lr", o.lr);
  train->add_option("--l1", o.l1);
  train->add_option("--optimizer", o.optimizer, "adam or sgd");
  train->add_option("--varrho", o.varrho, "kernel decay exponent used by the selector");
  train->add_option("--theta", o.theta, "smoothness exponent used by the selector");
  train->add_option("--norm-bound", o.norm_bound, "F (default max(1, max |Ybar|))");

  auto* eval = app.add_subcommand("eval", "empirical L2 risk of a fitted network");
  add_common(eval, o.common, false, false);
  eval->add_option("--params", o.params, "params file")->required();
  eval->add_option("--mean", o.mean, "true mean function id");
  eval->add_option("--dims", o.dims, "grid counts");
  eval->add_option("--dump", o.dump, "per-point CSV of coordinates, fhat, f0");

  auto* spectrum = app.add_subcommand("spectrum", "largest kernel-matrix eigenvalue over grid sizes");
  spectrum->add_option("--kernel", o.spec_kernel, "cosine or bernoulli");
  spectrum->add_option("--d", o.spec_d, "dimension");
  spectrum->add_option("--varrho", o.spec_varrho, "Bernoulli exponent");
  spectrum->add_option("--xi-var", o.spec_xi_var, "cosine process coefficient variance");
  spectrum->add_flag("--normalize", o.spec_normalize, "scale the cosine kernel by 1/d");
  spectrum->add_option("--k-max", o.spec_k_max, "Bernoulli frequency cutoff");
  spectrum->add_option("--Nd", o.spec_nd, "points per axis, e.g. 8,16,32")->delimiter(',')->required();
  spectrum->add_option("--method", o.spec_method, "formula, power or dense");
  spectrum->add_option("-o,--output", o.output, "CSV file (default: standard output only)");

  auto* experiment = app.add_subcommand("experiment", "Monte Carlo risk study over a preset sweep");
  add_common(experiment, o.common, true, true);
  experiment->add_option("--preset-file", o.preset_file, "INI preset");
  experiment->add_option("--out-dir", o.out_dir, "output directory");
  experiment->add_option("--only-sigma", o.filter_sigma, "restrict sigma values")->delimiter(',');
  experiment->add_option("--only-N", o.filter_big_n, "restrict total grid sizes")->delimiter(',');
  experiment->add_option("--only-n", o.filter_n, "restrict sample sizes")->delimiter(',');

  auto* ingest = app.add_subcommand("ingest", "wrap a raw float64 stack as a dataset");
  ingest->add_option("--input", o.input, "raw file, subject-major little-endian float64")->required();
  ingest->add_option("--dims", o.dims, "grid counts")->required();
  ingest->add_option("--n", o.n, "subjects (inferred from the length when omitted)");
  ingest->add_option("-o,--output", o.output, "dataset file")->required();

  auto* pred = app.add_subcommand("predict", "evaluate a fitted network on a new grid");
  pred->add_option("--params", o.params, "params file")->required();
  pred->add_option("--dims", o.dims, "grid counts")->required();
  pred->add_option("-o,--output", o.output, "output file")->required();
  pred->add_option("--format", o.format, "csv or pgm");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (spectrum->parsed()) return cmd_spectrum(o, out);
    if (experiment->parsed()) return cmd_experiment(o, out, err);
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (pred->parsed()) return cmd_predict(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::length_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace fdnn::cli
