#include "fdnn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fdnn/error.hpp"
#include "fdnn/io.hpp"

namespace fdnn {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_as(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("bad value '" + raw + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("bad boolean '" + raw + "' for key '" + key + "'");
}

std::vector<std::size_t> parse_dims_for(const std::string& key, const std::string& raw) {
  try {
    return parse_dims(trim(raw));
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad dims '" + raw + "' for key '" + key + "'");
  }
}

template <class T>
std::string join(const std::vector<T>& items, const std::string& sep, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += fmt(items[i]);
  }
  return out;
}

std::string dims_text(const std::vector<std::size_t>& dims) { return GridDesign(dims).to_string(); }
std::string b2s(bool b) { return b ? "true" : "false"; }

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FDNN_NUM(NAME, FIELD, T)                                                            \
  KeyDef {                                                                                  \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_as<T>(k, v); }, \
        [](const RunConfig& c) { return format_value(c.FIELD); }                            \
  }
#define FDNN_BOOL(NAME, FIELD)                                                               \
  KeyDef {                                                                                   \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_bool(k, v); }, \
        [](const RunConfig& c) { return b2s(c.FIELD); }                                      \
  }

std::string format_value(double v) { return format_double(v); }
std::string format_value(std::size_t v) { return std::to_string(v); }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"simulate.mean",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string id = trim(v);
         try {
           mean_from_id(id);
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
         c.simulate.mean = id;
       },
       [](const RunConfig& c) { return c.simulate.mean; }},
      {"simulate.dims",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.simulate.dims = parse_dims_for(k, v); },
       [](const RunConfig& c) { return dims_text(c.simulate.dims); }},
      FDNN_NUM("simulate.n", simulate.n, std::size_t),
      FDNN_NUM("simulate.sigma", simulate.sigma, double),
      {"simulate.kernel",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         if (t != "cosine" && t != "bernoulli" && t != "zero") {
           throw ConfigError("key '" + k + "': unknown kernel '" + v + "' (cosine, bernoulli, zero)");
         }
         c.simulate.kernel = t;
       },
       [](const RunConfig& c) { return c.simulate.kernel; }},
      FDNN_NUM("simulate.xi_var", simulate.xi_var, double),
      FDNN_BOOL("simulate.normalize_by_d", simulate.normalize_by_d),
      FDNN_NUM("simulate.varrho", simulate.varrho, double),
      FDNN_NUM("simulate.k_max", simulate.k_max, std::size_t),
      FDNN_NUM("simulate.seed", simulate.seed, std::uint64_t),
      FDNN_NUM("simulate.jobs", simulate.jobs, std::size_t),

      {"network.mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.network.mode = parse_architecture_mode(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
       },
       [](const RunConfig& c) { return to_string(c.network.mode); }},
      FDNN_NUM("network.layers", network.layers, std::size_t),
      {"network.width",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trim(v) == "auto") {
           c.network.width.reset();
         } else {
           c.network.width = parse_as<std::size_t>(k, v);
         }
       },
       [](const RunConfig& c) { return c.network.width ? std::to_string(*c.network.width) : std::string("auto"); }},
      FDNN_NUM("network.c_depth", network.constants.c_depth, double),
      FDNN_NUM("network.c_width", network.constants.c_width, double),
      FDNN_NUM("network.c_sparsity", network.constants.c_sparsity, double),
      FDNN_NUM("network.varrho", network.varrho, double),
      FDNN_NUM("network.theta", network.theta, double),
      {"network.norm_bound",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trim(v) == "auto") {
           c.network.norm_bound.reset();
         } else {
           c.network.norm_bound = parse_as<double>(k, v);
         }
       },
       [](const RunConfig& c) {
         return c.network.norm_bound ? format_double(*c.network.norm_bound) : std::string("auto");
       }},

      FDNN_NUM("train.epochs", train.epochs, std::size_t),
      FDNN_NUM("train.batch_size", train.batch_size, std::size_t),
      FDNN_NUM("train.learning_rate", train.learning_rate, double),
      FDNN_NUM("train.beta1", train.beta1, double),
      FDNN_NUM("train.beta2", train.beta2, double),
      FDNN_NUM("train.epsilon", train.epsilon, double),
      FDNN_NUM("train.l1_coeff", train.l1_coeff, double),
      FDNN_BOOL("train.constrained", train.constrained),
      FDNN_NUM("train.zero_threshold", train.zero_threshold, double),
      FDNN_NUM("train.seed", train.seed, std::uint64_t),
      {"train.optimizer",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.train.optimizer = parse_optimizer(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
       },
       [](const RunConfig& c) { return to_string(c.train.optimizer); }},
      {"train.init",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.train.init = parse_init_scheme(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.init == InitScheme::kHeNormal ? "he-normal" : "he-uniform");
       }},
      FDNN_BOOL("train.enforce_sparsity", train.enforce_sparsity),
      FDNN_NUM("train.sparse_finetune_epochs", train.sparse_finetune_epochs, std::size_t),

      {"experiment.name",
       [](RunConfig& c, const std::string&, const std::string& v) { c.experiment.name = trim(v); },
       [](const RunConfig& c) { return c.experiment.name; }},
      {"experiment.sigmas",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<double> out;
         for (const auto& item : split_list(v, ',')) out.push_back(parse_as<double>(k, item));
         c.experiment.sigmas = out;
       },
       [](const RunConfig& c) {
         return join<double>(c.experiment.sigmas, ",", [](const double& x) { return format_double(x); });
       }},
      {"experiment.dims",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<std::vector<std::size_t>> out;
         for (const auto& item : split_list(v, ';')) out.push_back(parse_dims_for(k, item));
         c.experiment.dims = out;
       },
       [](const RunConfig& c) {
         return join<std::vector<std::size_t>>(c.experiment.dims, ";", dims_text);
       }},
      {"experiment.ns",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<std::size_t> out;
         for (const auto& item : split_list(v, ',')) out.push_back(parse_as<std::size_t>(k, item));
         c.experiment.ns = out;
       },
       [](const RunConfig& c) {
         return join<std::size_t>(c.experiment.ns, ",", [](const std::size_t& x) { return std::to_string(x); });
       }},
      FDNN_NUM("experiment.reps", experiment.reps, std::size_t),
      FDNN_NUM("experiment.seed", experiment.seed, std::uint64_t),
      FDNN_NUM("experiment.jobs", experiment.jobs, std::size_t),
  };
  return table;
}

#undef FDNN_NUM
#undef FDNN_BOOL

const KeyDef& find_key(const std::string& key) {
  for (const auto& def : key_table()) {
    if (def.name == key) return def;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

// Library range checks report plain messages; prefix the section so the
// user can find the key.
template <class Fn>
void checked(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[" + section + "] " + e.what());
  }
}

}  // namespace

KernelSpec make_kernel(const SimulateSettings& s, std::size_t d) {
  if (s.kernel == "zero") return zero_kernel();
  if (s.kernel == "bernoulli") return BernoulliPolynomial{s.varrho, d, s.k_max};
  if (s.kernel == "cosine") return CosineProcess{s.xi_var, d, s.normalize_by_d};
  throw ConfigError("key 'simulate.kernel': unknown kernel '" + s.kernel + "'");
}

NoiseSpec make_noise(double sigma) {
  if (sigma == 0.0) return NoNoise{};
  return ConstantNoise{sigma};
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& def : key_table()) out.push_back(def.name);
  return out;
}

void set_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, key, value);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set_value(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string get_value(const RunConfig& config, const std::string& key) { return find_key(key).get(config); }

void load_ini(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' is outside any section");
    for (const auto& [key, node] : body) set_value(config, section + "." + key, node.data());
  }
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& def : key_table()) {
    const std::size_t dot = def.name.find('.');
    const std::string sec = def.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << def.name.substr(dot + 1) << " = " << def.get(config) << '\n';
  }
  return out.str();
}

void validate(const RunConfig& c, bool sweep) {
  const auto& s = c.simulate;
  checked("simulate", [&] {
    const GridDesign grid(s.dims);
    if (mean_dimension(mean_from_id(s.mean)) != grid.dim()) {
      throw std::invalid_argument("mean '" + s.mean + "' has dimension " +
                                  std::to_string(mean_dimension(mean_from_id(s.mean))) + " but dims " +
                                  grid.to_string() + " has " + std::to_string(grid.dim()));
    }
    if (s.n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(s.sigma >= 0.0) || !std::isfinite(s.sigma)) throw std::invalid_argument("sigma must be finite and >= 0");
    if (s.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    validate(make_kernel(s, grid.dim()));
  });
  checked("network", [&] {
    if (c.network.layers < 1) throw std::invalid_argument("layers must be >= 1");
    if (c.network.width && *c.network.width < 1) throw std::invalid_argument("width must be >= 1");
    const auto& k = c.network.constants;
    if (!(k.c_depth > 0 && k.c_width > 0 && k.c_sparsity > 0)) {
      throw std::invalid_argument("c_depth, c_width and c_sparsity must be > 0");
    }
    if (!(c.network.varrho >= 0.0)) throw std::invalid_argument("varrho must be >= 0");
    if (!(c.network.theta > 0.0)) throw std::invalid_argument("theta must be > 0");
    if (c.network.norm_bound && !(*c.network.norm_bound > 0.0)) throw std::invalid_argument("norm_bound must be > 0");
  });
  checked("train", [&] { validate(c.train, std::numeric_limits<std::size_t>::max()); });
  if (!sweep) return;
  checked("experiment", [&] {
    const auto& e = c.experiment;
    if (e.sigmas.empty() || e.dims.empty() || e.ns.empty()) {
      throw std::invalid_argument("sigmas, dims and ns must be nonempty");
    }
    for (double sigma : e.sigmas) {
      if (!(sigma >= 0.0)) throw std::invalid_argument("sigmas must be >= 0");
    }
    for (const auto& dims : e.dims) {
      if (GridDesign(dims).dim() != mean_dimension(mean_from_id(s.mean))) {
        throw std::invalid_argument("dims entry " + dims_text(dims) + " does not match mean '" + s.mean + "'");
      }
    }
    for (std::size_t n : e.ns) {
      if (n < 1) throw std::invalid_argument("ns entries must be >= 1");
    }
    if (e.reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (e.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  });
}

std::vector<std::string> preset_names() { return {"case1-2d", "case2-2d", "case3d"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.simulate.kernel = "cosine";
  c.simulate.xi_var = 1.0;
  c.simulate.normalize_by_d = false;
  c.experiment.sigmas = {1.0, 2.0};
  c.experiment.ns = {50, 100, 200};
  c.experiment.name = name;
  if (name == "case1-2d" || name == "case2-2d") {
    c.simulate.mean = name;
    c.simulate.dims = {15, 15};
    c.experiment.dims = {{15, 15}, {25, 25}};
    c.experiment.reps = 20;
  } else if (name == "case3d") {
    c.simulate.mean = name;
    c.simulate.dims = {20, 15, 10};
    c.experiment.dims = {{20, 15, 10}, {30, 15, 10}};
    c.experiment.reps = 5;
  } else {
    throw ConfigError("unknown preset '" + name + "' (case1-2d, case2-2d, case3d)");
  }
  // Practical protocol: three hidden layers, Adam, batch 32, L1 pressure.
  c.network.mode = ArchitectureMode::kPractical;
  c.network.layers = 3;
  c.network.constants.c_width = 6.0;
  c.train.epochs = 500;
  c.train.batch_size = 32;
  c.train.learning_rate = 5e-3;
  c.train.l1_coeff = 1e-5;
  c.train.optimizer = Optimizer::kAdam;
  return c;
}

}  // namespace fdnn
