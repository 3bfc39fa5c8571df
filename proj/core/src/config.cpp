#include "fedphd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fedphd {

std::string mode_name(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::kFedPhd: return "fedphd";
    case ExperimentMode::kFedPhdOneShot: return "fedphd_os";
    case ExperimentMode::kFedAvgBaseline: return "fedavg_baseline";
    case ExperimentMode::kRandomSelection: return "random_selection";
  }
  return "fedphd";
}

ExperimentMode mode_from_name(const std::string& name) {
  if (name == "fedphd") return ExperimentMode::kFedPhd;
  if (name == "fedphd_os") return ExperimentMode::kFedPhdOneShot;
  if (name == "fedavg_baseline") return ExperimentMode::kFedAvgBaseline;
  if (name == "random_selection") return ExperimentMode::kRandomSelection;
  throw ConfigError("config key 'mode': unknown mode '" + name + "'");
}

namespace {

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return text.substr(begin, end - begin);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" +
                      value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" +
                      value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected real, got '" + value +
                      "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" +
                    value + "'");
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (out.empty()) {
    throw ConfigError("config key '" + key + "': expected comma-separated ints");
  }
  return out;
}

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

void ExperimentConfig::validate() {
  // Mode constraints first; they rewrite dependent fields.
  switch (mode) {
    case ExperimentMode::kFedAvgBaseline:
      edges = 1;
      hyper.a = 0.0;
      hyper.b = 0.0;
      hyper.r_e = hyper.r_g;
      break;
    case ExperimentMode::kFedPhdOneShot:
      hyper.os_mode = true;
      hyper.sparse_rounds = 0;
      break;
    case ExperimentMode::kFedPhd:
    case ExperimentMode::kRandomSelection:
      hyper.os_mode = false;
      break;
  }

  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
  };
  if (clients < 1) fail("N", "must be >= 1");
  if (edges < 1) fail("N_e", "must be >= 1");
  if (classes < 2) fail("K", "must be >= 2");
  if (classes_per_client < 1 || classes_per_client > classes) {
    fail("classes_per_client", "must lie in [1, K]");
  }
  if (n_per_class < 1) fail("n_per_class", "must be >= 1");
  if (!(cov_scale > 0.0)) fail("cov_scale", "must be positive");
  if (schedule_steps < 1) fail("T", "must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail("beta_start", "need 0 < beta_start <= beta_end < 1");
  }
  if (data_dim < 1) fail("data_dim", "must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    fail("time_embed_dim", "must be positive and even");
  }
  for (int h : hidden_widths) {
    if (h < 1) fail("hidden", "widths must be >= 1");
  }
  if (d_e < 0.0) fail("d_e", "must be >= 0");
  if (d_c < 0.0) fail("d_c", "must be >= 0");
  if (eval_samples < 1) fail("eval_samples", "must be >= 1");
  if (eval_ddim_steps < 1 || eval_ddim_steps > schedule_steps) {
    fail("eval_ddim_steps", "must lie in [1, T]");
  }
  if (eval_projections < 1) fail("eval_projections", "must be >= 1");

  try {
    hyper.validate();
  } catch (const ConfigError& err) {
    // Re-map to the config key vocabulary.
    std::string what = err.what();
    if (what.find("r_e") != std::string::npos) fail("r_e", "must be <= r_g");
    if (what.find("sparse_rounds") != std::string::npos) {
      fail("R_s", "must be a multiple of r_g (pruning lands on a cloud round)");
    }
    throw;
  }
}

SelectionPolicy ExperimentConfig::selection_policy() const {
  switch (mode) {
    case ExperimentMode::kRandomSelection:
      return SelectionPolicy::kUniformRandom;
    case ExperimentMode::kFedAvgBaseline:
      return SelectionPolicy::kUniformRandom;  // single edge; draw unused
    default:
      return SelectionPolicy::kHomogeneityAware;
  }
}

ProtocolConfig ExperimentConfig::protocol_config() const {
  ProtocolConfig proto;
  proto.hyper = hyper;
  proto.denoiser =
      DenoiserConfig{data_dim, hidden_widths, time_embed_dim};
  proto.selection = selection_policy();
  proto.edge_count = edges;
  proto.schedule_steps = schedule_steps;
  proto.beta_start = beta_start;
  proto.beta_end = beta_end;
  proto.d_e = d_e;
  proto.d_c = d_c;
  proto.proto_seed = seed_proto;
  return proto;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::stringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": empty key");
    }

    if (key == "mode") {
      config.mode = mode_from_name(value);
    } else if (key == "N") {
      config.clients = static_cast<int>(parse_int(key, value));
    } else if (key == "N_e") {
      config.edges = static_cast<int>(parse_int(key, value));
    } else if (key == "K") {
      config.classes = static_cast<int>(parse_int(key, value));
    } else if (key == "classes_per_client") {
      config.classes_per_client = static_cast<int>(parse_int(key, value));
    } else if (key == "n_per_class") {
      config.n_per_class = static_cast<int>(parse_int(key, value));
    } else if (key == "cov_scale") {
      config.cov_scale = parse_real(key, value);
    } else if (key == "a") {
      config.hyper.a = parse_real(key, value);
    } else if (key == "b") {
      config.hyper.b = parse_real(key, value);
    } else if (key == "r_e") {
      config.hyper.r_e = static_cast<int>(parse_int(key, value));
    } else if (key == "r_g") {
      config.hyper.r_g = static_cast<int>(parse_int(key, value));
    } else if (key == "R") {
      config.hyper.rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "R_s") {
      config.hyper.sparse_rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "E") {
      config.hyper.local_epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "eta") {
      config.hyper.eta = parse_real(key, value);
    } else if (key == "s_p") {
      config.hyper.s_p = parse_real(key, value);
    } else if (key == "lambda0") {
      config.hyper.lambda0 = parse_real(key, value);
    } else if (key == "kappa") {
      config.hyper.kappa = parse_real(key, value);
    } else if (key == "batch_size") {
      config.hyper.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "T") {
      config.schedule_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "beta_start") {
      config.beta_start = parse_real(key, value);
    } else if (key == "beta_end") {
      config.beta_end = parse_real(key, value);
    } else if (key == "data_dim") {
      config.data_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "hidden") {
      config.hidden_widths = parse_int_list(key, value);
    } else if (key == "time_embed_dim") {
      config.time_embed_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "d_e") {
      config.d_e = parse_real(key, value);
    } else if (key == "d_c") {
      config.d_c = parse_real(key, value);
    } else if (key == "target") {
      if (value == "uniform") {
        config.target_from_global_counts = false;
      } else if (value == "global") {
        config.target_from_global_counts = true;
      } else {
        throw ConfigError("config key 'target': expected uniform or global");
      }
    } else if (key == "eval_samples") {
      config.eval_samples = static_cast<int>(parse_int(key, value));
    } else if (key == "eval_ddim_steps") {
      config.eval_ddim_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "eval_projections") {
      config.eval_projections = static_cast<int>(parse_int(key, value));
    } else if (key == "seed_data") {
      config.seed_data = parse_u64(key, value);
    } else if (key == "seed_proto") {
      config.seed_proto = parse_u64(key, value);
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "strict") {
      config.strict_determinism = parse_bool(key, value);
    } else {
      throw ConfigError("config key '" + key + "': unknown key");
    }
  }
  config.validate();
  return config;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "mode = " << mode_name(config.mode) << "\n";
  out << "N = " << config.clients << "\n";
  out << "N_e = " << config.edges << "\n";
  out << "K = " << config.classes << "\n";
  out << "classes_per_client = " << config.classes_per_client << "\n";
  out << "n_per_class = " << config.n_per_class << "\n";
  out << "cov_scale = " << format_real(config.cov_scale) << "\n";
  out << "a = " << format_real(config.hyper.a) << "\n";
  out << "b = " << format_real(config.hyper.b) << "\n";
  out << "r_e = " << config.hyper.r_e << "\n";
  out << "r_g = " << config.hyper.r_g << "\n";
  out << "R = " << config.hyper.rounds << "\n";
  out << "R_s = " << config.hyper.sparse_rounds << "\n";
  out << "E = " << config.hyper.local_epochs << "\n";
  out << "eta = " << format_real(config.hyper.eta) << "\n";
  out << "s_p = " << format_real(config.hyper.s_p) << "\n";
  out << "lambda0 = " << format_real(config.hyper.lambda0) << "\n";
  out << "kappa = " << format_real(config.hyper.kappa) << "\n";
  out << "batch_size = " << config.hyper.batch_size << "\n";
  out << "T = " << config.schedule_steps << "\n";
  out << "beta_start = " << format_real(config.beta_start) << "\n";
  out << "beta_end = " << format_real(config.beta_end) << "\n";
  out << "data_dim = " << config.data_dim << "\n";
  out << "hidden = ";
  for (std::size_t i = 0; i < config.hidden_widths.size(); ++i) {
    if (i > 0) out << ",";
    out << config.hidden_widths[i];
  }
  out << "\n";
  out << "time_embed_dim = " << config.time_embed_dim << "\n";
  out << "d_e = " << format_real(config.d_e) << "\n";
  out << "d_c = " << format_real(config.d_c) << "\n";
  out << "target = " << (config.target_from_global_counts ? "global" : "uniform")
      << "\n";
  out << "eval_samples = " << config.eval_samples << "\n";
  out << "eval_ddim_steps = " << config.eval_ddim_steps << "\n";
  out << "eval_projections = " << config.eval_projections << "\n";
  out << "seed_data = " << config.seed_data << "\n";
  out << "seed_proto = " << config.seed_proto << "\n";
  if (!config.out_dir.empty()) out << "out_dir = " << config.out_dir << "\n";
  out << "strict = " << (config.strict_determinism ? "true" : "false") << "\n";
  return out.str();
}

bool operator==(const ExperimentConfig& lhs, const ExperimentConfig& rhs) {
  return serialize_config(lhs) == serialize_config(rhs);
}

}  // namespace fedphd
