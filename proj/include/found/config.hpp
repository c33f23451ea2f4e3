#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "found/augment.hpp"
#include "found/error.hpp"
#include "found/format.hpp"
#include "found/vmf.hpp"

namespace found {

// Unknown key, bad value, or malformed line in a configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Run configuration shared by the library entry points and the CLI.
struct RunConfig {
  double p_aug = 0.5;
  LambdaSampler lambda_sampler = UniformLambda{0.0, 1.0};
  double lambda_vmf = 0.005;
  double ema_momentum = vmf::kDefaultMomentum;
  double kappa_init = vmf::kKappaInit;
  std::uint64_t seed = 0;

  std::size_t feature_dim = 16;
  std::size_t image_height = 24;
  std::size_t image_width = 24;
  std::size_t n_classes = 4;
  std::size_t samples_per_class = 200;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;

  std::string input;
  std::string styles;
  std::string output;

  AugPolicy policy() const { return {p_aug, lambda_sampler, seed}; }

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    need(p_aug >= 0.0 && p_aug <= 1.0, "p_aug must lie in [0, 1]");
    found::validate(lambda_sampler);
    need(lambda_vmf >= 0.0 && std::isfinite(lambda_vmf), "lambda_vmf must be finite and >= 0");
    need(ema_momentum >= 0.0 && ema_momentum <= 1.0, "ema_momentum must lie in [0, 1]");
    need(kappa_init >= vmf::kKappaMin && kappa_init <= vmf::kKappaMax, "kappa_init must lie in [1e-4, 1e5]");
    need(feature_dim >= 2, "feature_dim must be >= 2");
    need(image_height >= 4 && image_width >= 4, "image_height and image_width must be >= 4");
    need(n_classes >= 2, "n_classes must be >= 2");
    need(samples_per_class >= 1, "samples_per_class must be >= 1");
    need(batch_size >= 1, "batch_size must be >= 1");
    need(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be finite and >= 0");
  }

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
  std::string (*get)(const RunConfig&);
  void (*set)(RunConfig&, std::string_view);
};

namespace detail {

inline std::size_t parse_size(std::string_view v) { return parse_integer<std::size_t>(v); }

}  // namespace detail

// Every configurable field, in serialization order.
inline std::span<const ConfigKey> config_keys() {
  using C = RunConfig;
  static const ConfigKey keys[] = {
      {"p_aug", "per-image augmentation probability",
       [](const C& c) { return format_double(c.p_aug); }, [](C& c, std::string_view v) { c.p_aug = parse_double(v); }},
      {"lambda_sampler", "interpolation weight sampler: uniform:LO,HI | beta:ALPHA | fixed:L",
       [](const C& c) { return to_string(c.lambda_sampler); },
       [](C& c, std::string_view v) { c.lambda_sampler = parse_lambda_sampler(v); }},
      {"lambda_vmf", "weight of the vMF loss in the total objective",
       [](const C& c) { return format_double(c.lambda_vmf); },
       [](C& c, std::string_view v) { c.lambda_vmf = parse_double(v); }},
      {"ema_momentum", "EMA momentum of the class prototypes",
       [](const C& c) { return format_double(c.ema_momentum); },
       [](C& c, std::string_view v) { c.ema_momentum = parse_double(v); }},
      {"kappa_init", "initial per-class concentration",
       [](const C& c) { return format_double(c.kappa_init); },
       [](C& c, std::string_view v) { c.kappa_init = parse_double(v); }},
      {"seed", "random seed", [](const C& c) { return std::to_string(c.seed); },
       [](C& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>(v); }},
      {"feature_dim", "embedding dimension d", [](const C& c) { return std::to_string(c.feature_dim); },
       [](C& c, std::string_view v) { c.feature_dim = detail::parse_size(v); }},
      {"image_height", "synthetic image height", [](const C& c) { return std::to_string(c.image_height); },
       [](C& c, std::string_view v) { c.image_height = detail::parse_size(v); }},
      {"image_width", "synthetic image width", [](const C& c) { return std::to_string(c.image_width); },
       [](C& c, std::string_view v) { c.image_width = detail::parse_size(v); }},
      {"n_classes", "number of synthetic classes", [](const C& c) { return std::to_string(c.n_classes); },
       [](C& c, std::string_view v) { c.n_classes = detail::parse_size(v); }},
      {"samples_per_class", "synthetic samples per class and domain",
       [](const C& c) { return std::to_string(c.samples_per_class); },
       [](C& c, std::string_view v) { c.samples_per_class = detail::parse_size(v); }},
      {"epochs", "training epochs", [](const C& c) { return std::to_string(c.epochs); },
       [](C& c, std::string_view v) { c.epochs = detail::parse_size(v); }},
      {"batch_size", "minibatch size", [](const C& c) { return std::to_string(c.batch_size); },
       [](C& c, std::string_view v) { c.batch_size = detail::parse_size(v); }},
      {"learning_rate", "SGD step size", [](const C& c) { return format_double(c.learning_rate); },
       [](C& c, std::string_view v) { c.learning_rate = parse_double(v); }},
      {"input", "input path", [](const C& c) { return c.input; },
       [](C& c, std::string_view v) { c.input = std::string(v); }},
      {"styles", "style image directory", [](const C& c) { return c.styles; },
       [](C& c, std::string_view v) { c.styles = std::string(v); }},
      {"output", "output path", [](const C& c) { return c.output; },
       [](C& c, std::string_view v) { c.output = std::string(v); }},
  };
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const ConfigKey& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return std::ranges::all_of(config_keys(), [&](const ConfigKey& k) { return k.get(a) == k.get(b); });
}

inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  try {
    k->set(cfg, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

// One "key = value" per line; blank lines and '#' comments are ignored.
inline void parse_config_into(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  parse_config_into(cfg, text);
  return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const ConfigKey& k : config_keys()) {
    out += k.name;
    out += " = ";
    out += k.get(cfg);
    out += '\n';
  }
  return out;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace found
