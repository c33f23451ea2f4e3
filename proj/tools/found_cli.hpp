#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "found/found.hpp"

namespace found::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// "p_aug" -> "--p-aug"
inline std::string flag_name(std::string_view key) {
  std::string s = "--";
  for (char c : key) s += c == '_' ? '-' : c;
  return s;
}

// Short spellings accepted next to the config-key flags.
inline std::string flag_names(std::string_view key) {
  std::string names = flag_name(key);
  if (key == "lambda_sampler") names += ",--sampler";
  if (key == "output") names += ",--out";
  return names;
}

/// Every RunConfig key as a flag. Values given on the command line override
/// the --config file, which overrides the built-in defaults.
class ConfigFlags {
 public:
  void attach(CLI::App& app) {
    app.add_option("--config", config_path_, "configuration file of 'key = value' lines");
    const RunConfig defaults;
    for (const ConfigKey& k : config_keys()) {
      std::string& slot = values_[std::string(k.name)];
      app.add_option(flag_names(k.name), slot, std::string(k.help))
          ->default_str(k.get(defaults))
          ->group("Run configuration");
    }
    app_ = &app;
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path_.empty()) cfg = load_config(config_path_);
    for (const ConfigKey& k : config_keys())
      if (app_->count(flag_name(k.name)) > 0) set_config_value(cfg, k.name, values_.at(std::string(k.name)));
    cfg.validate();
    return cfg;
  }

 private:
  std::string config_path_;
  std::map<std::string, std::string> values_;
  CLI::App* app_ = nullptr;
};

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
}

// ---------------------------------------------------------------------------

inline int cmd_augment(const RunConfig& cfg, std::ostream& log) {
  require(cfg.input, "--input");
  require(cfg.output, "--out");
  const fs::path style_dir = cfg.styles.empty() ? fs::path(cfg.input) : fs::path(cfg.styles);

  const auto inputs = io::list_images(cfg.input);
  if (inputs.empty()) throw DataError("no images in '" + cfg.input + "'");
  std::vector<ImageTensor> images;
  std::vector<fs::path> names;
  std::vector<std::string> failures;
  for (const fs::path& p : inputs) {
    try {
      images.push_back(io::load_image(p));
      names.push_back(p.filename());
    } catch (const DataError& e) {
      failures.push_back(e.what());
    }
  }
  std::vector<ImageTensor> style_images;
  for (const fs::path& p : io::list_images(style_dir)) {
    try {
      style_images.push_back(io::load_image(p));
    } catch (const DataError& e) {
      failures.push_back(e.what());
    }
  }
  for (const std::string& f : failures) log << "error: " << f << "\n";
  if (images.empty()) throw DataError("no readable images in '" + cfg.input + "'");
  if (style_images.empty()) throw DataError("no readable style images in '" + style_dir.string() + "'");

  StylePool pool(std::move(style_images));
  const AugmentedBatch out = apply_policy(std::span<const ImageTensor>(images), pool, cfg.policy());
  fs::create_directories(cfg.output);
  std::string records;
  for (std::size_t i = 0; i < out.images.size(); ++i) {
    io::save_image(out.images[i], fs::path(cfg.output) / names[i]);
    records += format_record(out.records[i]) + " file=" + names[i].string() + "\n";
  }
  io::write_text(fs::path(cfg.output) / "records.txt", records);
  const auto applied = std::ranges::count_if(out.records, [](const AugRecord& r) { return r.applied; });
  log << "augmented " << applied << " of " << out.images.size() << " images into " << cfg.output << "\n";
  return failures.empty() ? kOk : kData;
}

// ---------------------------------------------------------------------------

struct SpectrumOptions {
  bool verify = false;
};

inline int cmd_spectrum(const RunConfig& cfg, const SpectrumOptions& opt, std::ostream& log) {
  require(cfg.input, "--input");
  require(cfg.output, "--out");
  const ImageTensor img = io::load_image(cfg.input);
  const Shape s = img.shape();
  const Spectrum spec = fft2d(img);
  const AmplitudePhase ap = decompose(spec);
  const std::string prefix = cfg.output;
  if (const fs::path parent = fs::path(prefix).parent_path(); !parent.empty()) fs::create_directories(parent);

  std::string csv = "channel,u,v,re,im,amplitude,phase\n";
  for (std::size_t c = 0; c < s.channels; ++c) {
    const std::size_t base = c * s.pixels();
    double top = 0.0;
    for (std::size_t i = 0; i < s.pixels(); ++i) top = std::max(top, std::log1p(ap.amplitude[base + i]));
    ImageTensor amp(s.height, s.width, 1), phase(s.height, s.width, 1);
    for (std::size_t u = 0; u < s.height; ++u)
      for (std::size_t v = 0; v < s.width; ++v) {
        const std::size_t i = base + u * s.width + v;
        amp.at(u, v, 0) = top > 0.0 ? std::log1p(ap.amplitude[i]) / top : 0.0;
        phase.at(u, v, 0) = (ap.phase[i] + std::numbers::pi) / (2.0 * std::numbers::pi);
        const Complex z = spec.at(c, u, v);
        csv += std::to_string(c) + "," + std::to_string(u) + "," + std::to_string(v) + "," + format_double(z.real()) +
               "," + format_double(z.imag()) + "," + format_double(ap.amplitude[i]) + "," + format_double(ap.phase[i]) +
               "\n";
      }
    const std::string tag = ".c" + std::to_string(c) + ".pgm";
    io::save_image(amp, prefix + ".logamp" + tag);
    io::save_image(phase, prefix + ".phase" + tag);
  }
  io::write_text(prefix + ".spectrum.csv", csv);

  if (opt.verify) {
    const double err = max_abs_diff(ifft2d(spec), img);
    log << "round-trip max abs error " << format_double(err) << "\n";
    if (!(err <= 1e-9)) {
      log << "error: round-trip error exceeds 1e-9\n";
      return kNumerical;
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------

inline int cmd_vmf_fit(const RunConfig& cfg, std::ostream& log) {
  require(cfg.input, "--input");
  require(cfg.output, "--out");
  const vmf::EmbeddingBatch batch = io::to_batch(io::load_emb1(cfg.input));
  std::string csv = "class,n,kappa,mean_resultant";
  for (std::size_t j = 0; j < batch.dim; ++j) csv += ",mu_" + std::to_string(j);
  csv += "\n";
  std::vector<std::uint32_t> labels = batch.labels;
  std::ranges::sort(labels);
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (std::uint32_t k : labels) {
    const std::vector<double> rows = batch.rows_of(k);
    const std::size_t n = rows.size() / batch.dim;
    if (n < 2) {
      log << "class " << k << ": skipped (" << n << " sample)\n";
      continue;
    }
    const vmf::FitResult f = vmf::fit(rows, batch.dim);
    csv += std::to_string(k) + "," + std::to_string(n) + "," + format_double(f.kappa) + "," +
           format_double(f.mean_resultant);
    for (double x : f.mu.values()) csv += "," + format_double(x);
    csv += "\n";
    log << "class " << k << ": n=" << n << " kappa=" << format_double(f.kappa) << "\n";
  }
  io::write_text(cfg.output, csv);
  return kOk;
}

struct SampleOptions {
  double kappa = vmf::kKappaInit;
  std::size_t count = 1000;
  std::string mu;  // comma-separated; empty means the first basis vector
};

inline std::vector<double> parse_vector(std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_double(trim(text.substr(0, comma))));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  return out;
}

inline int cmd_vmf_sample(const RunConfig& cfg, const SampleOptions& opt, std::ostream& log) {
  require(cfg.output, "--out");
  if (opt.count == 0) throw std::invalid_argument("--count must be >= 1");
  std::vector<double> mu(cfg.feature_dim, 0.0);
  if (opt.mu.empty()) {
    mu[0] = 1.0;
  } else {
    mu = parse_vector(opt.mu);
    if (mu.size() != cfg.feature_dim)
      throw std::invalid_argument("--mu has " + std::to_string(mu.size()) + " components, --feature-dim is " +
                                  std::to_string(cfg.feature_dim));
  }
  RandomStream rng = rng_stream(cfg.seed, 0);
  const std::vector<double> rows = vmf::sample(vmf::UnitVector::normalized(mu), opt.kappa, opt.count, rng);
  const vmf::EmbeddingBatch batch{cfg.feature_dim, rows, std::vector<std::uint32_t>(opt.count, 0)};
  io::save_emb1(io::from_batch(batch, 1), cfg.output);
  log << "wrote " << opt.count << " samples (d=" << cfg.feature_dim << ", kappa=" << format_double(opt.kappa)
      << ") to " << cfg.output << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

inline void export_domain(const harness::DomainEval& eval, std::uint32_t n_classes, const fs::path& dir,
                          const std::string& name, std::ostream& log) {
  io::save_emb1(io::from_batch(eval.embeddings, n_classes), dir / ("embeddings_" + name + ".emb1"));
  for (const std::string& w : harness::pca_scatter_export(eval.embeddings, dir / ("scatter_" + name)))
    log << "warning: " << name << " scatter: " << w << "\n";
}

inline int cmd_demo_train(const RunConfig& cfg, std::ostream& log) {
  require(cfg.output, "--out");
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  log << "training: p_aug=" << format_double(cfg.p_aug) << " lambda_vmf=" << format_double(cfg.lambda_vmf)
      << " epochs=" << cfg.epochs << " seed=" << cfg.seed << "\n";
  const harness::TrainOutcome run = harness::train(cfg, harness::default_synth_spec());
  const harness::TrainReport& r = run.report;
  io::write_text(dir / "config.txt", serialize_config(cfg));
  io::write_text(dir / "epochs.csv", harness::epochs_csv(r));
  io::write_text(dir / "steps.csv", harness::steps_csv(r));
  io::write_text(dir / "summary.txt", harness::summary_text(r));
  const auto K = static_cast<std::uint32_t>(cfg.n_classes);
  export_domain(r.source, K, dir, "source", log);
  export_domain(r.shifted, K, dir, "shifted", log);
  log << harness::summary_text(r);
  return kOk;
}

struct AblateOptions {
  std::size_t seeds = 5;
};

inline int cmd_ablate(const RunConfig& cfg, const AblateOptions& opt, std::ostream& log) {
  require(cfg.output, "--out");
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  log << "ablation: 4 rows x " << opt.seeds << " seeds from seed " << cfg.seed << "\n";
  const harness::AblationTable t = harness::ablation_matrix(cfg, harness::default_synth_spec(), opt.seeds);
  io::write_text(dir / "ablation_summary.csv", harness::ablation_summary_csv(t));
  io::write_text(dir / "ablation_runs.csv", harness::ablation_runs_csv(t));
  log << harness::ablation_summary_csv(t);
  return kOk;
}

struct MetricsOptions {
  std::string scatter;  // optional output prefix for the PCA scatter
};

inline int cmd_metrics(const RunConfig& cfg, const MetricsOptions& opt, std::ostream& log) {
  require(cfg.input, "--input");
  require(cfg.output, "--out");
  const vmf::EmbeddingBatch batch = io::to_batch(io::load_emb1(cfg.input));
  const harness::CompactnessMetrics m = harness::compactness_metrics(batch);
  std::string csv = "class,n,intra_cosine\n";
  for (const auto& c : m.classes)
    csv += std::to_string(c.label) + "," + std::to_string(c.count) + "," + format_double(c.mean_cosine) + "\n";
  csv += "# mean_intra_cosine," + format_double(m.mean_intra_cosine) + "\n";
  csv += "# min_centroid_angle_deg," + format_double(m.min_centroid_angle_deg) + "\n";
  for (std::uint32_t k : m.excluded) {
    csv += "# excluded," + std::to_string(k) + "\n";
    log << "warning: class " << k << " has fewer than 2 samples and was excluded\n";
  }
  io::write_text(cfg.output, csv);
  if (!opt.scatter.empty())
    for (const std::string& w : harness::pca_scatter_export(batch, opt.scatter)) log << "warning: " << w << "\n";
  return kOk;
}

struct ShiftOptions {
  std::string source;
  std::string target;
};

inline int cmd_semantic_shift(const RunConfig& cfg, const ShiftOptions& opt, std::ostream& log) {
  require(opt.source, "--source");
  require(opt.target, "--target");
  require(cfg.output, "--out");
  const io::EmbeddingVector shift =
      io::semantic_shift(io::load_embedding_vector(opt.source), io::load_embedding_vector(opt.target));
  io::save_embedding_vector(shift, cfg.output);
  log << "shift norm " << format_double(vmf::norm(shift.values)) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

/// Runs one invocation; `args` excludes the program name. Help goes to `out`,
/// logs and errors to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Fourier amplitude-mix augmentation and vMF feature regularization toolkit", "found"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    ConfigFlags flags;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const char* name, const char* help) -> CLI::App* {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.flags.attach(*s.app);
    return s.app;
  };

  SpectrumOptions spectrum_opt;
  SampleOptions sample_opt;
  AblateOptions ablate_opt;
  MetricsOptions metrics_opt;
  ShiftOptions shift_opt;

  add("augment", "amplitude-mix a directory of PPM/PGM images against a style directory");
  add("spectrum", "write log-amplitude and phase maps of one image")
      ->add_flag("--verify", spectrum_opt.verify, "fail with exit code 3 if the FFT round trip exceeds 1e-9");
  add("vmf-fit", "fit a vMF direction and concentration per class of an EMB1 file");
  CLI::App* sample = add("vmf-sample", "draw vMF samples (dimension from --feature-dim) into an EMB1 file");
  sample->add_option("--kappa", sample_opt.kappa, "concentration")->capture_default_str();
  sample->add_option("--count", sample_opt.count, "number of samples")->capture_default_str();
  sample->add_option("--mu", sample_opt.mu, "mean direction as comma-separated components (normalized)")
      ->default_str("first basis vector");
  add("demo-train", "train the toy model on the synthetic two-domain dataset");
  add("ablate", "run the four-row augmentation/vMF ablation")
      ->add_option("--seeds", ablate_opt.seeds, "number of seeds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add("metrics", "intra-class cosine and centroid angles of an EMB1 file")
      ->add_option("--scatter", metrics_opt.scatter, "also write a PCA scatter to PREFIX.svg and PREFIX.csv");
  CLI::App* shift = add("semantic-shift", "difference vector target - source of two single-vector EMB1 files");
  shift->add_option("--source", shift_opt.source, "source embedding (EMB1, n = 1)");
  shift->add_option("--target", shift_opt.target, "target embedding (EMB1, n = 1)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      const RunConfig cfg = sub.flags.resolve();
      if (name == "augment") return cmd_augment(cfg, err);
      if (name == "spectrum") return cmd_spectrum(cfg, spectrum_opt, err);
      if (name == "vmf-fit") return cmd_vmf_fit(cfg, err);
      if (name == "vmf-sample") return cmd_vmf_sample(cfg, sample_opt, err);
      if (name == "demo-train") return cmd_demo_train(cfg, err);
      if (name == "ablate") return cmd_ablate(cfg, ablate_opt, err);
      if (name == "metrics") return cmd_metrics(cfg, metrics_opt, err);
      if (name == "semantic-shift") return cmd_semantic_shift(cfg, shift_opt, err);
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace found::cli
