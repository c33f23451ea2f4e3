#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "found/augment.hpp"
#include "found/config.hpp"
#include "found/error.hpp"
#include "found/format.hpp"
#include "found/harness/metrics.hpp"
#include "found/harness/model.hpp"
#include "found/harness/synth.hpp"
#include "found/rng.hpp"
#include "found/spectral.hpp"
#include "found/vmf.hpp"

namespace found::harness {

struct StepLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double l_cls = 0.0;
  double l_vmf = 0.0;
  double l_total = 0.0;
};

// Epoch losses are step means; l_total = l_cls + lambda_vmf * l_vmf of those means.
struct EpochLog {
  std::size_t epoch = 0;
  double l_cls = 0.0;
  double l_vmf = 0.0;
  double l_total = 0.0;
  std::size_t aug_applied = 0;
  std::vector<double> kappa;  // per class after the epoch; NaN before first observation
};

struct DomainEval {
  double accuracy = 0.0;
  CompactnessMetrics compactness;
  vmf::EmbeddingBatch embeddings;
};

struct TrainReport {
  double lambda_vmf = 0.0;
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  DomainEval source;
  DomainEval shifted;
  std::size_t aug_applied = 0;
  std::size_t aug_total = 0;
  double kappa_lowest = vmf::kKappaMax;  // extremes over every step
  double kappa_highest = vmf::kKappaMin;
};

struct TrainOutcome {
  TrainReport report;
  ToyModel initial_model;
  ToyModel model;
  vmf::PrototypeBank prototypes;
};

// Random stream ids under the run seed.
inline constexpr std::uint64_t kModelInitStream = 0x1000;
inline constexpr std::uint64_t kShuffleStream = 0x2000'0000;
inline constexpr std::uint64_t kAugmentStream = 0x3000'0000;

// Harness fields of the run configuration take precedence over the SynthSpec.
inline SynthSpec with_config(SynthSpec spec, const RunConfig& cfg) {
  spec.n_classes = cfg.n_classes;
  spec.samples_per_class = cfg.samples_per_class;
  spec.height = cfg.image_height;
  spec.width = cfg.image_width;
  return spec;
}

namespace detail {

inline DomainEval evaluate(const ToyModel& m, const std::vector<LabeledImage>& data) {
  std::vector<double> inputs;
  std::vector<std::uint32_t> labels;
  for (const LabeledImage& s : data) {
    auto x = pooled_input(s.image);
    inputs.insert(inputs.end(), x.begin(), x.end());
    labels.push_back(s.label);
  }
  const ForwardPass f = forward(m, inputs);
  DomainEval e;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < f.batch; ++i) {
    const auto row = f.probs.begin() + static_cast<std::ptrdiff_t>(i * m.n_classes);
    const auto best = std::max_element(row, row + static_cast<std::ptrdiff_t>(m.n_classes)) - row;
    if (static_cast<std::uint32_t>(best) == labels[i]) ++correct;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(f.batch);
  e.embeddings = vmf::EmbeddingBatch{m.feature_dim, f.features, labels};
  e.compactness = compactness_metrics(e.embeddings);
  return e;
}

}  // namespace detail

/// One training run on a prepared dataset.
///
/// Per minibatch: gate every image with the augmentation policy (styles drawn
/// from the whole source split), forward, L_total = L_cls + lambda_vmf * L_vMF,
/// SGD on the model weights and log kappa, then EMA update of each class
/// prototype seen in the batch (a class's first batch seeds its prototype).
/// Throws NumericalError if L_total becomes non-finite.
inline TrainOutcome train_on(const RunConfig& cfg, const SynthDataset& data) {
  cfg.validate();
  if (data.source.empty()) throw DataError("training split is empty");
  const AugPolicy policy = cfg.policy();
  const std::size_t n = data.source.size();

  // Spectra of every source image, reused as content and as style.
  std::vector<MixableSpectrum> spectra;
  if (cfg.p_aug > 0.0) {
    spectra.reserve(n);
    for (const LabeledImage& s : data.source) spectra.push_back(prepare_mix(s.image));
  }
  std::vector<std::vector<double>> clean_inputs;
  clean_inputs.reserve(n);
  for (const LabeledImage& s : data.source) clean_inputs.push_back(pooled_input(s.image));

  RandomStream init_rng = rng_stream(cfg.seed, kModelInitStream);
  ToyModel model = ToyModel::init(clean_inputs.front().size(), cfg.feature_dim, cfg.n_classes, init_rng);
  TrainOutcome out{{}, model, model, vmf::PrototypeBank(cfg.n_classes, cfg.feature_dim, cfg.kappa_init, cfg.ema_momentum)};
  TrainReport& report = out.report;
  report.lambda_vmf = cfg.lambda_vmf;
  vmf::PrototypeBank& bank = out.prototypes;

  std::vector<std::size_t> order(n);
  std::vector<double> inputs;
  std::vector<std::uint32_t> labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream shuffle_rng = rng_stream(cfg.seed, kShuffleStream + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    RandomStream aug_rng = rng_stream(cfg.seed, kAugmentStream + epoch);

    EpochLog log;
    log.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++steps) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::vector<AugRecord> records = plan_policy(end - start, n, policy, aug_rng);
      inputs.clear();
      labels.clear();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const AugRecord& rec = records[b - start];
        if (rec.applied) {
          ImageTensor mixed = amplitude_mix_prepared(spectra[idx], spectra[*rec.style_index].amplitude, *rec.lambda);
          mixed.clamp(0.0, 1.0);
          const auto x = pooled_input(mixed);
          inputs.insert(inputs.end(), x.begin(), x.end());
          ++log.aug_applied;
        } else {
          inputs.insert(inputs.end(), clean_inputs[idx].begin(), clean_inputs[idx].end());
        }
        labels.push_back(data.source[idx].label);
      }
      report.aug_total += records.size();

      LossAndGradient lg = loss_and_gradient(model, inputs, labels, bank, cfg.lambda_vmf);
      if (!std::isfinite(lg.l_total))
        throw NumericalError("training diverged: non-finite L_total at epoch " + std::to_string(epoch));
      report.steps.push_back({epoch, steps, lg.l_cls, lg.l_vmf, lg.l_total});
      log.l_cls += lg.l_cls;
      log.l_vmf += lg.l_vmf;

      sgd_step(model, lg.model, cfg.learning_rate);
      for (std::uint32_t k = 0; k < cfg.n_classes; ++k) {
        if (!bank.has(k)) continue;
        vmf::VmfClassParams& p = bank.at(k);
        p.log_kappa -= cfg.learning_rate * lg.log_kappa[k];
        p.clamp_kappa();
        report.kappa_lowest = std::min(report.kappa_lowest, p.kappa());
        report.kappa_highest = std::max(report.kappa_highest, p.kappa());
      }

      // Prototype maintenance from this batch's (pre-step) features.
      const std::size_t d = cfg.feature_dim;
      for (std::uint32_t k = 0; k < cfg.n_classes; ++k) {
        std::vector<double> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == k)
            rows.insert(rows.end(), lg.pass.features.begin() + static_cast<std::ptrdiff_t>(i * d),
                        lg.pass.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        if (rows.empty()) continue;
        if (bank.has(k))
          bank.set(k, vmf::ema_update(bank.at(k), rows));
        else
          bank.initialize(k, rows);
      }
    }
    report.aug_applied += log.aug_applied;
    log.l_cls /= static_cast<double>(steps);
    log.l_vmf /= static_cast<double>(steps);
    log.l_total = log.l_cls + cfg.lambda_vmf * log.l_vmf;
    for (std::uint32_t k = 0; k < cfg.n_classes; ++k)
      log.kappa.push_back(bank.has(k) ? bank.at(k).kappa() : std::nan(""));
    report.epochs.push_back(std::move(log));
  }

  report.source = detail::evaluate(model, data.source);
  report.shifted = detail::evaluate(model, data.shifted);
  out.model = std::move(model);
  return out;
}

inline TrainOutcome train(const RunConfig& cfg, const SynthSpec& spec) {
  cfg.validate();
  return train_on(cfg, synth_dataset(with_config(spec, cfg), cfg.seed));
}

// epoch,l_cls,l_vmf,l_total,aug_applied,kappa_0..kappa_{K-1}
inline std::string epochs_csv(const TrainReport& r) {
  std::string out = "epoch,l_cls,l_vmf,l_total,aug_applied";
  const std::size_t K = r.epochs.empty() ? 0 : r.epochs.front().kappa.size();
  for (std::size_t k = 0; k < K; ++k) out += ",kappa_" + std::to_string(k);
  out += '\n';
  for (const EpochLog& e : r.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.l_cls) + "," + format_double(e.l_vmf) + "," +
           format_double(e.l_total) + "," + std::to_string(e.aug_applied);
    for (double k : e.kappa) out += "," + (std::isnan(k) ? std::string("nan") : format_double(k));
    out += '\n';
  }
  return out;
}

inline std::string steps_csv(const TrainReport& r) {
  std::string out = "epoch,step,l_cls,l_vmf,l_total\n";
  for (const StepLog& s : r.steps)
    out += std::to_string(s.epoch) + "," + std::to_string(s.step) + "," + format_double(s.l_cls) + "," +
           format_double(s.l_vmf) + "," + format_double(s.l_total) + "\n";
  return out;
}

inline std::string summary_text(const TrainReport& r) {
  auto line = [](const std::string& k, const std::string& v) { return k + ": " + v + "\n"; };
  std::string out;
  out += line("lambda_vmf", format_double(r.lambda_vmf));
  out += line("epochs", std::to_string(r.epochs.size()));
  out += line("steps", std::to_string(r.steps.size()));
  if (!r.epochs.empty()) {
    out += line("first_l_total", format_double(r.epochs.front().l_total));
    out += line("final_l_total", format_double(r.epochs.back().l_total));
  }
  out += line("aug_applied", std::to_string(r.aug_applied) + "/" + std::to_string(r.aug_total));
  for (const auto& [name, dom] : {std::pair{"source", &r.source}, std::pair{"shifted", &r.shifted}}) {
    out += line(std::string(name) + "_accuracy", format_double(dom->accuracy));
    out += line(std::string(name) + "_intra_cosine", format_double(dom->compactness.mean_intra_cosine));
    out += line(std::string(name) + "_min_centroid_angle_deg", format_double(dom->compactness.min_centroid_angle_deg));
  }
  out += line("kappa_range", format_double(r.kappa_lowest) + ".." + format_double(r.kappa_highest));
  return out;
}

}  // namespace found::harness
