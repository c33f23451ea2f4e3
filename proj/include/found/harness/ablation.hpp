#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "found/config.hpp"
#include "found/format.hpp"
#include "found/harness/synth.hpp"
#include "found/harness/train.hpp"

namespace found::harness {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) r.sd += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(r.sd / static_cast<double>(v.size() - 1));
  }
  return r;
}

struct AblationRow {
  std::string name;
  double p_aug = 0.0;
  double lambda_vmf = 0.0;
  std::vector<TrainReport> runs;  // one per seed

  std::vector<double> shifted_accuracy() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.shifted.accuracy);
    return v;
  }
  std::vector<double> source_intra_cosine() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.source.compactness.mean_intra_cosine);
    return v;
  }
  std::vector<double> shifted_intra_cosine() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.shifted.compactness.mean_intra_cosine);
    return v;
  }
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;
};

struct AblationSetting {
  const char* name;
  double p_aug;
  bool vmf;
};

// Rows: no augmentation; always-on augmentation; always-on + vMF; p = 0.5 + vMF.
inline constexpr AblationSetting kAblationSettings[] = {
    {"baseline", 0.0, false},
    {"p1.0", 1.0, false},
    {"p1.0+vmf", 1.0, true},
    {"p0.5+vmf", 0.5, true},
};

/// The four-row ablation over seeds base.seed .. base.seed + n_seeds - 1. The
/// vMF rows use base.lambda_vmf; the others use 0. Rows with the same seed
/// share one dataset.
inline AblationTable ablation_matrix(const RunConfig& base, const SynthSpec& spec, std::size_t n_seeds) {
  base.validate();
  if (n_seeds == 0) throw std::invalid_argument("ablation needs at least one seed");
  AblationTable table;
  for (const AblationSetting& s : kAblationSettings)
    table.rows.push_back({s.name, s.p_aug, s.vmf ? base.lambda_vmf : 0.0, {}});
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = base.seed + i;
    table.seeds.push_back(seed);
    RunConfig cfg = base;
    cfg.seed = seed;
    const SynthDataset data = synth_dataset(with_config(spec, cfg), seed);
    for (AblationRow& row : table.rows) {
      cfg.p_aug = row.p_aug;
      cfg.lambda_vmf = row.lambda_vmf;
      TrainReport rep = train_on(cfg, data).report;
      rep.steps.clear();
      rep.steps.shrink_to_fit();
      row.runs.push_back(std::move(rep));
    }
  }
  return table;
}

// One line per row: name,p_aug,lambda_vmf,seeds,shifted_acc_mean,shifted_acc_sd,...
inline std::string ablation_summary_csv(const AblationTable& t) {
  std::string out =
      "row,p_aug,lambda_vmf,seeds,shifted_acc_mean,shifted_acc_sd,source_acc_mean,source_acc_sd,"
      "source_intra_cos_mean,source_intra_cos_sd,shifted_intra_cos_mean,shifted_intra_cos_sd,aug_applied_fraction\n";
  for (const AblationRow& r : t.rows) {
    std::vector<double> src_acc;
    std::size_t applied = 0, total = 0;
    for (const auto& run : r.runs) {
      src_acc.push_back(run.source.accuracy);
      applied += run.aug_applied;
      total += run.aug_total;
    }
    const MeanSd sa = mean_sd(r.shifted_accuracy()), so = mean_sd(src_acc);
    const MeanSd sc = mean_sd(r.source_intra_cosine()), hc = mean_sd(r.shifted_intra_cosine());
    out += r.name + "," + format_double(r.p_aug) + "," + format_double(r.lambda_vmf) + "," +
           std::to_string(r.runs.size()) + "," + format_double(sa.mean) + "," + format_double(sa.sd) + "," +
           format_double(so.mean) + "," + format_double(so.sd) + "," + format_double(sc.mean) + "," +
           format_double(sc.sd) + "," + format_double(hc.mean) + "," + format_double(hc.sd) + "," +
           format_double(total ? static_cast<double>(applied) / static_cast<double>(total) : 0.0) + "\n";
  }
  return out;
}

// Per (row, seed) detail.
inline std::string ablation_runs_csv(const AblationTable& t) {
  std::string out = "row,seed,shifted_acc,source_acc,source_intra_cos,shifted_intra_cos,aug_applied,aug_total\n";
  for (const AblationRow& r : t.rows)
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      const TrainReport& run = r.runs[i];
      out += r.name + "," + std::to_string(t.seeds[i]) + "," + format_double(run.shifted.accuracy) + "," +
             format_double(run.source.accuracy) + "," + format_double(run.source.compactness.mean_intra_cosine) +
             "," + format_double(run.shifted.compactness.mean_intra_cosine) + "," + std::to_string(run.aug_applied) +
             "," + std::to_string(run.aug_total) + "\n";
    }
  return out;
}

}  // namespace found::harness
