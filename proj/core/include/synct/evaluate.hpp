#pragma once

#include <functional>
#include <optional>

#include "synct/metrics.hpp"
#include "synct/train.hpp"

namespace synct {

struct SubjectMetrics {
  std::string subject_id;
  std::optional<double> mae_entire, mae_bone, mae_gas, mae_rectum, mae_bladder;  // HU
  double psnr = 0.0;  // dB
  double ssim = 0.0;
  std::array<double, kOrganCount> dsc{1.0, 1.0, 1.0};  // vs MR ground truth (B, R, G)
};

struct Aggregate {
  double mean = 0.0, stddev = 0.0;
  int n = 0;
};
Aggregate aggregate(const std::vector<double>& values);

struct MetricsReport {
  std::vector<SubjectMetrics> subjects;  // in subject-id order

  Aggregate agg_mae_entire() const;
  Aggregate agg_mae_bone() const;
  Aggregate agg_mae_gas() const;
  Aggregate agg_mae_rectum() const;
  Aggregate agg_mae_bladder() const;
  Aggregate agg_psnr() const;
  Aggregate agg_ssim() const;
  Aggregate agg_dsc(int organ) const;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  bool operator==(const MetricsReport& o) const;
};

struct EvaluateOptions {
  std::filesystem::path plots_dir;  // empty = no plots
};

// model output for one record: (synct, predicted MR-space labels)
using InferFn = std::function<InferenceOutput(const PhantomPair&, const std::string& subject_id)>;

// Runs inference per record and computes every metric: MAE over the full
// frame / bone region / per-organ label intersections, PSNR, SSIM and
// per-organ DSC of the predicted masks against the MR labels.
MetricsReport evaluate_with(const InferFn& infer_fn,
                            const std::vector<const DatasetRecord*>& split,
                            const EvaluateOptions& opts = {});
MetricsReport evaluate(ModelBundle& bundle, const std::vector<const DatasetRecord*>& split,
                       const EvaluateOptions& opts = {});

// report.json + aligned plain-text table
void emit_report(const MetricsReport& report, const std::filesystem::path& out_dir);
std::string format_table(const MetricsReport& report);

}  // namespace synct
