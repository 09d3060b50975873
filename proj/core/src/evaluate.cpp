#include "synct/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "synct/image_io.hpp"

namespace synct {

using nlohmann::json;

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (a.n == 0) return a;
  double s = 0.0;
  for (double v : values) s += v;
  a.mean = s / a.n;
  if (a.n > 1) {
    double q = 0.0;
    for (double v : values) q += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(q / (a.n - 1));
  }
  return a;
}

namespace {

Aggregate agg_optional(const std::vector<SubjectMetrics>& subjects,
                       std::optional<double> SubjectMetrics::*field) {
  std::vector<double> vals;
  for (const auto& s : subjects)
    if ((s.*field).has_value()) vals.push_back(*(s.*field));
  return aggregate(vals);
}

json opt_json(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

Aggregate MetricsReport::agg_mae_entire() const { return agg_optional(subjects, &SubjectMetrics::mae_entire); }
Aggregate MetricsReport::agg_mae_bone() const { return agg_optional(subjects, &SubjectMetrics::mae_bone); }
Aggregate MetricsReport::agg_mae_gas() const { return agg_optional(subjects, &SubjectMetrics::mae_gas); }
Aggregate MetricsReport::agg_mae_rectum() const { return agg_optional(subjects, &SubjectMetrics::mae_rectum); }
Aggregate MetricsReport::agg_mae_bladder() const { return agg_optional(subjects, &SubjectMetrics::mae_bladder); }

Aggregate MetricsReport::agg_psnr() const {
  std::vector<double> v;
  for (const auto& s : subjects) v.push_back(s.psnr);
  return aggregate(v);
}
Aggregate MetricsReport::agg_ssim() const {
  std::vector<double> v;
  for (const auto& s : subjects) v.push_back(s.ssim);
  return aggregate(v);
}
Aggregate MetricsReport::agg_dsc(int organ) const {
  std::vector<double> v;
  for (const auto& s : subjects) v.push_back(s.dsc[organ]);
  return aggregate(v);
}

json MetricsReport::to_json() const {
  json subs = json::array();
  for (const auto& s : subjects) {
    subs.push_back(json{{"subject_id", s.subject_id},
                        {"mae_entire", opt_json(s.mae_entire)},
                        {"mae_bone", opt_json(s.mae_bone)},
                        {"mae_gas", opt_json(s.mae_gas)},
                        {"mae_rectum", opt_json(s.mae_rectum)},
                        {"mae_bladder", opt_json(s.mae_bladder)},
                        {"psnr", s.psnr},
                        {"ssim", s.ssim},
                        {"dsc_bladder", s.dsc[0]},
                        {"dsc_rectum", s.dsc[1]},
                        {"dsc_gas", s.dsc[2]}});
  }
  auto agg = [](const Aggregate& a) {
    return json{{"mean", a.mean}, {"std", a.stddev}, {"n", a.n}};
  };
  return json{{"subjects", std::move(subs)},
              {"aggregates",
               json{{"mae_entire", agg(agg_mae_entire())},
                    {"mae_bone", agg(agg_mae_bone())},
                    {"mae_gas", agg(agg_mae_gas())},
                    {"mae_rectum", agg(agg_mae_rectum())},
                    {"mae_bladder", agg(agg_mae_bladder())},
                    {"psnr", agg(agg_psnr())},
                    {"ssim", agg(agg_ssim())},
                    {"dsc_bladder", agg(agg_dsc(0))},
                    {"dsc_rectum", agg(agg_dsc(1))},
                    {"dsc_gas", agg(agg_dsc(2))}}}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  MetricsReport r;
  for (const auto& s : j.at("subjects")) {
    SubjectMetrics m;
    m.subject_id = s.at("subject_id").get<std::string>();
    m.mae_entire = opt_from_json(s.at("mae_entire"));
    m.mae_bone = opt_from_json(s.at("mae_bone"));
    m.mae_gas = opt_from_json(s.at("mae_gas"));
    m.mae_rectum = opt_from_json(s.at("mae_rectum"));
    m.mae_bladder = opt_from_json(s.at("mae_bladder"));
    m.psnr = s.at("psnr").get<double>();
    m.ssim = s.at("ssim").get<double>();
    m.dsc[0] = s.at("dsc_bladder").get<double>();
    m.dsc[1] = s.at("dsc_rectum").get<double>();
    m.dsc[2] = s.at("dsc_gas").get<double>();
    r.subjects.push_back(std::move(m));
  }
  return r;
}

bool MetricsReport::operator==(const MetricsReport& o) const {
  if (subjects.size() != o.subjects.size()) return false;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& a = subjects[i];
    const auto& b = o.subjects[i];
    if (a.subject_id != b.subject_id || a.mae_entire != b.mae_entire || a.mae_bone != b.mae_bone ||
        a.mae_gas != b.mae_gas || a.mae_rectum != b.mae_rectum ||
        a.mae_bladder != b.mae_bladder || a.psnr != b.psnr || a.ssim != b.ssim || a.dsc != b.dsc)
      return false;
  }
  return true;
}

namespace {

void write_label_overlay(const std::filesystem::path& path, const ImageSlice& mr,
                         const LabelMap& labels) {
  std::vector<Rgb> px(mr.px.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto g = static_cast<unsigned char>(std::clamp(mr.px[i] * 255.f, 0.f, 255.f));
    px[i] = {g, g, g};
    switch (labels.cls[i]) {
      case kBladder: px[i] = {40, 200, 60}; break;
      case kRectum: px[i] = {230, 120, 180}; break;
      case kRectalGas: px[i] = {250, 250, 250}; break;
      default: break;
    }
  }
  write_ppm(path, mr.h, mr.w, px);
}

void write_subject_plots(const std::filesystem::path& dir, const std::string& id,
                         const PhantomPair& pair, const InferenceOutput& out) {
  std::filesystem::create_directories(dir);
  write_pgm(dir / (id + "_mr.pgm"), pair.mr, 0.f, 1.f);
  write_pgm(dir / (id + "_ct.pgm"), pair.ct, -1000.f, 2000.f);
  write_pgm(dir / (id + "_synct.pgm"), out.synct, -1000.f, 2000.f);
  ImageSlice diff(pair.ct.h, pair.ct.w, Modality::CT);
  for (std::size_t i = 0; i < diff.px.size(); ++i)
    diff.px[i] = std::min(std::abs(out.synct.px[i] - pair.ct.px[i]), 2000.f);
  write_pgm(dir / (id + "_diff.pgm"), diff, 0.f, 500.f);
  write_label_overlay(dir / (id + "_pred_labels.ppm"), pair.mr, out.pred_labels);
  write_label_overlay(dir / (id + "_gt_labels_mr.ppm"), pair.mr, pair.label_mr);
}

}  // namespace

MetricsReport evaluate_with(const InferFn& infer_fn,
                            const std::vector<const DatasetRecord*>& split,
                            const EvaluateOptions& opts) {
  if (split.empty()) throw std::invalid_argument("evaluate: empty split");
  MetricsReport report;
  for (const auto* rec : split) {
    const PhantomPair pair = read_record(*rec);
    const InferenceOutput out = infer_fn(pair, rec->subject_id);

    SubjectMetrics m;
    m.subject_id = rec->subject_id;
    m.mae_entire = mae(out.synct, pair.ct);
    const Mask bone = bone_region(pair.ct, out.synct);
    m.mae_bone = bone.count() ? mae(out.synct, pair.ct, &bone) : std::nullopt;
    const std::uint8_t organs[3] = {kRectalGas, kRectum, kBladder};
    std::optional<double>* slots[3] = {&m.mae_gas, &m.mae_rectum, &m.mae_bladder};
    for (int i = 0; i < 3; ++i) {
      const Mask inter = organ_intersection_region(pair.label_mr, pair.label_ct, organs[i]);
      *slots[i] = inter.count() ? mae(out.synct, pair.ct, &inter) : std::nullopt;
    }
    m.psnr = psnr(out.synct, pair.ct);
    m.ssim = ssim(out.synct, pair.ct);
    for (int o = 0; o < kOrganCount; ++o)
      m.dsc[o] = dsc(mask_of_class(out.pred_labels, kOrganClasses[o]),
                     mask_of_class(pair.label_mr, kOrganClasses[o]));
    report.subjects.push_back(std::move(m));

    if (!opts.plots_dir.empty())
      write_subject_plots(opts.plots_dir, rec->subject_id, pair, out);
  }
  return report;
}

MetricsReport evaluate(ModelBundle& bundle, const std::vector<const DatasetRecord*>& split,
                       const EvaluateOptions& opts) {
  return evaluate_with(
      [&bundle](const PhantomPair& pair, const std::string&) { return infer(bundle, pair.mr); },
      split, opts);
}

std::string format_table(const MetricsReport& report) {
  std::ostringstream os;
  auto fmt_opt = [](const std::optional<double>& v) {
    char buf[32];
    if (v.has_value())
      std::snprintf(buf, sizeof(buf), "%10.1f", *v);
    else
      std::snprintf(buf, sizeof(buf), "%10s", "-");
    return std::string(buf);
  };
  auto fmt = [](double v, const char* spec = "%10.3f") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), spec, v);
    return std::string(buf);
  };

  os << "subject      | MAE entire |   MAE bone |    MAE gas | MAE rectum | MAE bladder |     PSNR "
        "|    SSIM | DSC blad | DSC rect |  DSC gas\n";
  os << std::string(132, '-') << "\n";
  for (const auto& s : report.subjects) {
    os << s.subject_id;
    for (std::size_t i = s.subject_id.size(); i < 13; ++i) os << ' ';
    os << "|" << fmt_opt(s.mae_entire) << "  |" << fmt_opt(s.mae_bone) << " |" << fmt_opt(s.mae_gas)
       << " |" << fmt_opt(s.mae_rectum) << " |" << fmt_opt(s.mae_bladder) << "  |"
       << fmt(s.psnr, "%9.2f") << "|" << fmt(s.ssim, "%8.3f") << " |" << fmt(s.dsc[0], "%9.3f")
       << " |" << fmt(s.dsc[1], "%9.3f") << " |" << fmt(s.dsc[2], "%9.3f") << "\n";
  }
  os << std::string(132, '-') << "\n";
  auto agg_line = [&](const char* name, const Aggregate& a, const char* spec = "%.1f") {
    char buf[96];
    char mean_s[32], std_s[32];
    std::snprintf(mean_s, sizeof(mean_s), spec, a.mean);
    std::snprintf(std_s, sizeof(std_s), spec, a.stddev);
    std::snprintf(buf, sizeof(buf), "%-12s %s +- %s (n=%d)\n", name, mean_s, std_s, a.n);
    os << buf;
  };
  agg_line("MAE entire", report.agg_mae_entire());
  agg_line("MAE bone", report.agg_mae_bone());
  agg_line("MAE gas", report.agg_mae_gas());
  agg_line("MAE rectum", report.agg_mae_rectum());
  agg_line("MAE bladder", report.agg_mae_bladder());
  agg_line("PSNR", report.agg_psnr(), "%.2f");
  agg_line("SSIM", report.agg_ssim(), "%.3f");
  agg_line("DSC bladder", report.agg_dsc(0), "%.3f");
  agg_line("DSC rectum", report.agg_dsc(1), "%.3f");
  agg_line("DSC gas", report.agg_dsc(2), "%.3f");
  return os.str();
}

void emit_report(const MetricsReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "report.json");
    if (!f) throw std::runtime_error("cannot write report.json");
    f << report.to_json().dump(2) << "\n";
  }
  {
    std::ofstream f(out_dir / "report_table.txt");
    if (!f) throw std::runtime_error("cannot write report_table.txt");
    f << format_table(report);
  }
}

}  // namespace synct
