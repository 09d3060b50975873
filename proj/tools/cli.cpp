#include "cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "synct/checkpoint.hpp"
#include "synct/evaluate.hpp"
#include "synct/image_io.hpp"
#include "synct/version.hpp"

namespace synct {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path apply_root(const fs::path& p, const char* env_var) {
  if (p.is_absolute()) return p;
  const char* root = std::getenv(env_var);
  if (root == nullptr || *root == '\0') return p;
  return fs::path(root) / p;
}
fs::path resolve_data(const fs::path& p) { return apply_root(p, "SYNCT_DATA_ROOT"); }
fs::path resolve_out(const fs::path& p) { return apply_root(p, "SYNCT_OUT_ROOT"); }

void ensure_fresh_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force)
      throw std::runtime_error("output directory " + dir.string() +
                               " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

void ensure_fresh_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force)
    throw std::runtime_error("output file " + file.string() +
                             " exists (use --force to overwrite)");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_manifest(const fs::path& dir, const std::string& command, const json& flags) {
  json j{{"command", command}, {"version", kVersion}, {"flags", flags}};
  std::ofstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest.json");
  f << j.dump(2) << "\n";
}

// --------------------------------------------------------- phantom generate

PhantomConfig record_config(int size, std::uint64_t master_seed, int idx, const std::string& mode,
                            double noise, double bias) {
  PhantomConfig c;
  c.size = size;
  c.noise_sigma = noise;
  c.mr_bias_field_amplitude = bias;
  c.seed = derive_seed(master_seed, 1000 + static_cast<std::uint64_t>(idx));

  Rng r(derive_seed(master_seed, static_cast<std::uint64_t>(idx)));
  std::string m = mode;
  if (m == "random") {
    const char* modes[4] = {"none", "bladder", "gas", "both"};
    m = modes[r.next_below(4)];
  }
  const bool bladder_inc = m == "bladder" || m == "both";
  const bool gas_inc = m == "gas" || m == "both";

  if (bladder_inc) {
    c.bladder_scale_mr = r.uniform(1.05, 1.30);
    c.bladder_scale_ct = r.uniform(0.75, 0.95);
  } else {
    c.bladder_scale_mr = c.bladder_scale_ct = r.uniform(0.90, 1.10);
  }
  if (gas_inc) {
    // independent presence and position: transient gas moves between scans
    c.gas_present_mr = r.bernoulli(0.75);
    c.gas_present_ct = r.bernoulli(0.5);
    c.gas_dx_mr = r.uniform(-0.012, 0.012);
    c.gas_dy_mr = r.uniform(-0.010, 0.010);
    c.gas_dx_ct = r.uniform(-0.012, 0.012);
    c.gas_dy_ct = r.uniform(-0.010, 0.010);
  } else {
    const bool gas = r.bernoulli(0.5);
    c.gas_present_mr = c.gas_present_ct = gas;
    const double dx = r.uniform(-0.012, 0.012), dy = r.uniform(-0.010, 0.010);
    c.gas_dx_mr = c.gas_dx_ct = dx;
    c.gas_dy_mr = c.gas_dy_ct = dy;
  }
  return c;
}

int cmd_phantom_generate(int count, int size, std::uint64_t seed, const std::string& inconsistency,
                         fs::path out, double noise, double bias, bool force) {
  out = resolve_out(out);
  ensure_fresh_dir(out, force);
  for (int i = 0; i < count; ++i) {
    const PhantomConfig cfg = record_config(size, seed, i, inconsistency, noise, bias);
    const PhantomPair pair = generate_phantom(cfg);
    char name[16];
    std::snprintf(name, sizeof(name), "s%03d", i);
    write_record(out, name, pair);
  }
  write_manifest(out, "phantom generate",
                 json{{"count", count},
                      {"size", size},
                      {"seed", seed},
                      {"inconsistency", inconsistency},
                      {"noise", noise},
                      {"bias", bias}});
  std::cout << "wrote " << count << " phantom records to " << out.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

StepObserver progress_observer() {
  auto last_epoch = std::make_shared<int>(-1);
  return [last_epoch](int epoch, int step, const std::string&, const LossReport& rep) {
    if (epoch != *last_epoch) {
      if (*last_epoch >= 0) std::cerr << "\n";
      std::cerr << "epoch " << epoch << ": ";
      *last_epoch = epoch;
    }
    if (step % 16 == 0) std::cerr << "." << std::flush;
    (void)rep;
  };
}

int cmd_train(const fs::path& config_file, fs::path data, fs::path out, std::uint64_t seed,
              bool seed_set, const std::string& variant, int epochs, int base_channels,
              const fs::path& resume_from, bool force) {
  TrainConfig cfg;
  if (!config_file.empty()) {
    std::ifstream f(config_file);
    if (!f) throw std::runtime_error("cannot read config file " + config_file.string());
    json j;
    f >> j;
    cfg = TrainConfig::from_json(j);
  }
  if (!data.empty()) cfg.data_dir = resolve_data(data);
  if (!out.empty()) cfg.out_dir = resolve_out(out);
  if (seed_set) cfg.seed = seed;
  if (!variant.empty()) cfg.variant = variant_from_string(variant);
  if (epochs >= 0) cfg.epochs = epochs;
  if (base_channels > 0) cfg.base_channels = base_channels;
  cfg.validate();

  if (resume_from.empty()) ensure_fresh_dir(cfg.out_dir, force);
  else fs::create_directories(cfg.out_dir);
  write_manifest(cfg.out_dir, "train", cfg.to_json());

  const TrainResult result = resume_from.empty()
                                 ? train(cfg, progress_observer())
                                 : resume(cfg, resume_from, progress_observer());
  std::cerr << "\n";
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "trained to epoch " << last.epoch << ", total loss " << last.losses.total << "\n";
  } else {
    std::cout << "no epochs run (epochs=" << cfg.epochs << ")\n";
  }
  std::cout << "checkpoint: " << (cfg.out_dir / "last.ckpt").string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- infer

int cmd_infer(const fs::path& checkpoint, const fs::path& input, fs::path out, bool force) {
  out = resolve_out(out);
  ensure_fresh_dir(out, force);
  auto bundle = load_checkpoint(checkpoint);
  const ImageSlice mr = read_image(resolve_data(input));
  const InferenceOutput res = infer(*bundle, mr);

  const std::string stem = input.stem().string();
  write_image(res.synct, out / (stem + "_synct"));
  write_label(res.pred_labels, out / (stem + "_pred_labels"));
  write_pgm(out / (stem + "_synct.pgm"), res.synct, -1000.f, 2000.f);
  write_pgm(out / (stem + "_mr.pgm"), mr, 0.f, 1.f);
  write_manifest(out, "infer",
                 json{{"checkpoint", checkpoint.string()}, {"input", input.string()}});
  std::cout << "synthetic CT written to " << (out / (stem + "_synct.raw")).string() << "\n";
  return 0;
}

// -------------------------------------------------------------------- eval

std::vector<const DatasetRecord*> select_split(const DatasetIndex& index, const std::string& split,
                                               int fold) {
  if (split == "train") return index.train_split(fold);
  if (split == "test") {
    auto s = index.test_split(fold);
    if (s.empty()) s = index.train_split(fold);  // folds=1: everything
    return s;
  }
  std::vector<const DatasetRecord*> all;
  for (const auto& r : index.records) all.push_back(&r);
  return all;
}

int cmd_eval(const fs::path& checkpoint, fs::path data, int folds, int fold,
             const std::string& split, std::uint64_t fold_seed, fs::path report_file,
             fs::path plots, bool as_json, bool force) {
  data = resolve_data(data);
  report_file = resolve_out(report_file);
  ensure_fresh_file(report_file, force);

  auto bundle = load_checkpoint(checkpoint);
  const DatasetIndex index = load_dataset(data, folds, fold_seed);
  const auto records = select_split(index, split, fold);

  EvaluateOptions opts;
  if (!plots.empty()) {
    opts.plots_dir = resolve_out(plots);
    fs::create_directories(opts.plots_dir);
  }
  const MetricsReport report = evaluate(*bundle, records, opts);

  {
    std::ofstream f(report_file);
    f << report.to_json().dump(2) << "\n";
  }
  fs::path table_file = report_file;
  table_file.replace_extension(".txt");
  {
    std::ofstream f(table_file);
    f << format_table(report);
  }
  if (report_file.has_parent_path())
    write_manifest(report_file.parent_path(), "eval",
                   json{{"checkpoint", checkpoint.string()},
                        {"data", data.string()},
                        {"folds", folds},
                        {"fold", fold},
                        {"split", split}});
  if (as_json)
    std::cout << report.to_json().dump(2) << "\n";
  else
    std::cout << format_table(report);
  return 0;
}

// ------------------------------------------------------------------ ablate

int cmd_ablate(const std::string& variants_csv, int seeds, fs::path data, fs::path test_data,
               fs::path out, int epochs, int base_channels, std::uint64_t seed, double lambda,
               bool force) {
  data = resolve_data(data);
  out = resolve_out(out);
  ensure_fresh_dir(out, force);
  if (test_data.empty()) test_data = data;
  else test_data = resolve_data(test_data);

  std::vector<std::string> variants;
  for (std::size_t pos = 0; pos < variants_csv.size();) {
    const auto comma = variants_csv.find(',', pos);
    const auto end = comma == std::string::npos ? variants_csv.size() : comma;
    variants.push_back(variants_csv.substr(pos, end - pos));
    pos = end + 1;
  }

  const DatasetIndex test_index = load_dataset(test_data, 1, 0);
  std::vector<const DatasetRecord*> test_records;
  for (const auto& r : test_index.records) test_records.push_back(&r);

  json summary = json::object();
  std::string table = "variant      |     MAE (HU)      |      PSNR      |      SSIM\n";
  table += std::string(66, '-') + "\n";

  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<double> maes, psnrs, ssims;
    for (int s = 0; s < seeds; ++s) {
      TrainConfig cfg;
      cfg.variant = variant_from_string(variants[vi]);
      cfg.epochs = epochs;
      cfg.base_channels = base_channels;
      cfg.lambda = lambda;
      cfg.seed = derive_seed(seed, vi * 100 + static_cast<std::uint64_t>(s));
      cfg.data_dir = data;
      cfg.out_dir = out / (variants[vi] + "_s" + std::to_string(s));
      cfg.checkpoint_every = std::max(1, epochs);
      std::cerr << "[ablate] " << variants[vi] << " seed " << s << "\n";
      TrainResult run = train(cfg, progress_observer());
      std::cerr << "\n";
      const MetricsReport rep = evaluate(*run.bundle, test_records);
      maes.push_back(rep.agg_mae_entire().mean);
      psnrs.push_back(rep.agg_psnr().mean);
      ssims.push_back(rep.agg_ssim().mean);
      emit_report(rep, cfg.out_dir);
    }
    const Aggregate am = aggregate(maes), ap = aggregate(psnrs), as = aggregate(ssims);
    summary[variants[vi]] = json{{"mae", {{"mean", am.mean}, {"std", am.stddev}}},
                                 {"psnr", {{"mean", ap.mean}, {"std", ap.stddev}}},
                                 {"ssim", {{"mean", as.mean}, {"std", as.stddev}}},
                                 {"seeds", seeds}};
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s | %7.1f +- %6.1f | %6.2f +- %5.2f | %5.3f +- %5.3f\n",
                  variants[vi].c_str(), am.mean, am.stddev, ap.mean, ap.stddev, as.mean,
                  as.stddev);
    table += line;
  }

  {
    std::ofstream f(out / "ablate_summary.json");
    f << summary.dump(2) << "\n";
  }
  {
    std::ofstream f(out / "ablate_summary.txt");
    f << table;
  }
  write_manifest(out, "ablate",
                 json{{"variants", variants_csv},
                      {"seeds", seeds},
                      {"epochs", epochs},
                      {"base_channels", base_channels},
                      {"seed", seed}});
  std::cout << table;
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const fs::path& report_file, const fs::path& out_file) {
  std::ifstream f(resolve_data(report_file));
  if (!f) throw std::runtime_error("cannot read " + report_file.string());
  json j;
  f >> j;
  const MetricsReport rep = MetricsReport::from_json(j);
  const std::string table = format_table(rep);
  if (out_file.empty()) {
    std::cout << table;
  } else {
    const fs::path out = resolve_out(out_file);
    std::ofstream o(out);
    if (!o) throw std::runtime_error("cannot write " + out.string());
    o << table;
    std::cout << "table written to " << out.string() << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"MR-to-CT phantom synthesis: data generation, training, inference, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // phantom generate
  auto* phantom = app.add_subcommand("phantom", "phantom dataset tools");
  phantom->require_subcommand(1);
  auto* gen = phantom->add_subcommand("generate", "generate paired MR/CT phantom records");
  int g_count = 8, g_size = 64;
  std::uint64_t g_seed = 0;
  std::string g_inc = "both";
  std::string g_out;
  double g_noise = 0.01, g_bias = 0.05;
  bool g_force = false;
  gen->add_option("--count", g_count, "number of records")->check(CLI::PositiveNumber);
  gen->add_option("--size", g_size, "image side (power of two >= 32)");
  gen->add_option("--seed", g_seed, "master seed");
  gen->add_option("--inconsistency", g_inc, "none|bladder|gas|both|random")
      ->check(CLI::IsMember({"none", "bladder", "gas", "both", "random"}));
  gen->add_option("--out", g_out, "output directory")->required();
  gen->add_option("--noise", g_noise, "noise sigma (MR units)");
  gen->add_option("--bias", g_bias, "MR bias field amplitude");
  gen->add_flag("--force", g_force, "overwrite existing outputs");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string t_config, t_data, t_out, t_variant, t_resume;
  std::uint64_t t_seed = 0;
  int t_epochs = -1, t_bc = 0;
  bool t_force = false;
  tr->add_option("--config", t_config, "JSON config file (TrainConfig fields)");
  tr->add_option("--data", t_data, "dataset directory");
  tr->add_option("--out", t_out, "output directory");
  auto* t_seed_opt = tr->add_option("--seed", t_seed, "seed override");
  tr->add_option("--variant", t_variant, "full|cgan|wo_seg|wo_adaon|wo_lexc")
      ->check(CLI::IsMember({"full", "cgan", "wo_seg", "wo_adaon", "wo_lexc"}));
  tr->add_option("--epochs", t_epochs, "epoch override");
  tr->add_option("--base-channels", t_bc, "width override");
  tr->add_option("--resume", t_resume, "checkpoint to resume from");
  tr->add_flag("--force", t_force, "overwrite existing outputs");

  // infer
  auto* inf = app.add_subcommand("infer", "run inference on one MR slice");
  std::string i_ckpt, i_input, i_out;
  bool i_force = false;
  inf->add_option("--checkpoint", i_ckpt, "checkpoint file")->required();
  inf->add_option("--input", i_input, "input MR image stem (without .raw/.json)")->required();
  inf->add_option("--out", i_out, "output directory")->required();
  inf->add_flag("--force", i_force, "overwrite existing outputs");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  std::string e_ckpt, e_data, e_split = "test", e_report = "report.json", e_plots;
  int e_folds = 1, e_fold = 0;
  std::uint64_t e_fold_seed = 0;
  bool e_json = false, e_force = false;
  ev->add_option("--checkpoint", e_ckpt, "checkpoint file")->required();
  ev->add_option("--data", e_data, "dataset directory")->required();
  ev->add_option("--folds", e_folds, "cross-validation folds");
  ev->add_option("--fold", e_fold, "fold index");
  ev->add_option("--fold-seed", e_fold_seed, "fold assignment seed");
  ev->add_option("--split", e_split, "test|train|all")
      ->check(CLI::IsMember({"test", "train", "all"}));
  ev->add_option("--report", e_report, "report JSON output path");
  ev->add_option("--plots", e_plots, "directory for comparison plots");
  ev->add_flag("--json", e_json, "print the report JSON to stdout");
  ev->add_flag("--force", e_force, "overwrite existing outputs");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare model variants");
  std::string a_variants = "full,cgan,wo_seg,wo_adaon,wo_lexc";
  std::string a_data, a_test_data, a_out;
  int a_seeds = 3, a_epochs = 30, a_bc = 8;
  std::uint64_t a_seed = 0;
  double a_lambda = 10.0;
  bool a_force = false;
  ab->add_option("--variants", a_variants, "comma-separated variant list");
  ab->add_option("--seeds", a_seeds, "number of seeds per variant")->check(CLI::PositiveNumber);
  ab->add_option("--data", a_data, "training dataset directory")->required();
  ab->add_option("--test-data", a_test_data, "held-out dataset directory (defaults to --data)");
  ab->add_option("--out", a_out, "output directory")->required();
  ab->add_option("--epochs", a_epochs, "epochs per run");
  ab->add_option("--base-channels", a_bc, "network width");
  ab->add_option("--seed", a_seed, "master seed");
  ab->add_option("--lambda", a_lambda, "reconstruction weight");
  ab->add_flag("--force", a_force, "overwrite existing outputs");

  // report
  auto* rp = app.add_subcommand("report", "re-emit the text table from a report JSON");
  std::string r_report, r_out;
  rp->add_option("--report", r_report, "report JSON file")->required();
  rp->add_option("--out", r_out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed())
      return cmd_phantom_generate(g_count, g_size, g_seed, g_inc, g_out, g_noise, g_bias, g_force);
    if (tr->parsed())
      return cmd_train(t_config, t_data, t_out, t_seed, !t_seed_opt->empty(), t_variant, t_epochs,
                       t_bc, t_resume, t_force);
    if (inf->parsed()) return cmd_infer(i_ckpt, i_input, i_out, i_force);
    if (ev->parsed())
      return cmd_eval(e_ckpt, e_data, e_folds, e_fold, e_split, e_fold_seed, e_report, e_plots,
                      e_json, e_force);
    if (ab->parsed())
      return cmd_ablate(a_variants, a_seeds, a_data, a_test_data, a_out, a_epochs, a_bc, a_seed,
                        a_lambda, a_force);
    if (rp->parsed()) return cmd_report(r_report, r_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace synct
