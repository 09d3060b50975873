#include "synct/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "synct/checkpoint.hpp"

namespace synct {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::CGan: return "cgan";
    case Variant::WoSeg: return "wo_seg";
    case Variant::WoAdaon: return "wo_adaon";
    case Variant::WoLexc: return "wo_lexc";
  }
  return "full";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "cgan") return Variant::CGan;
  if (s == "wo_seg") return Variant::WoSeg;
  if (s == "wo_adaon") return Variant::WoAdaon;
  if (s == "wo_lexc") return Variant::WoLexc;
  throw std::invalid_argument("unknown variant: " + s);
}

bool variant_has_segmenter(Variant v) {
  return v == Variant::Full || v == Variant::WoAdaon || v == Variant::WoLexc;
}
bool variant_has_local_stream(Variant v) { return variant_has_segmenter(v); }
bool variant_uses_exclusion_mask(Variant v) {
  return v == Variant::Full || v == Variant::WoAdaon || v == Variant::WoSeg;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (batch_size != 1) throw std::invalid_argument("TrainConfig: batch_size is fixed at 1");
  if (base_channels < 4) throw std::invalid_argument("TrainConfig: base_channels must be >= 4");
  if (checkpoint_every < 1) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
  if (folds < 1 || fold < 0 || (folds > 1 && fold >= folds))
    throw std::invalid_argument("TrainConfig: bad fold selection");
  if (adaon_steps < 1 || adaon_lr <= 0.0)
    throw std::invalid_argument("TrainConfig: bad AdaON settings");
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"lr", lr},
              {"beta1", beta1},
              {"beta2", beta2},
              {"batch_size", batch_size},
              {"lambda", lambda},
              {"seed", seed},
              {"variant", synct::to_string(variant)},
              {"base_channels", base_channels},
              {"checkpoint_every", checkpoint_every},
              {"data_dir", data_dir.string()},
              {"folds", folds},
              {"fold", fold},
              {"fold_seed", fold_seed},
              {"out_dir", out_dir.string()},
              {"adaon_steps", adaon_steps},
              {"adaon_lr", adaon_lr},
              {"adaon_style_weight", adaon_style_weight},
              {"l_exc_mean_over_included", l_exc_mean_over_included}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("base_channels")) c.base_channels = j.at("base_channels").get<int>();
  if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<int>();
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("folds")) c.folds = j.at("folds").get<int>();
  if (j.contains("fold")) c.fold = j.at("fold").get<int>();
  if (j.contains("fold_seed")) c.fold_seed = j.at("fold_seed").get<std::uint64_t>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("adaon_steps")) c.adaon_steps = j.at("adaon_steps").get<int>();
  if (j.contains("adaon_lr")) c.adaon_lr = j.at("adaon_lr").get<double>();
  if (j.contains("adaon_style_weight"))
    c.adaon_style_weight = j.at("adaon_style_weight").get<double>();
  if (j.contains("l_exc_mean_over_included"))
    c.l_exc_mean_over_included = j.at("l_exc_mean_over_included").get<bool>();
  return c;
}

// ------------------------------------------------------------- ModelBundle

ModelBundle::ModelBundle(const TrainConfig& config)
    : variant(config.variant),
      base_channels(config.base_channels),
      lambda(config.lambda),
      l_exc_mean_over_included(config.l_exc_mean_over_included),
      seed(config.seed),
      G(config.base_channels),
      D(config.base_channels),
      S(config.base_channels),
      adaon{AdaonModule("adaon.B"), AdaonModule("adaon.R"), AdaonModule("adaon.G")},
      whole_image_encoder("wholeF"),
      rng(derive_seed(config.seed, 0)) {
  init_params(G, derive_seed(config.seed, 1));
  init_params(D, derive_seed(config.seed, 2));
  init_params(S, derive_seed(config.seed, 3));
  for (int o = 0; o < kOrganCount; ++o) {
    Rng r(derive_seed(config.seed, 4 + o));
    adaon[o].f.init(r, 0.02);
    adaon[o].g.init(r, 0.02);
  }
  init_params(whole_image_encoder, derive_seed(config.seed, 7));

  const AdamConfig ac{config.lr, config.beta1, config.beta2, 1e-8};
  opt_g = Adam(G.params(), ac);
  opt_d = Adam(D.params(), ac);
  opt_s = Adam(S.params(), ac);
}

std::string ModelBundle::arch_string() const {
  std::string s = G.arch() + D.arch() + S.arch();
  for (const auto& m : adaon) s += m.arch();
  s += whole_image_encoder.arch();
  s += "|bc=" + std::to_string(base_channels);
  s += "|variant=" + synct::to_string(variant);
  s += l_exc_mean_over_included ? "|lexc=included" : "|lexc=all";
  return s;
}

std::uint64_t ModelBundle::arch_hash() const { return fnv1a(arch_string()); }

std::vector<std::pair<std::string, ad::Param*>> ModelBundle::named_params() {
  std::vector<std::pair<std::string, ad::Param*>> out;
  auto push = [&out](std::vector<ad::Param*> ps) {
    for (auto* p : ps) out.emplace_back(p->name, p);
  };
  push(G.params());
  push(D.params());
  push(S.params());
  for (auto& m : adaon) push(m.params());
  push(whole_image_encoder.params());
  return out;
}

std::uint64_t ModelBundle::params_digest(std::vector<ad::Param*> ps) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto* p : ps) h = fnv1a(p->v.data(), p->v.size() * sizeof(double), h);
  return h;
}

// ---------------------------------------------------------------- examples

TrainingExample make_example(const std::string& id, const PhantomPair& pair) {
  TrainingExample ex;
  ex.record_id = id;
  ex.mr = normalize_for_training(pair.mr);
  ex.ct = normalize_for_training(pair.ct);
  ex.label_mr = pair.label_mr;
  ex.label_ct = pair.label_ct;
  return ex;
}

std::vector<TrainingExample> augment_examples(const std::string& id, const PhantomPair& pair) {
  std::vector<TrainingExample> out;
  const auto aug = augment_flip(pair);
  for (int i = 0; i < 4; ++i)
    out.push_back(make_example(id + "/f" + std::to_string(i), aug[i]));
  return out;
}

// --------------------------------------------------------------- log entry

json TrainLogEntry::to_json() const {
  return json{{"epoch", epoch},
              {"gan_d", losses.gan_d},
              {"gan_g", losses.gan_g},
              {"l1", losses.l1},
              {"l_exc", losses.l_exc},
              {"seg_ce", losses.seg_ce},
              {"style", losses.style},
              {"content", losses.content},
              {"total", losses.total},
              {"lambda", losses.lambda},
              {"wall_seconds", wall_seconds},
              {"rng_digest", rng_digest}};
}

TrainLogEntry TrainLogEntry::from_json(const json& j) {
  TrainLogEntry e;
  e.epoch = j.at("epoch").get<int>();
  e.losses.gan_d = j.at("gan_d").get<double>();
  e.losses.gan_g = j.at("gan_g").get<double>();
  e.losses.l1 = j.at("l1").get<double>();
  e.losses.l_exc = j.at("l_exc").get<double>();
  e.losses.seg_ce = j.at("seg_ce").get<double>();
  e.losses.style = j.at("style").get<double>();
  e.losses.content = j.at("content").get<double>();
  e.losses.total = j.at("total").get<double>();
  e.losses.lambda = j.at("lambda").get<double>();
  e.wall_seconds = j.at("wall_seconds").get<double>();
  e.rng_digest = j.at("rng_digest").get<std::uint64_t>();
  return e;
}

bool TrainLogEntry::same_trajectory(const TrainLogEntry& o, double tol) const {
  auto eq = [tol](double a, double b) { return std::abs(a - b) <= tol; };
  return epoch == o.epoch && rng_digest == o.rng_digest && eq(losses.gan_d, o.losses.gan_d) &&
         eq(losses.gan_g, o.losses.gan_g) && eq(losses.l1, o.losses.l1) &&
         eq(losses.l_exc, o.losses.l_exc) && eq(losses.seg_ce, o.losses.seg_ce) &&
         eq(losses.style, o.losses.style) && eq(losses.content, o.losses.content) &&
         eq(losses.total, o.losses.total);
}

// -------------------------------------------------------------- train step

std::array<Mask, kOrganCount> masks_from_probs(const Tensor& probs) {
  std::array<Mask, kOrganCount> masks;
  for (auto& m : masks) m = Mask(probs.h(), probs.w());
  const int plane = probs.plane();
  for (int p = 0; p < plane; ++p) {
    int best = 0;
    double best_v = probs[p];
    for (int c = 1; c < probs.c(); ++c) {
      const double v = probs[static_cast<std::size_t>(c) * plane + p];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    if (best != kBackground) masks[organ_index(static_cast<std::uint8_t>(best))].v[p] = 1;
  }
  return masks;
}

namespace {

void check_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw TrainingError(std::string("non-finite loss term: ") + term);
}

struct GeneratorObjective {
  int total_node = -1;
  double gan_g = 0, l_exc = 0, style = 0, content = 0;
};

// Builds the generator-side objective on the given tape (fused output node).
GeneratorObjective generator_objective(ModelBundle& b, ad::Tape& tg, int fused_node,
                                       const TrainingExample& ex) {
  GeneratorObjective obj;
  const int d_fake = b.D.forward(tg, fused_node);
  const int gan_g_node = ops::lsgan_g(tg, d_fake);

  const ExclusionMask u = variant_uses_exclusion_mask(b.variant)
                              ? exclusion_mask(ex.label_mr, ex.label_ct)
                              : ExclusionMask::all_ones(ex.mr.h(), ex.mr.w());
  int l_exc_node = ops::masked_l1(tg, fused_node, ex.ct, u);
  if (b.l_exc_mean_over_included) {
    std::size_t included = 0;
    for (auto m : u.m) included += m;
    const double scale =
        included == 0 ? 0.0 : static_cast<double>(u.m.size()) / static_cast<double>(included);
    l_exc_node = ad::weighted_sum(tg, {{l_exc_node, scale}});
  }

  std::vector<std::pair<int, double>> terms = {{gan_g_node, 1.0}, {l_exc_node, b.lambda}};

  int style_node = -1, content_node = -1;
  if (b.variant == Variant::WoSeg) {
    // whole-image style/content: target statistics from the paired real CT
    ad::Tape tref(false);
    const auto mr_feats = b.whole_image_encoder.forward(tref, tref.leaf(ex.mr));
    const auto ct_feats = b.whole_image_encoder.forward(tref, tref.leaf(ex.ct));
    const Tensor t_target =
        adain(tref.val(mr_feats[2]), tref.val(ct_feats[2])).out;

    const auto syn_feats = b.whole_image_encoder.forward(tg, fused_node);
    content_node = ad::mse_const(tg, syn_feats[2], t_target);
    std::vector<std::pair<int, double>> style_terms;
    for (int l = 0; l < 3; ++l) {
      const ChannelStats ct_st = channel_statistics(tref.val(ct_feats[l]));
      Tensor mu_t(static_cast<int>(ct_st.mean.size()), 1, 1);
      Tensor sd_t(static_cast<int>(ct_st.stddev.size()), 1, 1);
      for (std::size_t c = 0; c < ct_st.mean.size(); ++c) {
        mu_t[c] = ct_st.mean[c];
        sd_t[c] = ct_st.stddev[c];
      }
      style_terms.emplace_back(ad::mse_const(tg, ad::channel_mean(tg, syn_feats[l], nullptr), mu_t),
                               1.0);
      style_terms.emplace_back(
          ad::mse_const(tg, ad::channel_std(tg, syn_feats[l], nullptr), sd_t), 1.0);
    }
    style_node = ad::weighted_sum(tg, style_terms);
    terms.emplace_back(style_node, 1.0);
    terms.emplace_back(content_node, 1.0);
  }

  obj.total_node = ad::weighted_sum(tg, terms);
  obj.gan_g = tg.val(gan_g_node)[0];
  obj.l_exc = tg.val(l_exc_node)[0];
  if (style_node >= 0) obj.style = tg.val(style_node)[0];
  if (content_node >= 0) obj.content = tg.val(content_node)[0];
  return obj;
}

}  // namespace

LossReport train_step(ModelBundle& b, const TrainingExample& ex) {
  LossReport rep;
  rep.lambda = b.lambda;
  const bool has_s = variant_has_segmenter(b.variant);

  // segmenter forward; its argmax masks drive the local stream this step
  ad::Tape tape_s(true);
  int probs_node = -1;
  std::array<Mask, kOrganCount> pred_masks;
  if (has_s) {
    probs_node = b.S.forward(tape_s, tape_s.leaf(ex.mr));
    pred_masks = masks_from_probs(tape_s.val(probs_node));
  }

  // generator forward + fusion (tape reused by the G update below)
  ad::Tape tape_g(true);
  const int g_out = b.G.forward(tape_g, tape_g.leaf(ex.mr), b.rng, /*training=*/true);
  int fused_node = g_out;
  if (variant_has_local_stream(b.variant)) {
    const LocalStreamOutput local =
        local_stream(ex.mr, pred_masks, b.bank, b.adaon, b.variant == Variant::WoAdaon);
    fused_node = fuse_op(tape_g, g_out, local.combined, local.union_mask);
  }
  const Tensor fused_detached = tape_g.val(fused_node);

  // --- discriminator update (its own tape; G stays untouched)
  {
    ad::Tape td(true);
    const int d_real = b.D.forward(td, td.leaf(ex.ct));
    const int d_fake = b.D.forward(td, td.leaf(fused_detached));
    const int dl = ops::lsgan_d(td, d_real, d_fake);
    rep.gan_d = td.val(dl)[0];
    check_finite(rep.gan_d, "gan_d");
    b.opt_d.zero_grad();
    td.backward(dl);
    b.opt_d.step();
  }

  // --- generator update against the updated discriminator
  {
    const GeneratorObjective obj = generator_objective(b, tape_g, fused_node, ex);
    rep.gan_g = obj.gan_g;
    rep.l_exc = obj.l_exc;
    rep.style = obj.style;
    rep.content = obj.content;
    rep.l1 = l1_loss(fused_detached, ex.ct);
    check_finite(rep.gan_g, "gan_g");
    check_finite(rep.l_exc, "l_exc");
    check_finite(rep.style, "style");
    check_finite(rep.content, "content");
    b.opt_g.zero_grad();
    tape_g.backward(obj.total_node);
    b.opt_g.step();
    b.opt_d.zero_grad();  // D grads picked up through the G backward are discarded
  }

  // --- segmenter update
  if (has_s) {
    const int ce = ops::seg_ce(tape_s, probs_node, ex.label_mr);
    rep.seg_ce = tape_s.val(ce)[0];
    check_finite(rep.seg_ce, "seg_ce");
    b.opt_s.zero_grad();
    tape_s.backward(ce);
    b.opt_s.step();
  }

  rep.total = rep.gan_g + b.lambda * rep.l_exc + rep.style + rep.content;
  check_finite(rep.total, "total");
  return rep;
}

double d_update(ModelBundle& b, const TrainingExample& ex) {
  std::array<Mask, kOrganCount> pred_masks;
  if (variant_has_segmenter(b.variant)) pred_masks = masks_from_probs(b.S.infer(ex.mr));
  Tensor fused = b.G.infer(ex.mr);
  if (variant_has_local_stream(b.variant)) {
    const LocalStreamOutput local =
        local_stream(ex.mr, pred_masks, b.bank, b.adaon, b.variant == Variant::WoAdaon);
    fused = fuse(fused, local, local.union_mask);
  }
  ad::Tape td(true);
  const int dl = ops::lsgan_d(td, b.D.forward(td, td.leaf(ex.ct)), b.D.forward(td, td.leaf(fused)));
  const double v = td.val(dl)[0];
  b.opt_d.zero_grad();
  td.backward(dl);
  b.opt_d.step();
  return v;
}

LossReport g_update(ModelBundle& b, const TrainingExample& ex) {
  LossReport rep;
  rep.lambda = b.lambda;
  std::array<Mask, kOrganCount> pred_masks;
  if (variant_has_segmenter(b.variant)) pred_masks = masks_from_probs(b.S.infer(ex.mr));

  ad::Tape tg(true);
  const int g_out = b.G.forward(tg, tg.leaf(ex.mr), b.rng, true);
  int fused_node = g_out;
  if (variant_has_local_stream(b.variant)) {
    const LocalStreamOutput local =
        local_stream(ex.mr, pred_masks, b.bank, b.adaon, b.variant == Variant::WoAdaon);
    fused_node = fuse_op(tg, g_out, local.combined, local.union_mask);
  }
  const GeneratorObjective obj = generator_objective(b, tg, fused_node, ex);
  rep.gan_g = obj.gan_g;
  rep.l_exc = obj.l_exc;
  rep.style = obj.style;
  rep.content = obj.content;
  rep.l1 = l1_loss(tg.val(fused_node), ex.ct);
  rep.total = rep.gan_g + b.lambda * rep.l_exc + rep.style + rep.content;
  b.opt_g.zero_grad();
  tg.backward(obj.total_node);
  b.opt_g.step();
  b.opt_d.zero_grad();
  return rep;
}

double s_update(ModelBundle& b, const TrainingExample& ex) {
  if (!variant_has_segmenter(b.variant))
    throw TrainingError("s_update: variant has no segmenter");
  ad::Tape ts(true);
  const int probs = b.S.forward(ts, ts.leaf(ex.mr));
  const int ce = ops::seg_ce(ts, probs, ex.label_mr);
  const double v = ts.val(ce)[0];
  b.opt_s.zero_grad();
  ts.backward(ce);
  b.opt_s.step();
  return v;
}

// ------------------------------------------------------------ train driver

namespace {

bool variant_needs_adaon_training(Variant v) {
  return v == Variant::Full || v == Variant::WoLexc;
}

void adaon_pretrain(ModelBundle& bundle, const std::vector<PhantomPair>& pairs,
                    const TrainConfig& config) {
  if (!variant_needs_adaon_training(bundle.variant)) return;
  for (int o = 0; o < kOrganCount; ++o) {
    const std::uint8_t cls = kOrganClasses[o];
    std::vector<MaskedPatch> contents, styles;
    for (const auto& pair : pairs) {
      const Mask m_mr = mask_of_class(pair.label_mr, cls);
      if (m_mr.count() >= 2) {
        const Tensor mr = normalize_for_training(pair.mr);
        MaskedPatch p;
        p.mask = m_mr;
        p.image = Tensor(1, mr.h(), mr.w());
        for (std::size_t i = 0; i < p.image.size(); ++i) p.image[i] = mr[i] * m_mr.v[i];
        contents.push_back(std::move(p));
      }
      const Mask m_ct = mask_of_class(pair.label_ct, cls);
      if (m_ct.count() >= 2) {
        const Tensor ct = normalize_for_training(pair.ct);
        MaskedPatch p;
        p.mask = m_ct;
        p.image = Tensor(1, ct.h(), ct.w());
        for (std::size_t i = 0; i < p.image.size(); ++i) p.image[i] = ct[i] * m_ct.v[i];
        styles.push_back(std::move(p));
      }
    }
    if (contents.empty() || styles.empty()) continue;  // organ absent from the split
    bundle.bank.organs[o] = build_organ_style(bundle.adaon[o].f, styles);
    if (!bundle.bank.organs[o].available()) continue;
    AdaonTrainConfig ac;
    ac.steps = config.adaon_steps;
    ac.lr = config.adaon_lr;
    ac.style_weight = config.adaon_style_weight;
    train_adaon(bundle.adaon[o], bundle.bank.organs[o], contents, ac);
  }
}

void run_epochs(ModelBundle& bundle, const std::vector<TrainingExample>& examples,
                const TrainConfig& config, std::vector<TrainLogEntry>& log,
                const StepObserver& observer) {
  std::ofstream log_file;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    log_file.open(config.out_dir / "train_log.jsonl", std::ios::app);
  }

  for (int e = bundle.epoch + 1; e <= config.epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    bundle.rng.shuffle(order);

    LossReport sums;
    int step = 0;
    for (std::size_t idx : order) {
      const LossReport rep = train_step(bundle, examples[idx]);
      sums += rep;
      if (observer) observer(e, step, examples[idx].record_id, rep);
      ++step;
    }
    sums *= 1.0 / static_cast<double>(examples.size());

    TrainLogEntry entry;
    entry.epoch = e;
    entry.losses = sums;
    entry.rng_digest = bundle.rng.state_digest();
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.push_back(entry);
    if (log_file.is_open()) log_file << entry.to_json().dump() << "\n";

    bundle.epoch = e;
    if (!config.out_dir.empty() && (e % config.checkpoint_every == 0 || e == config.epochs)) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%04d.ckpt", e);
      save_checkpoint(bundle, config.out_dir / name);
      save_checkpoint(bundle, config.out_dir / "last.ckpt");
    }
  }
}

std::vector<PhantomPair> load_train_pairs(const TrainConfig& config) {
  const DatasetIndex index = load_dataset(config.data_dir, config.folds, config.fold_seed);
  const auto recs = index.train_split(config.fold);
  if (recs.empty()) throw TrainingError("empty training split");
  std::vector<PhantomPair> pairs;
  pairs.reserve(recs.size());
  for (const auto* r : recs) pairs.push_back(read_record(*r));
  return pairs;
}

std::vector<TrainingExample> build_examples(const TrainConfig& config,
                                            const std::vector<PhantomPair>& pairs) {
  const DatasetIndex index = load_dataset(config.data_dir, config.folds, config.fold_seed);
  const auto recs = index.train_split(config.fold);
  std::vector<TrainingExample> out;
  out.reserve(pairs.size() * 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto aug = augment_examples(recs[i]->subject_id, pairs[i]);
    for (auto& ex : aug) out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  TrainResult result;
  result.bundle = std::make_unique<ModelBundle>(config);
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    save_checkpoint(*result.bundle, config.out_dir / "last.ckpt");
  }
  if (config.epochs == 0) return result;

  const auto pairs = load_train_pairs(config);
  adaon_pretrain(*result.bundle, pairs, config);
  const auto examples = build_examples(config, pairs);
  run_epochs(*result.bundle, examples, config, result.log, observer);
  return result;
}

TrainResult resume(const TrainConfig& config, const std::filesystem::path& checkpoint,
                   const StepObserver& observer) {
  config.validate();
  TrainResult result;
  result.bundle = load_checkpoint(checkpoint);
  {
    const ModelBundle expect(config);
    if (expect.arch_hash() != result.bundle->arch_hash())
      throw TrainingError("resume: architecture hash mismatch between checkpoint and config");
  }
  if (config.epochs <= result.bundle->epoch) return result;

  const auto pairs = load_train_pairs(config);
  if (result.bundle->epoch == 0) adaon_pretrain(*result.bundle, pairs, config);
  const auto examples = build_examples(config, pairs);
  run_epochs(*result.bundle, examples, config, result.log, observer);
  return result;
}

InferenceOutput infer(ModelBundle& bundle, const ImageSlice& mr) {
  const Tensor mr_norm = normalize_for_training(mr);

  std::array<Mask, kOrganCount> masks;
  LabelMap pred(mr.h, mr.w, Modality::MR);
  if (variant_has_segmenter(bundle.variant)) {
    const Tensor probs = bundle.S.infer(mr_norm);
    masks = masks_from_probs(probs);
    for (int o = 0; o < kOrganCount; ++o)
      for (std::size_t i = 0; i < pred.cls.size(); ++i)
        if (masks[o].v[i]) pred.cls[i] = kOrganClasses[o];
  }

  Tensor out = bundle.G.infer(mr_norm);
  if (variant_has_local_stream(bundle.variant)) {
    const LocalStreamOutput local = local_stream(mr_norm, masks, bundle.bank, bundle.adaon,
                                                 bundle.variant == Variant::WoAdaon);
    out = fuse(out, local, local.union_mask);
  }
  return InferenceOutput{denormalize_ct(out), std::move(pred)};
}

}  // namespace synct
