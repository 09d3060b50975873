#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "synct/adain.hpp"
#include "synct/dataset.hpp"
#include "synct/losses.hpp"
#include "synct/optim.hpp"

namespace synct {

// Training variants. The ablations mirror the model's components:
//   full     - global stream + segmentation + AdaON local stream + masked L1
//   cgan     - global stream only, unmasked L1 (local stream and S removed)
//   wo_seg   - global stream + whole-image style/content losses, no local stream
//   wo_adaon - local stream passes MR intensities through (no restyling)
//   wo_lexc  - full local stream, but the reconstruction loss is unmasked
enum class Variant { Full, CGan, WoSeg, WoAdaon, WoLexc };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool variant_has_segmenter(Variant v);
bool variant_has_local_stream(Variant v);
bool variant_uses_exclusion_mask(Variant v);

// Loss combination per variant (LossReport.total):
//   full/wo_adaon:  gan_g + lambda * l_exc
//   cgan/wo_lexc:   gan_g + lambda * l1      (u forced to all-ones)
//   wo_seg:         gan_g + lambda * l_exc + style + content
struct TrainConfig {
  int epochs = 200;
  double lr = 2e-4;
  double beta1 = 0.5, beta2 = 0.999;
  int batch_size = 1;  // the training protocol is batch size 1
  double lambda = 10.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::Full;
  int base_channels = 16;
  int checkpoint_every = 10;

  std::filesystem::path data_dir;
  int folds = 1;
  int fold = 0;
  std::uint64_t fold_seed = 0;
  std::filesystem::path out_dir;  // empty = no files written

  int adaon_steps = 400;
  double adaon_lr = 1e-3;
  double adaon_style_weight = 1.0;
  // Eq-4 denominator alternative: mean over included pixels instead of all
  bool l_exc_mean_over_included = false;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// All trainable state. Immovable: the optimizers hold pointers into the
// parameter tensors.
struct ModelBundle {
  Variant variant;
  int base_channels;
  double lambda;
  bool l_exc_mean_over_included = false;
  std::uint64_t seed = 0;

  Generator G;
  Discriminator D;
  Segmenter S;
  std::array<AdaonModule, kOrganCount> adaon;
  StyleEncoder whole_image_encoder;  // wo_seg's whole-image style/content losses
  OrganStyleBank bank;

  Adam opt_g, opt_d, opt_s;
  int epoch = 0;
  Rng rng;

  explicit ModelBundle(const TrainConfig& config);
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  std::string arch_string() const;
  std::uint64_t arch_hash() const;
  // stable name -> parameter mapping across all networks
  std::vector<std::pair<std::string, ad::Param*>> named_params();
  std::uint64_t params_digest(std::vector<ad::Param*> ps) const;
};

struct TrainingExample {
  std::string record_id;
  Tensor mr, ct;  // normalized
  LabelMap label_mr, label_ct;
};

TrainingExample make_example(const std::string& id, const PhantomPair& pair);
// identity + three flips per record, ids suffixed /f0../f3
std::vector<TrainingExample> augment_examples(const std::string& id, const PhantomPair& pair);

struct TrainLogEntry {
  int epoch = 0;
  LossReport losses;
  double wall_seconds = 0.0;
  std::uint64_t rng_digest = 0;

  nlohmann::json to_json() const;
  static TrainLogEntry from_json(const nlohmann::json& j);
  // equality over the deterministic fields (wall clock excluded)
  bool same_trajectory(const TrainLogEntry& o, double tol = 0.0) const;
};

class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// One optimization step on one example: D update, then G update on the fused
// output, then (when present) S update. Throws TrainingError("...term...")
// on a non-finite loss.
LossReport train_step(ModelBundle& bundle, const TrainingExample& ex);

// The three sub-updates, exposed for the isolation tests.
double d_update(ModelBundle& bundle, const TrainingExample& ex);
LossReport g_update(ModelBundle& bundle, const TrainingExample& ex);
double s_update(ModelBundle& bundle, const TrainingExample& ex);

using StepObserver =
    std::function<void(int epoch, int step, const std::string& record_id, const LossReport&)>;

struct TrainResult {
  std::unique_ptr<ModelBundle> bundle;
  std::vector<TrainLogEntry> log;
};

// AdaON pre-training stage, then the seeded epoch loop over the augmented
// training split. Writes checkpoints and a JSON-lines log when out_dir is set.
TrainResult train(const TrainConfig& config, const StepObserver& observer = nullptr);
// Continues a checkpoint to config.epochs; bit-identical to an uninterrupted
// run with the same config.
TrainResult resume(const TrainConfig& config, const std::filesystem::path& checkpoint,
                   const StepObserver& observer = nullptr);

// Runs the model on one MR slice: segmenter masks (argmax), global stream,
// local stream per variant, fusion, denormalization. Ground-truth labels are
// never read.
struct InferenceOutput {
  ImageSlice synct;
  LabelMap pred_labels;
};
InferenceOutput infer(ModelBundle& bundle, const ImageSlice& mr);

// argmax organ masks from segmenter probabilities
std::array<Mask, kOrganCount> masks_from_probs(const Tensor& probs);

}  // namespace synct
