#include "synct/dataset.hpp"

#include <algorithm>

#include "synct/image_io.hpp"
#include "synct/rng.hpp"

namespace synct {

namespace fs = std::filesystem;

std::vector<const DatasetRecord*> DatasetIndex::train_split(int fold) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records)
    if (folds <= 1 || r.fold != fold) out.push_back(&r);
  return out;
}

std::vector<const DatasetRecord*> DatasetIndex::test_split(int fold) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records)
    if (folds > 1 && r.fold == fold) out.push_back(&r);
  return out;
}

DatasetIndex load_dataset(const fs::path& root, int folds, std::uint64_t fold_seed) {
  if (folds < 1) throw std::invalid_argument("load_dataset: folds must be >= 1");
  if (!fs::is_directory(root)) throw std::runtime_error("load_dataset: no such directory: " + root.string());

  std::vector<std::string> subjects;
  const std::string suffix = "_mr.json";
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    const std::string subject = name.substr(0, name.size() - suffix.size());
    if (subject.ends_with("_label")) continue;  // that's a label sidecar, not a subject
    subjects.push_back(subject);
  }
  std::sort(subjects.begin(), subjects.end());

  DatasetIndex index;
  index.folds = folds;
  index.fold_seed = fold_seed;

  for (const auto& subject : subjects) {
    DatasetRecord rec;
    rec.subject_id = subject;
    rec.mr_path = root / (subject + "_mr");
    rec.ct_path = root / (subject + "_ct");
    rec.label_mr_path = root / (subject + "_label_mr");
    rec.label_ct_path = root / (subject + "_label_ct");
    for (const auto& stem : {rec.mr_path, rec.ct_path, rec.label_mr_path, rec.label_ct_path}) {
      for (const char* ext : {".raw", ".json"}) {
        fs::path p = stem;
        p += ext;
        if (!fs::exists(p)) throw LoadError(subject, "missing file " + p.string());
      }
    }
    try {
      const PhantomPair pair = read_record(rec);
      if (pair.mr.h != pair.ct.h || pair.mr.w != pair.ct.w || pair.label_mr.h != pair.mr.h ||
          pair.label_mr.w != pair.mr.w || pair.label_ct.h != pair.mr.h ||
          pair.label_ct.w != pair.mr.w)
        throw LoadError(subject, "dimension mismatch across the record");
      if (pair.mr.modality != Modality::MR || pair.ct.modality != Modality::CT)
        throw LoadError(subject, "unexpected modality tags");
    } catch (const LoadError&) {
      throw;
    } catch (const std::exception& e) {
      throw LoadError(subject, e.what());
    }
    index.records.push_back(std::move(rec));
  }

  // subject-level fold assignment: seeded shuffle, then round-robin deal
  std::vector<std::size_t> order(index.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(fold_seed, 0));
  rng.shuffle(order);
  for (std::size_t k = 0; k < order.size(); ++k)
    index.records[order[k]].fold = static_cast<int>(k % folds);
  return index;
}

DatasetRecord write_record(const fs::path& root, const std::string& subject_id,
                           const PhantomPair& pair) {
  fs::create_directories(root);
  DatasetRecord rec;
  rec.subject_id = subject_id;
  rec.mr_path = root / (subject_id + "_mr");
  rec.ct_path = root / (subject_id + "_ct");
  rec.label_mr_path = root / (subject_id + "_label_mr");
  rec.label_ct_path = root / (subject_id + "_label_ct");
  write_image(pair.mr, rec.mr_path);
  write_image(pair.ct, rec.ct_path);
  write_label(pair.label_mr, rec.label_mr_path);
  write_label(pair.label_ct, rec.label_ct_path);
  return rec;
}

PhantomPair read_record(const DatasetRecord& rec) {
  PhantomPair pair;
  pair.mr = read_image(rec.mr_path);
  pair.ct = read_image(rec.ct_path);
  pair.label_mr = read_label(rec.label_mr_path);
  pair.label_ct = read_label(rec.label_ct_path);
  return pair;
}

}  // namespace synct
