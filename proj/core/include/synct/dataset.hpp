#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "synct/phantom.hpp"

namespace synct {

struct DatasetRecord {
  std::string subject_id;
  std::filesystem::path mr_path, ct_path, label_mr_path, label_ct_path;  // stems, no extension
  int fold = 0;
};

class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& subject, const std::string& what)
      : std::runtime_error("subject '" + subject + "': " + what), subject_id(subject) {}
  std::string subject_id;
};

// Validated index over a dataset directory. Folds partition subjects, so no
// subject appears in both train and test of any fold.
struct DatasetIndex {
  std::vector<DatasetRecord> records;  // sorted by subject_id
  int folds = 1;
  std::uint64_t fold_seed = 0;

  std::vector<const DatasetRecord*> train_split(int fold) const;
  std::vector<const DatasetRecord*> test_split(int fold) const;
};

// Scans root for '<subject>_mr.json' sidecars and validates each quadruple
// (<subject>_{mr,ct,label_mr,label_ct}.{raw,json}): existence, equal
// dimensions, known class ids. Fold assignment shuffles subjects with
// fold_seed and deals them round-robin.
DatasetIndex load_dataset(const std::filesystem::path& root, int folds, std::uint64_t fold_seed = 0);

// Writes the four files of one record under root with the canonical names.
DatasetRecord write_record(const std::filesystem::path& root, const std::string& subject_id,
                           const PhantomPair& pair);

PhantomPair read_record(const DatasetRecord& rec);

}  // namespace synct
