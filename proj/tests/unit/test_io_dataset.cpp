#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "synct/dataset.hpp"
#include "synct/image_io.hpp"
#include "synct/rng.hpp"

using namespace synct;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("synct_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PhantomPair sample_pair(std::uint64_t seed, int size = 64) {
  PhantomConfig c;
  c.size = size;
  c.seed = seed;
  c.gas_present_mr = true;
  c.gas_present_ct = true;
  c.noise_sigma = 0.02;
  return generate_phantom(c);
}

}  // namespace

TEST_CASE("image and label files round-trip bit-exactly") {
  const fs::path dir = temp_dir("io");
  const PhantomPair pair = sample_pair(1);

  write_image(pair.mr, dir / "a_mr");
  write_image(pair.ct, dir / "a_ct");
  write_label(pair.label_mr, dir / "a_lmr");

  const ImageSlice mr2 = read_image(dir / "a_mr");
  const ImageSlice ct2 = read_image(dir / "a_ct");
  const LabelMap lmr2 = read_label(dir / "a_lmr");
  CHECK(mr2.px == pair.mr.px);
  CHECK(mr2.modality == Modality::MR);
  CHECK(ct2.px == pair.ct.px);
  CHECK(ct2.modality == Modality::CT);
  CHECK(lmr2.cls == pair.label_mr.cls);
  CHECK(lmr2.source_modality == pair.label_mr.source_modality);
}

TEST_CASE("25 subjects across 5 folds partition evenly by subject") {
  const fs::path dir = temp_dir("folds");
  for (int i = 0; i < 25; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "s%03d", i);
    write_record(dir, name, sample_pair(100 + i, 32));
  }
  const DatasetIndex index = load_dataset(dir, 5, 42);
  REQUIRE(index.records.size() == 25);

  std::array<int, 5> per_fold{};
  for (const auto& r : index.records) per_fold[r.fold]++;
  for (int f = 0; f < 5; ++f) CHECK(per_fold[f] == 5);

  // no subject in both train and test of any fold
  for (int f = 0; f < 5; ++f) {
    std::set<std::string> train, test;
    for (const auto* r : index.train_split(f)) train.insert(r->subject_id);
    for (const auto* r : index.test_split(f)) test.insert(r->subject_id);
    CHECK(train.size() == 20);
    CHECK(test.size() == 5);
    for (const auto& s : test) CHECK(train.count(s) == 0);
  }

  // deterministic given the seed, different for another seed
  const DatasetIndex again = load_dataset(dir, 5, 42);
  for (std::size_t i = 0; i < index.records.size(); ++i)
    CHECK(index.records[i].fold == again.records[i].fold);
}

TEST_CASE("folds=1 puts every record in the training split") {
  const fs::path dir = temp_dir("onefold");
  for (int i = 0; i < 4; ++i) write_record(dir, "p" + std::to_string(i), sample_pair(i, 32));
  const DatasetIndex index = load_dataset(dir, 1);
  CHECK(index.train_split(0).size() == 4);
  CHECK(index.test_split(0).empty());
}

TEST_CASE("missing file and dimension mismatch name the offending subject") {
  const fs::path dir = temp_dir("badrec");
  write_record(dir, "good", sample_pair(5, 32));
  write_record(dir, "broken", sample_pair(6, 32));

  SUBCASE("missing file") {
    fs::remove(dir / "broken_ct.raw");
    CHECK_THROWS_WITH_AS(load_dataset(dir, 1), doctest::Contains("broken"), LoadError);
  }
  SUBCASE("dimension mismatch") {
    const PhantomPair other = sample_pair(7, 64);
    write_image(other.ct, dir / "broken_ct");
    CHECK_THROWS_WITH_AS(load_dataset(dir, 1), doctest::Contains("broken"), LoadError);
  }
  SUBCASE("unknown class id") {
    LabelMap bad = sample_pair(6, 32).label_mr;
    bad.cls[10] = 9;
    // bypass write_label's validation by writing raw bytes
    std::ofstream f(dir / "broken_label_mr.raw", std::ios::binary);
    f.write(reinterpret_cast<const char*>(bad.cls.data()),
            static_cast<std::streamsize>(bad.cls.size()));
    f.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir, 1), doctest::Contains("broken"), LoadError);
  }
}
