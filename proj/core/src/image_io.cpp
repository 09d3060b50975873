#include "synct/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace synct {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "raster files are little-endian; big-endian hosts are unsupported");

namespace {

void write_bytes(const std::filesystem::path& p, const void* data, std::size_t n) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!f) throw std::runtime_error("short write: " + p.string());
}

std::vector<char> read_bytes(const std::filesystem::path& p, std::size_t expect) {
  std::ifstream f(p, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("cannot open: " + p.string());
  const auto size = static_cast<std::size_t>(f.tellg());
  if (size != expect)
    throw std::runtime_error("size mismatch in " + p.string() + ": got " + std::to_string(size) +
                             ", expected " + std::to_string(expect));
  std::vector<char> buf(size);
  f.seekg(0);
  f.read(buf.data(), static_cast<std::streamsize>(size));
  if (!f) throw std::runtime_error("short read: " + p.string());
  return buf;
}

json read_sidecar(const std::filesystem::path& stem) {
  std::filesystem::path jp = stem;
  jp += ".json";
  std::ifstream f(jp);
  if (!f) throw std::runtime_error("missing sidecar: " + jp.string());
  json j;
  f >> j;
  return j;
}

}  // namespace

void write_image(const ImageSlice& img, const std::filesystem::path& stem) {
  std::filesystem::path raw = stem, side = stem;
  raw += ".raw";
  side += ".json";
  write_bytes(raw, img.px.data(), img.px.size() * sizeof(float));
  json j{{"h", img.h},
         {"w", img.w},
         {"modality", to_string(img.modality)},
         {"units", img.modality == Modality::CT ? "HU" : "arb"}};
  std::ofstream f(side);
  if (!f) throw std::runtime_error("cannot open for writing: " + side.string());
  f << j.dump(2) << "\n";
}

ImageSlice read_image(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  ImageSlice img(j.at("h").get<int>(), j.at("w").get<int>(),
                 modality_from_string(j.at("modality").get<std::string>()));
  std::filesystem::path raw = stem;
  raw += ".raw";
  const auto buf = read_bytes(raw, img.px.size() * sizeof(float));
  std::memcpy(img.px.data(), buf.data(), buf.size());
  return img;
}

void write_label(const LabelMap& lbl, const std::filesystem::path& stem) {
  std::filesystem::path raw = stem, side = stem;
  raw += ".raw";
  side += ".json";
  write_bytes(raw, lbl.cls.data(), lbl.cls.size());
  json j{{"h", lbl.h}, {"w", lbl.w}, {"modality", to_string(lbl.source_modality)}};
  std::ofstream f(side);
  if (!f) throw std::runtime_error("cannot open for writing: " + side.string());
  f << j.dump(2) << "\n";
}

LabelMap read_label(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  LabelMap lbl(j.at("h").get<int>(), j.at("w").get<int>(),
               modality_from_string(j.at("modality").get<std::string>()));
  const auto buf = read_bytes(std::filesystem::path(stem) += ".raw", lbl.cls.size());
  std::memcpy(lbl.cls.data(), buf.data(), buf.size());
  lbl.validate();
  return lbl;
}

void write_pgm(const std::filesystem::path& path, const ImageSlice& img, float lo, float hi) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  const float scale = 255.0f / (hi - lo);
  for (float v : img.px) {
    const int g = static_cast<int>(std::clamp((v - lo) * scale, 0.0f, 255.0f));
    f.put(static_cast<char>(g));
  }
}

void write_ppm(const std::filesystem::path& path, int h, int w, const std::vector<Rgb>& px) {
  if (px.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("write_ppm: buffer size mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "P6\n" << w << " " << h << "\n255\n";
  for (const Rgb& c : px) {
    f.put(static_cast<char>(c.r));
    f.put(static_cast<char>(c.g));
    f.put(static_cast<char>(c.b));
  }
}

}  // namespace synct
