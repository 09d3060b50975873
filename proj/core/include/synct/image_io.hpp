#pragma once

#include <filesystem>
#include <string>

#include "synct/phantom.hpp"

namespace synct {

// On-disk formats:
//   image: <stem>.raw  little-endian float32, row-major
//          <stem>.json sidecar {"h":int,"w":int,"modality":"MR"|"CT","units":str}
//   label: <stem>.raw  uint8, row-major
//          <stem>.json sidecar {"h":int,"w":int,"modality":"MR"|"CT"}
// write_image("d/s000_mr") produces d/s000_mr.raw + d/s000_mr.json.

void write_image(const ImageSlice& img, const std::filesystem::path& stem);
ImageSlice read_image(const std::filesystem::path& stem);

void write_label(const LabelMap& lbl, const std::filesystem::path& stem);
LabelMap read_label(const std::filesystem::path& stem);

// 8-bit grayscale PGM with the given display window (lo..hi -> 0..255)
void write_pgm(const std::filesystem::path& path, const ImageSlice& img, float lo, float hi);
// RGB PPM
struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
};
void write_ppm(const std::filesystem::path& path, int h, int w, const std::vector<Rgb>& px);

}  // namespace synct
