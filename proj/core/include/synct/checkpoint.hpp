#pragma once

#include <filesystem>
#include <memory>

#include "synct/train.hpp"

namespace synct {

// Single-file binary container (msgpack payload, 8-byte magic): architecture
// hash, every named parameter tensor, optimizer state, style bank, epoch,
// seed and rng state. Doubles are stored as raw float64, so save -> load
// reproduces bit-identical forward passes and training continuations.
void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);

// Rebuilds the bundle recorded in the file. Throws std::runtime_error when
// the stored architecture hash does not match the freshly constructed one.
std::unique_ptr<ModelBundle> load_checkpoint(const std::filesystem::path& path);

}  // namespace synct
