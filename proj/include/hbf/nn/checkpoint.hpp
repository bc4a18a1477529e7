// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoint: magic "HBFN", format version, network spec
// (fields plus the hash of its text form), parameter blobs, batchnorm running
// estimates, Adam moments, plateau state and epoch. Little-endian throughout.
#pragma once

#include <filesystem>

#include "hbf/nn/trainer.hpp"

namespace hbf::nn {

void save_checkpoint(const std::filesystem::path& path, TrainState& state);
/// Throws IntegrityError on a bad magic, version, spec hash or truncated file.
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace hbf::nn
