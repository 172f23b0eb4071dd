#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mgan/model.hpp"

namespace mgan {

// Checkpoint file layout:
//   8 bytes   magic "MGANCKPT"
//   u32 LE    format version (1)
//   u64 LE    manifest length in bytes
//   manifest  UTF-8 JSON: {"config": {...}, "metadata": {...},
//             "params": [{"name", "shape", "offset"}, ...]}
//   values    f64 LE, parameters concatenated in manifest order
struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgan
