#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "posegen/cvae.hpp"

namespace posegen::io {

/// Everything needed to reproduce a model: layer shapes, every parameter
/// value (hexadecimal floats, bitwise exact), the training configuration and
/// the RNG seeds. Self-describing JSON text.
struct CheckpointInfo {
    int format_version = 1;
    int precision_bits = 32;
    vae::TrainConfig train_config;
    std::int64_t final_iteration = 0;
    std::map<std::string, std::uint64_t> seeds;
};

template <typename T>
void save_checkpoint(const std::string& path, const vae::ModelParams<T>& model,
                     const CheckpointInfo& info);

/// Precision recorded in a checkpoint without loading the tensors.
int checkpoint_precision(const std::string& path);

template <typename T>
std::pair<vae::ModelParams<T>, CheckpointInfo> load_checkpoint(const std::string& path);

}  // namespace posegen::io
