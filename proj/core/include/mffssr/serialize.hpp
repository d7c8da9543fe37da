#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mffssr/model.hpp"

namespace mffssr {

// Weight archive: "MFFSSRWA" magic, u32 version, u64 manifest length, JSON
// manifest, then f64 little-endian tensor payloads in manifest order. The
// manifest records the model config and per-tensor name/dtype/shape/offset.
// Checkpoints reuse the container with optimizer momentum tensors
// ("opt.m.<param>") and a trainer section (step, rng state).

struct TrainerState {
    std::int64_t step = 0;
    std::vector<Tensor> momentum;  // aligned with Model::parameters() order
    std::string rng_state;
};

void save_weights(const std::filesystem::path& path, const Model& model,
                  bool deploy = false);

// Reads just the embedded config.
ModelConfig peek_config(const std::filesystem::path& path);

// Builds a model from the embedded config and loads every tensor.
Model load_model(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainerState& state);

// Loads parameters into `model` (config must match) and returns the
// trainer state.
TrainerState load_checkpoint(const std::filesystem::path& path, Model& model);

struct ArchiveInfo {
    std::string kind;  // "weights" or "checkpoint"
    ModelConfig config;
    std::vector<std::pair<std::string, Shape>> tensors;
    std::int64_t total_scalars = 0;  // model tensors only, optimizer excluded
};

ArchiveInfo inspect_archive(const std::filesystem::path& path);

}  // namespace mffssr
