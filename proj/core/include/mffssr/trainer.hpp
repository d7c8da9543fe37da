#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mffssr/data.hpp"
#include "mffssr/losses.hpp"
#include "mffssr/model.hpp"
#include "mffssr/serialize.hpp"

namespace mffssr {

struct TrainConfig {
    double lr0 = 5e-4;
    double lr_min = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 0.0;
    std::int64_t total_iters = 200000;  // paper-scale; desk presets are far smaller
    int batch_size = 4;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 1000;
    std::int64_t eval_every = 0;  // 0 disables the periodic hook

    void validate() const;
};

// lr_min + 0.5 (lr0 - lr_min) (1 + cos(pi t / T)); clamps to lr_min past T.
double cosine_lr(std::int64_t t, std::int64_t total, double lr0, double lr_min);

// One Lion update over all parameters:
//   u = sign(beta1 m + (1 - beta1) g), with sign(0) = 0
//   p <- p - lr (u + weight_decay p)
//   m <- beta2 m + (1 - beta2) g
void lion_step(const std::vector<NamedParam>& params, std::vector<Tensor>& momentum,
               double lr, const TrainConfig& cfg);

// A training batch with views stacked along the batch axis.
struct Batch {
    Tensor lr_left, lr_right, hr_left, hr_right;
    std::string ids;
};

Batch make_batch(const std::vector<TrainTuple>& tuples);

using BatchProvider = std::function<Batch(std::int64_t iter, Rng& rng)>;

// Samples batch_size augmented patches per call; decoded images are cached.
BatchProvider dataset_provider(const DatasetManifest& manifest, int batch_size,
                               const AugmentFlags& flags);

struct TrainHooks {
    // Invoked every eval_every iterations (after the step) and at the end.
    std::function<void(std::int64_t iter)> periodic;
};

struct TrainResult {
    std::int64_t iters_run = 0;
    double final_loss = 0.0;
};

// iterate: sample -> forward -> total_loss -> backward -> lion_step.
// Logs `iter<TAB>loss<TAB>lr` per step (loss is pre-update). A non-finite
// loss aborts with a NumericError naming the batch. Checkpoints capture
// weights, momentum and the data rng, so a resumed run replays the exact
// uninterrupted trajectory.
TrainResult train_loop(Model& model, const TrainConfig& tcfg,
                       const LossConfig& lcfg, const BatchProvider& provider,
                       std::ostream* log,
                       const std::filesystem::path& checkpoint_path = {},
                       const std::filesystem::path& resume_from = {},
                       const TrainHooks& hooks = {});

}  // namespace mffssr
