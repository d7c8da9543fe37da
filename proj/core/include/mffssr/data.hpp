#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mffssr/rng.hpp"
#include "mffssr/tensor.hpp"

namespace mffssr {

struct SampleRecord {
    std::string id;
    std::filesystem::path hr_left;
    std::filesystem::path hr_right;
    // Present when pre-degraded inputs exist; otherwise LR is synthesized
    // by bicubic downsampling.
    std::optional<std::filesystem::path> lr_left;
    std::optional<std::filesystem::path> lr_right;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<SampleRecord> records;
    int scale = 4;
    int patch_h = 30;  // LR patch size; wide along the disparity axis
    int patch_w = 90;
};

// 8-bit RGB PNG decoded to unit-range doubles, shape (1, 3, H, W).
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& img);

// Flickr1024-style layout: <root>/<split>/<id>_L.png and <id>_R.png. An
// optional <split>/manifest.txt restricts/extends the listing; each line is
// `id` or `id<TAB>lr_left<TAB>lr_right` with paths relative to root.
DatasetManifest load_manifest(const std::filesystem::path& root,
                              const std::string& split, int scale,
                              int patch_h = 30, int patch_w = 90);

// Keys a=-0.5 kernel, antialiased, output (H/s, W/s), clamped to [0, 1].
// Requires H and W divisible by s.
Tensor bicubic_downsample(const Tensor& img, int s);

struct TrainTuple {
    Tensor lr_left, lr_right, hr_left, hr_right;
    std::string id;
};

// HR pair cropped to a multiple of scale plus its LR counterpart.
struct LoadedSample {
    std::string id;
    Tensor hr_left, hr_right, lr_left, lr_right;
};

LoadedSample load_sample(const SampleRecord& record, int scale);

// Crops the same window from both views: LR window (patch_h, patch_w) at a
// random offset, HR window scaled by s at the aligned offset.
TrainTuple sample_patch(const LoadedSample& sample, int scale, int patch_h,
                        int patch_w, Rng& rng);

struct AugmentFlags {
    bool hflip = true;
    bool vflip = true;            // also yields 180-degree rotation combined with hflip
    bool channel_shuffle = true;
    bool rot90 = false;           // off by default: breaks the horizontal-epipolar assumption
};

// Deterministic building blocks, exposed for tests.
TrainTuple hflip_swap(const TrainTuple& t);
TrainTuple vflip(const TrainTuple& t);
TrainTuple shuffle_channels(const TrainTuple& t, const std::array<int, 3>& perm);
TrainTuple rotate90(const TrainTuple& t);

TrainTuple augment(const TrainTuple& t, Rng& rng, const AugmentFlags& flags);

}  // namespace mffssr
