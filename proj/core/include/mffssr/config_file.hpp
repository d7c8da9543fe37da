#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mffssr/data.hpp"
#include "mffssr/losses.hpp"
#include "mffssr/model.hpp"
#include "mffssr/trainer.hpp"

namespace mffssr {

struct DataConfig {
    std::string root = "data";
    std::string split = "train";
    std::string eval_split = "val";
    int patch_h = 30;
    int patch_w = 90;
    AugmentFlags augment;
};

// Flat UTF-8 `key = value` file with [model] [train] [data] [loss]
// sections; keys mirror the config struct fields.
struct FullConfig {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
    LossConfig loss;
};

FullConfig parse_config_file(const std::filesystem::path& path);
FullConfig parse_config_text(std::istream& in, const std::string& origin = "<text>");

// Applies one `section.key=value` override.
void apply_override(FullConfig& cfg, const std::string& assignment);

void write_config(std::ostream& os, const FullConfig& cfg);

}  // namespace mffssr
