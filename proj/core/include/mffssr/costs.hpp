#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mffssr/model.hpp"

namespace mffssr {

// Parameter and multiply-accumulate accounting. MACs follow the analytic
// conventions: convs cost C_in*C_out*k^2*H*W/groups, attention costs
// 2*H*W^2*C' per direction; elementwise work is not counted. The pair
// total covers one stereo forward; single-view is pair/2.
struct CostReport {
    std::int64_t total_params = 0;
    std::vector<std::pair<std::string, std::int64_t>> params_breakdown;
    double macs_single_view = 0.0;
    double macs_pair = 0.0;
    std::vector<std::pair<std::string, double>> macs_breakdown;  // pair convention
    int input_h = 128;
    int input_w = 128;
};

// Exact count of learnable scalars (weights, biases, LN affine, gammas).
// RepConv counts the train-time branches by default; `fused` counts the
// deploy kernel instead.
CostReport param_count(const ModelConfig& cfg, bool fused = false);

// Analytic MAC estimate at the given input size (both views that size).
CostReport macs_estimate(const ModelConfig& cfg, int input_h, int input_w);

// Full report: params plus MACs at the given input size.
CostReport cost_report(const ModelConfig& cfg, int input_h = 128,
                       int input_w = 128, bool fused = false);

// Named ablation presets from the element/weight studies.
struct AblationSpec {
    std::string name;
    ModelConfig apply(const ModelConfig& base) const;

    static AblationSpec by_name(const std::string& name);  // throws UsageError
    static const std::vector<std::string>& names();
};

}  // namespace mffssr
