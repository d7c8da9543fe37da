#pragma once

#include "mffssr/model.hpp"
#include "mffssr/nn_ops.hpp"

namespace mffssr {

struct LossConfig {
    double lambda = 0.01;    // weight of the frequency term
    double epsilon = 1e-3;   // Charbonnier constant
    void validate() const;
};

// Graph-building forms used by the trainer. All reduce to a scalar node.

// Mean over every sample, view, channel and pixel of the squared error.
NodeRef mse_loss_node(const NodeRef& sr_left, const NodeRef& sr_right,
                      const NodeRef& hr_left, const NodeRef& hr_right);

// Per sample i: sqrt(||FFT2(hr_i) - FFT2(sr_i)||^2 + eps^2), averaged over
// samples. The 2-D DFT is unnormalized and applied per channel per view;
// the norm gathers views, channels and both complex components.
NodeRef freq_charbonnier_node(const NodeRef& sr_left, const NodeRef& sr_right,
                              const NodeRef& hr_left, const NodeRef& hr_right,
                              double epsilon);

// mse + lambda * freq_charbonnier.
NodeRef total_loss_node(const NodeRef& sr_left, const NodeRef& sr_right,
                        const NodeRef& hr_left, const NodeRef& hr_right,
                        const LossConfig& cfg);

// Value-level forms over stereo pairs.
double mse_loss(const StereoPair& sr, const StereoPair& hr);
double freq_charbonnier_loss(const StereoPair& sr, const StereoPair& hr,
                             const LossConfig& cfg);
double total_loss(const StereoPair& sr, const StereoPair& hr,
                  const LossConfig& cfg);

}  // namespace mffssr
