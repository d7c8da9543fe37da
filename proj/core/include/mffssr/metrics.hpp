#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mffssr/data.hpp"
#include "mffssr/model.hpp"

namespace mffssr {

struct PerImageMetrics {
    std::string id;
    double psnr_l = 0.0, psnr_r = 0.0;
    double ssim_l = 0.0, ssim_r = 0.0;
};

// Mirrors the two reporting conventions: left view only, and the per-image
// mean over both views averaged across images.
struct MetricReport {
    double psnr_left = 0.0;
    double ssim_left = 0.0;
    double psnr_avg = 0.0;
    double ssim_avg = 0.0;
    std::vector<PerImageMetrics> per_image;
};

// 10*log10(peak^2 / MSE); identical images report +inf (serialized "inf").
double psnr(const Tensor& x, const Tensor& y, double peak = 1.0);

// Gaussian-window SSIM (11x11, sigma 1.5, C1=(0.01 peak)^2, C2=(0.03 peak)^2)
// computed per RGB channel then averaged; symmetric (reflect) padding keeps
// images smaller than the window well-defined.
double ssim(const Tensor& x, const Tensor& y, double peak = 1.0);

struct EvalConfig {
    int border_crop = 0;  // optional crop before metrics; off by default
    bool fused = false;   // run RepConv in deploy form
};

MetricReport evaluate_dataset(const Model& model, const DatasetManifest& dataset,
                              const EvalConfig& cfg = {});

// Flat `key = value` schema with one `image.N` line per pair.
void write_report(std::ostream& os, const MetricReport& report);

}  // namespace mffssr
