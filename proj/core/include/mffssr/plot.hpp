#pragma once

#include <filesystem>

namespace mffssr {

// Renders the training log (`iter<TAB>loss<TAB>lr`) as an SVG loss curve
// with a log10 loss axis.
void write_loss_curve_svg(const std::filesystem::path& log_file,
                          const std::filesystem::path& out_svg);

// Side-by-side LR / SR / HR comparison strip. LR is nearest-upscaled to
// the SR size; panels are separated by a white gutter.
void write_side_by_side_png(const std::filesystem::path& lr_png,
                            const std::filesystem::path& sr_png,
                            const std::filesystem::path& hr_png,
                            const std::filesystem::path& out_png);

}  // namespace mffssr
