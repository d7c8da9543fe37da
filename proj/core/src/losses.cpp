#include "mffssr/losses.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "mffssr/errors.hpp"
#include "mffssr/fft.hpp"

namespace mffssr {

void LossConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("loss lambda must be >= 0");
    if (epsilon <= 0.0) throw ConfigError("loss epsilon must be > 0");
}

NodeRef mse_loss_node(const NodeRef& sr_left, const NodeRef& sr_right,
                      const NodeRef& hr_left, const NodeRef& hr_right) {
    check_same_shape(sr_left->value, hr_left->value, "mse_loss left");
    check_same_shape(sr_right->value, hr_right->value, "mse_loss right");
    check_same_shape(sr_left->value, sr_right->value, "mse_loss views");
    NodeRef ss = add(sum_squares(sub(sr_left, hr_left)),
                     sum_squares(sub(sr_right, hr_right)));
    const double denom = 2.0 * static_cast<double>(sr_left->value.numel());
    return scale(ss, 1.0 / denom);
}

NodeRef freq_charbonnier_node(const NodeRef& sr_left, const NodeRef& sr_right,
                              const NodeRef& hr_left, const NodeRef& hr_right,
                              double epsilon) {
    check_same_shape(sr_left->value, hr_left->value, "freq_charbonnier left");
    check_same_shape(sr_right->value, hr_right->value, "freq_charbonnier right");
    check_same_shape(sr_left->value, sr_right->value, "freq_charbonnier views");
    if (epsilon <= 0.0) throw ConfigError("freq_charbonnier: epsilon must be > 0");

    const Shape s = sr_left->value.shape();
    const int B = s.b, C = s.c, H = s.h, W = s.w;

    // Per-sample spectral energy of the residual, both views and all
    // channels pooled before the square root.
    auto denom = std::make_shared<std::vector<double>>(static_cast<size_t>(B), 0.0);
    double loss = 0.0;
    {
        std::vector<double> energy(static_cast<size_t>(B), 0.0);
        const std::pair<const Tensor*, const Tensor*> views[] = {
            {&sr_left->value, &hr_left->value},
            {&sr_right->value, &hr_right->value}};
        for (int b = 0; b < B; ++b) {
            for (const auto& [srv, hrv] : views) {
                for (int c = 0; c < C; ++c) {
                    auto spec_sr = fft::dft2d(srv->ptr(b, c, 0, 0), H, W);
                    auto spec_hr = fft::dft2d(hrv->ptr(b, c, 0, 0), H, W);
                    for (size_t i = 0; i < spec_sr.size(); ++i) {
                        const auto d = spec_hr[i] - spec_sr[i];
                        energy[b] += d.real() * d.real() + d.imag() * d.imag();
                    }
                }
            }
            (*denom)[b] = std::sqrt(energy[b] + epsilon * epsilon);
            loss += (*denom)[b];
        }
        loss /= B;
    }

    const double hw = static_cast<double>(H) * W;
    return make_op(
        Tensor::scalar(loss), {sr_left, sr_right, hr_left, hr_right},
        [sr_left, sr_right, hr_left, hr_right, denom, hw, B](Node& self) {
            // d/dsr of ||F(hr - sr)||^2 is -2*H*W*(hr - sr) since the
            // unnormalized DFT satisfies F^H F = H*W*I (Parseval).
            const double g = self.grad[0] / B;
            auto push = [&](const NodeRef& sr, const NodeRef& hr) {
                if (!sr->requires_grad) return;
                const Shape s = sr->value.shape();
                Tensor dx(s);
                for (int b = 0; b < s.b; ++b) {
                    const double k = g * hw / (*denom)[b];
                    const std::int64_t off = sr->value.index(b, 0, 0, 0);
                    const std::int64_t n =
                        static_cast<std::int64_t>(s.c) * s.h * s.w;
                    for (std::int64_t i = 0; i < n; ++i)
                        dx[off + i] = k * (sr->value[off + i] - hr->value[off + i]);
                }
                sr->accumulate_grad(dx);
            };
            push(sr_left, hr_left);
            push(sr_right, hr_right);
            if (hr_left->requires_grad || hr_right->requires_grad) {
                // Targets are constants in every supported path.
                throw UsageError("freq_charbonnier: gradients w.r.t. targets unsupported");
            }
        });
}

NodeRef total_loss_node(const NodeRef& sr_left, const NodeRef& sr_right,
                        const NodeRef& hr_left, const NodeRef& hr_right,
                        const LossConfig& cfg) {
    cfg.validate();
    NodeRef mse = mse_loss_node(sr_left, sr_right, hr_left, hr_right);
    NodeRef fc = freq_charbonnier_node(sr_left, sr_right, hr_left, hr_right,
                                       cfg.epsilon);
    return add(mse, scale(fc, cfg.lambda));
}

double mse_loss(const StereoPair& sr, const StereoPair& hr) {
    NoGradGuard guard;
    return mse_loss_node(constant(sr.left), constant(sr.right),
                         constant(hr.left), constant(hr.right))->value[0];
}

double freq_charbonnier_loss(const StereoPair& sr, const StereoPair& hr,
                             const LossConfig& cfg) {
    NoGradGuard guard;
    return freq_charbonnier_node(constant(sr.left), constant(sr.right),
                                 constant(hr.left), constant(hr.right),
                                 cfg.epsilon)->value[0];
}

double total_loss(const StereoPair& sr, const StereoPair& hr,
                  const LossConfig& cfg) {
    NoGradGuard guard;
    return total_loss_node(constant(sr.left), constant(sr.right),
                           constant(hr.left), constant(hr.right), cfg)->value[0];
}

}  // namespace mffssr
