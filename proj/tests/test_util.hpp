#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mffssr/autograd.hpp"
#include "mffssr/nn_ops.hpp"
#include "mffssr/rng.hpp"
#include "mffssr/tensor.hpp"

namespace mffssr::testutil {

inline Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

// Reference cross-correlation written as the plainest possible loops;
// independent of the library implementation.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                           int pad, int dilation, int groups) {
    const int B = x.shape().b, Cin = x.shape().c, H = x.shape().h, W = x.shape().w;
    const int Cout = w.shape().b, K = w.shape().h;
    const int cg_in = Cin / groups, cg_out = Cout / groups;
    const int Ho = H + 2 * pad - dilation * (K - 1);
    const int Wo = W + 2 * pad - dilation * (K - 1);
    Tensor out(Shape{B, Cout, Ho, Wo});
    for (int b = 0; b < B; ++b)
        for (int oc = 0; oc < Cout; ++oc)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    double acc = bias.empty() ? 0.0 : bias.at(0, oc, 0, 0);
                    const int g = oc / cg_out;
                    for (int icr = 0; icr < cg_in; ++icr)
                        for (int kh = 0; kh < K; ++kh)
                            for (int kw = 0; kw < K; ++kw) {
                                const int ih = oh - pad + kh * dilation;
                                const int iw = ow - pad + kw * dilation;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                acc += w.at(oc, icr, kh, kw) *
                                       x.at(b, g * cg_in + icr, ih, iw);
                            }
                    out.at(b, oc, oh, ow) = acc;
                }
    return out;
}

// Central finite differences over every element of every leaf against the
// analytic reverse-mode gradients. `build` must construct a fresh scalar
// graph from the leaves' current values.
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::int64_t checked = 0;
};

inline GradCheckResult check_gradients(const std::vector<NodeRef>& leaves,
                                       const std::function<NodeRef()>& build,
                                       double step = 1e-5) {
    NodeRef loss = build();
    for (const auto& l : leaves) l->zero_grad();
    backward(loss);
    std::vector<Tensor> analytic;
    for (const auto& l : leaves) analytic.push_back(l->grad_or_zeros());

    GradCheckResult result;
    for (size_t li = 0; li < leaves.size(); ++li) {
        Tensor& v = leaves[li]->value;
        for (std::int64_t i = 0; i < v.numel(); ++i) {
            const double keep = v[i];
            v[i] = keep + step;
            const double fp = build()->value[0];
            v[i] = keep - step;
            const double fm = build()->value[0];
            v[i] = keep;
            const double fd = (fp - fm) / (2.0 * step);
            const double an = analytic[li][i];
            result.max_rel_err = std::max(result.max_rel_err, rel_err(an, fd, 1e-6));
            ++result.checked;
        }
    }
    return result;
}

}  // namespace mffssr::testutil
