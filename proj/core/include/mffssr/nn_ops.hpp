#pragma once

#include "mffssr/autograd.hpp"

namespace mffssr {

struct ConvSpec {
    int pad = 0;
    int dilation = 1;
    int groups = 1;
};

// 2-D cross-correlation, stride 1. Weight layout is (out_ch, in_ch/groups,
// kh, kw) mapped onto Shape{b,c,h,w}; bias is (1, out_ch, 1, 1) or null.
NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& bias,
               const ConvSpec& spec);

NodeRef add(const NodeRef& a, const NodeRef& b);
NodeRef sub(const NodeRef& a, const NodeRef& b);
NodeRef mul(const NodeRef& a, const NodeRef& b);
NodeRef scale(const NodeRef& a, double k);

// Copies channels [c0, c1) out of x.
NodeRef slice_channels(const NodeRef& x, int c0, int c1);

// Normalizes over the channel axis at every (batch, y, x) position;
// gamma/beta are per-channel affine parameters of shape (1, C, 1, 1).
NodeRef layer_norm_channels(const NodeRef& x, const NodeRef& gamma,
                            const NodeRef& beta);

// Spatial mean per (batch, channel) -> (B, C, 1, 1).
NodeRef global_avg_pool(const NodeRef& x);

// x * s with s of shape (1 or B, C, 1, 1) broadcast over space (and batch
// when s.b == 1).
NodeRef broadcast_mul(const NodeRef& x, const NodeRef& s);

// Channel-halving gates: input (B, 2k, H, W) -> (B, k, H, W).
// simple_gate:    x1 * x2
// nonlinear_gate: x1 * g(x2) with g(z) = z * Phi(z), Phi the standard
//                 normal CDF.
NodeRef simple_gate(const NodeRef& x);
NodeRef nonlinear_gate(const NodeRef& x);

double gelu(double z);
double gelu_deriv(double z);

// Depth-to-space: (B, c*s^2, H, W) -> (B, c, s*H, s*W).
NodeRef pixel_shuffle(const NodeRef& x, int s);

// Half-pixel bilinear upsampling by integer factor s.
NodeRef bilinear_upsample(const NodeRef& x, int s);
Tensor bilinear_upsample_value(const Tensor& x, int s);

// Scaled dot-product attention over width positions, independently per
// (batch, row): out(:, i) = sum_j softmax_j(q_i . k_j / sqrt(C)) v_j.
NodeRef width_attention(const NodeRef& q, const NodeRef& k, const NodeRef& v);

// Row-stochastic attention weights for one (batch, row) slice; test and
// inspection helper sharing the forward path of width_attention.
Tensor width_attention_weights(const Tensor& q, const Tensor& k, int b, int h);

// Scalar node: sum of squared entries.
NodeRef sum_squares(const NodeRef& x);

}  // namespace mffssr
