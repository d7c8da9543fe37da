#include "mffssr/nn_ops.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

struct ConvDims {
    int bn, cin, hin, win;
    int cout, cg_in, cg_out, kh, kw;
    int hout, wout;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor* bias,
                   const ConvSpec& spec) {
    ConvDims d{};
    d.bn = x.shape().b;
    d.cin = x.shape().c;
    d.hin = x.shape().h;
    d.win = x.shape().w;
    d.cout = w.shape().b;
    d.kh = w.shape().h;
    d.kw = w.shape().w;
    if (spec.groups < 1 || d.cin % spec.groups != 0 || d.cout % spec.groups != 0) {
        throw ShapeError("conv2d: groups=" + std::to_string(spec.groups) +
                         " does not divide channels in=" + std::to_string(d.cin) +
                         " out=" + std::to_string(d.cout));
    }
    d.cg_in = d.cin / spec.groups;
    d.cg_out = d.cout / spec.groups;
    if (w.shape().c != d.cg_in) {
        throw ShapeError("conv2d: weight expects " + std::to_string(w.shape().c) +
                         " input channels per group, actual " + std::to_string(d.cg_in));
    }
    if (bias && !bias->empty() &&
        !(bias->shape() == Shape{1, d.cout, 1, 1})) {
        throw ShapeError("conv2d: bias shape expected (1, " + std::to_string(d.cout) +
                         ", 1, 1), actual " + bias->shape().str());
    }
    d.hout = d.hin + 2 * spec.pad - spec.dilation * (d.kh - 1);
    d.wout = d.win + 2 * spec.pad - spec.dilation * (d.kw - 1);
    if (d.hout < 1 || d.wout < 1) {
        throw ShapeError("conv2d: input " + x.shape().str() +
                         " too small for kernel " + w.shape().str());
    }
    return d;
}

Tensor conv2d_value(const Tensor& x, const Tensor& w, const Tensor* bias,
                    const ConvSpec& spec) {
    const ConvDims d = conv_dims(x, w, bias, spec);
    Tensor out(Shape{d.bn, d.cout, d.hout, d.wout});

    if (bias && !bias->empty()) {
        for (int b = 0; b < d.bn; ++b)
            for (int oc = 0; oc < d.cout; ++oc) {
                double bv = bias->at(0, oc, 0, 0);
                double* orow = out.ptr(b, oc, 0, 0);
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(d.hout) * d.wout; ++i)
                    orow[i] = bv;
            }
    }

    for (int b = 0; b < d.bn; ++b) {
        for (int g = 0; g < spec.groups; ++g) {
            for (int ocr = 0; ocr < d.cg_out; ++ocr) {
                const int oc = g * d.cg_out + ocr;
                for (int icr = 0; icr < d.cg_in; ++icr) {
                    const int ic = g * d.cg_in + icr;
                    for (int kh = 0; kh < d.kh; ++kh) {
                        const int oh_lo = std::max(0, spec.pad - kh * spec.dilation);
                        const int oh_hi = std::min(d.hout,
                            d.hin + spec.pad - kh * spec.dilation);
                        for (int kw = 0; kw < d.kw; ++kw) {
                            const double wv = w.at(oc, icr, kh, kw);
                            if (wv == 0.0) continue;
                            const int ow_lo = std::max(0, spec.pad - kw * spec.dilation);
                            const int ow_hi = std::min(d.wout,
                                d.win + spec.pad - kw * spec.dilation);
                            for (int oh = oh_lo; oh < oh_hi; ++oh) {
                                const int ih = oh + kh * spec.dilation - spec.pad;
                                const double* xrow = x.ptr(b, ic, ih, 0);
                                double* orow = out.ptr(b, oc, oh, 0);
                                const int shift = kw * spec.dilation - spec.pad;
                                for (int ow = ow_lo; ow < ow_hi; ++ow)
                                    orow[ow] += wv * xrow[ow + shift];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& x, const Tensor& w, Node& xn, Node& wn,
                     Node* bn_node, const ConvSpec& spec, Node& self) {
    const ConvDims d = conv_dims(x, w, nullptr, spec);
    const Tensor& go = self.grad;

    if (bn_node && bn_node->requires_grad) {
        Tensor db(Shape{1, d.cout, 1, 1});
        for (int b = 0; b < d.bn; ++b)
            for (int oc = 0; oc < d.cout; ++oc) {
                const double* grow = go.ptr(b, oc, 0, 0);
                double acc = 0.0;
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(d.hout) * d.wout; ++i)
                    acc += grow[i];
                db.at(0, oc, 0, 0) += acc;
            }
        bn_node->accumulate_grad(db);
    }

    if (wn.requires_grad) {
        Tensor dw(w.shape());
        for (int b = 0; b < d.bn; ++b) {
            for (int g = 0; g < spec.groups; ++g) {
                for (int ocr = 0; ocr < d.cg_out; ++ocr) {
                    const int oc = g * d.cg_out + ocr;
                    for (int icr = 0; icr < d.cg_in; ++icr) {
                        const int ic = g * d.cg_in + icr;
                        for (int kh = 0; kh < d.kh; ++kh) {
                            const int oh_lo = std::max(0, spec.pad - kh * spec.dilation);
                            const int oh_hi = std::min(d.hout,
                                d.hin + spec.pad - kh * spec.dilation);
                            for (int kw = 0; kw < d.kw; ++kw) {
                                const int ow_lo = std::max(0, spec.pad - kw * spec.dilation);
                                const int ow_hi = std::min(d.wout,
                                    d.win + spec.pad - kw * spec.dilation);
                                const int shift = kw * spec.dilation - spec.pad;
                                double acc = 0.0;
                                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                                    const int ih = oh + kh * spec.dilation - spec.pad;
                                    const double* xrow = x.ptr(b, ic, ih, 0);
                                    const double* grow = go.ptr(b, oc, oh, 0);
                                    for (int ow = ow_lo; ow < ow_hi; ++ow)
                                        acc += grow[ow] * xrow[ow + shift];
                                }
                                dw.at(oc, icr, kh, kw) += acc;
                            }
                        }
                    }
                }
            }
        }
        wn.accumulate_grad(dw);
    }

    if (xn.requires_grad) {
        Tensor dx(x.shape());
        for (int b = 0; b < d.bn; ++b) {
            for (int g = 0; g < spec.groups; ++g) {
                for (int ocr = 0; ocr < d.cg_out; ++ocr) {
                    const int oc = g * d.cg_out + ocr;
                    for (int icr = 0; icr < d.cg_in; ++icr) {
                        const int ic = g * d.cg_in + icr;
                        for (int kh = 0; kh < d.kh; ++kh) {
                            const int oh_lo = std::max(0, spec.pad - kh * spec.dilation);
                            const int oh_hi = std::min(d.hout,
                                d.hin + spec.pad - kh * spec.dilation);
                            for (int kw = 0; kw < d.kw; ++kw) {
                                const double wv = w.at(oc, icr, kh, kw);
                                if (wv == 0.0) continue;
                                const int ow_lo = std::max(0, spec.pad - kw * spec.dilation);
                                const int ow_hi = std::min(d.wout,
                                    d.win + spec.pad - kw * spec.dilation);
                                const int shift = kw * spec.dilation - spec.pad;
                                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                                    const int ih = oh + kh * spec.dilation - spec.pad;
                                    double* dxrow = dx.ptr(b, ic, ih, 0);
                                    const double* grow = go.ptr(b, oc, oh, 0);
                                    for (int ow = ow_lo; ow < ow_hi; ++ow)
                                        dxrow[ow + shift] += wv * grow[ow];
                                }
                            }
                        }
                    }
                }
            }
        }
        xn.accumulate_grad(dx);
    }
}

void check_even_channels(const Tensor& x, const char* what) {
    if (x.shape().c % 2 != 0) {
        throw ShapeError(std::string(what) + ": channel count must be even, actual " +
                         std::to_string(x.shape().c));
    }
}

}  // namespace

NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& bias,
               const ConvSpec& spec) {
    Tensor out = conv2d_value(x->value, w->value,
                              bias ? &bias->value : nullptr, spec);
    std::vector<NodeRef> inputs{x, w};
    if (bias) inputs.push_back(bias);
    return make_op(std::move(out), std::move(inputs),
                   [x, w, bias, spec](Node& self) {
                       conv2d_backward(x->value, w->value, *x, *w,
                                       bias ? bias.get() : nullptr, spec, self);
                   });
}

NodeRef add(const NodeRef& a, const NodeRef& b) {
    check_same_shape(a->value, b->value, "add");
    Tensor out = a->value;
    out.axpy(1.0, b->value);
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) a->accumulate_grad(self.grad);
        if (b->requires_grad) b->accumulate_grad(self.grad);
    });
}

NodeRef sub(const NodeRef& a, const NodeRef& b) {
    check_same_shape(a->value, b->value, "sub");
    Tensor out = a->value;
    out.axpy(-1.0, b->value);
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) a->accumulate_grad(self.grad);
        if (b->requires_grad) {
            Tensor g = self.grad;
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = -g[i];
            b->accumulate_grad(g);
        }
    });
}

NodeRef mul(const NodeRef& a, const NodeRef& b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            Tensor g(a->value.shape());
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] * b->value[i];
            a->accumulate_grad(g);
        }
        if (b->requires_grad) {
            Tensor g(b->value.shape());
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] * a->value[i];
            b->accumulate_grad(g);
        }
    });
}

NodeRef scale(const NodeRef& a, double k) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = k * a->value[i];
    return make_op(std::move(out), {a}, [a, k](Node& self) {
        if (!a->requires_grad) return;
        Tensor g(a->value.shape());
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = k * self.grad[i];
        a->accumulate_grad(g);
    });
}

NodeRef slice_channels(const NodeRef& x, int c0, int c1) {
    const Shape s = x->value.shape();
    if (c0 < 0 || c1 > s.c || c0 >= c1) {
        throw ShapeError("slice_channels: range [" + std::to_string(c0) + ", " +
                         std::to_string(c1) + ") invalid for " + s.str());
    }
    Tensor out(Shape{s.b, c1 - c0, s.h, s.w});
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    for (int b = 0; b < s.b; ++b)
        for (int c = c0; c < c1; ++c) {
            const double* src = x->value.ptr(b, c, 0, 0);
            double* dst = out.ptr(b, c - c0, 0, 0);
            std::copy(src, src + plane, dst);
        }
    return make_op(std::move(out), {x}, [x, c0, c1, plane](Node& self) {
        if (!x->requires_grad) return;
        Tensor dx(x->value.shape());
        const Shape s = x->value.shape();
        for (int b = 0; b < s.b; ++b)
            for (int c = c0; c < c1; ++c) {
                const double* src = self.grad.ptr(b, c - c0, 0, 0);
                double* dst = dx.ptr(b, c, 0, 0);
                for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
            }
        x->accumulate_grad(dx);
    });
}

NodeRef layer_norm_channels(const NodeRef& x, const NodeRef& gamma,
                            const NodeRef& beta) {
    const Shape s = x->value.shape();
    if (!(gamma->value.shape() == Shape{1, s.c, 1, 1}) ||
        !(beta->value.shape() == Shape{1, s.c, 1, 1})) {
        throw ShapeError("layer_norm_channels: affine params expected (1, " +
                         std::to_string(s.c) + ", 1, 1)");
    }
    const int C = s.c;
    const double invC = 1.0 / C;
    Tensor out(s);
    // Normalized activations and the inverse stddev are reused by backward.
    auto xhat = std::make_shared<Tensor>(s);
    auto inv_std = std::make_shared<Tensor>(Shape{s.b, 1, s.h, s.w});
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    for (int b = 0; b < s.b; ++b) {
        for (std::int64_t p = 0; p < plane; ++p) {
            double mean = 0.0;
            for (int c = 0; c < C; ++c) mean += x->value[x->value.index(b, c, 0, 0) + p];
            mean *= invC;
            double var = 0.0;
            for (int c = 0; c < C; ++c) {
                const double dv = x->value[x->value.index(b, c, 0, 0) + p] - mean;
                var += dv * dv;
            }
            var *= invC;
            const double istd = 1.0 / std::sqrt(var + kLayerNormEps);
            (*inv_std)[inv_std->index(b, 0, 0, 0) + p] = istd;
            for (int c = 0; c < C; ++c) {
                const std::int64_t idx = x->value.index(b, c, 0, 0) + p;
                const double xh = (x->value[idx] - mean) * istd;
                (*xhat)[idx] = xh;
                out[idx] = gamma->value.at(0, c, 0, 0) * xh + beta->value.at(0, c, 0, 0);
            }
        }
    }
    return make_op(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, xhat, inv_std, plane, C, invC](Node& self) {
        const Shape s = x->value.shape();
        Tensor dgamma(Shape{1, C, 1, 1});
        Tensor dbeta(Shape{1, C, 1, 1});
        Tensor dx(s);
        for (int b = 0; b < s.b; ++b) {
            for (std::int64_t p = 0; p < plane; ++p) {
                double mean_dxhat = 0.0;
                double mean_dxhat_xhat = 0.0;
                for (int c = 0; c < C; ++c) {
                    const std::int64_t idx = x->value.index(b, c, 0, 0) + p;
                    const double g = self.grad[idx];
                    const double xh = (*xhat)[idx];
                    dbeta.at(0, c, 0, 0) += g;
                    dgamma.at(0, c, 0, 0) += g * xh;
                    const double dxh = g * gamma->value.at(0, c, 0, 0);
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * xh;
                }
                mean_dxhat *= invC;
                mean_dxhat_xhat *= invC;
                const double istd = (*inv_std)[inv_std->index(b, 0, 0, 0) + p];
                for (int c = 0; c < C; ++c) {
                    const std::int64_t idx = x->value.index(b, c, 0, 0) + p;
                    const double dxh = self.grad[idx] * gamma->value.at(0, c, 0, 0);
                    const double xh = (*xhat)[idx];
                    dx[idx] = istd * (dxh - mean_dxhat - xh * mean_dxhat_xhat);
                }
            }
        }
        if (x->requires_grad) x->accumulate_grad(dx);
        if (gamma->requires_grad) gamma->accumulate_grad(dgamma);
        if (beta->requires_grad) beta->accumulate_grad(dbeta);
    });
}

NodeRef global_avg_pool(const NodeRef& x) {
    const Shape s = x->value.shape();
    const double inv = 1.0 / (static_cast<double>(s.h) * s.w);
    Tensor out(Shape{s.b, s.c, 1, 1});
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < s.c; ++c) {
            const double* row = x->value.ptr(b, c, 0, 0);
            double acc = 0.0;
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.h) * s.w; ++i)
                acc += row[i];
            out.at(b, c, 0, 0) = acc * inv;
        }
    return make_op(std::move(out), {x}, [x, inv](Node& self) {
        if (!x->requires_grad) return;
        const Shape s = x->value.shape();
        Tensor dx(s);
        for (int b = 0; b < s.b; ++b)
            for (int c = 0; c < s.c; ++c) {
                const double g = self.grad.at(b, c, 0, 0) * inv;
                double* row = dx.ptr(b, c, 0, 0);
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.h) * s.w; ++i)
                    row[i] = g;
            }
        x->accumulate_grad(dx);
    });
}

NodeRef broadcast_mul(const NodeRef& x, const NodeRef& s) {
    const Shape xs = x->value.shape();
    const Shape ss = s->value.shape();
    if (!((ss.b == 1 || ss.b == xs.b) && ss.c == xs.c && ss.h == 1 && ss.w == 1)) {
        throw ShapeError("broadcast_mul: scale shape " + ss.str() +
                         " incompatible with " + xs.str());
    }
    Tensor out(xs);
    const std::int64_t plane = static_cast<std::int64_t>(xs.h) * xs.w;
    for (int b = 0; b < xs.b; ++b)
        for (int c = 0; c < xs.c; ++c) {
            const double sv = s->value.at(ss.b == 1 ? 0 : b, c, 0, 0);
            const double* src = x->value.ptr(b, c, 0, 0);
            double* dst = out.ptr(b, c, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] * sv;
        }
    return make_op(std::move(out), {x, s}, [x, s, plane](Node& self) {
        const Shape xs = x->value.shape();
        const Shape ss = s->value.shape();
        if (x->requires_grad) {
            Tensor dx(xs);
            for (int b = 0; b < xs.b; ++b)
                for (int c = 0; c < xs.c; ++c) {
                    const double sv = s->value.at(ss.b == 1 ? 0 : b, c, 0, 0);
                    const double* g = self.grad.ptr(b, c, 0, 0);
                    double* dst = dx.ptr(b, c, 0, 0);
                    for (std::int64_t i = 0; i < plane; ++i) dst[i] = g[i] * sv;
                }
            x->accumulate_grad(dx);
        }
        if (s->requires_grad) {
            Tensor ds(ss);
            for (int b = 0; b < xs.b; ++b)
                for (int c = 0; c < xs.c; ++c) {
                    const double* g = self.grad.ptr(b, c, 0, 0);
                    const double* xv = x->value.ptr(b, c, 0, 0);
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < plane; ++i) acc += g[i] * xv[i];
                    ds.at(ss.b == 1 ? 0 : b, c, 0, 0) += acc;
                }
            s->accumulate_grad(ds);
        }
    });
}

double gelu(double z) { return z * 0.5 * (1.0 + std::erf(z * kInvSqrt2)); }

double gelu_deriv(double z) {
    const double cdf = 0.5 * (1.0 + std::erf(z * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    return cdf + z * pdf;
}

namespace {

// Shared structure of the two channel-halving gates: y = x1 * f(x2).
NodeRef halving_gate(const NodeRef& x, const char* what, double (*f)(double),
                     double (*fprime)(double)) {
    check_even_channels(x->value, what);
    const Shape s = x->value.shape();
    const int k = s.c / 2;
    Tensor out(Shape{s.b, k, s.h, s.w});
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    for (int b = 0; b < s.b; ++b)
        for (int c = 0; c < k; ++c) {
            const double* x1 = x->value.ptr(b, c, 0, 0);
            const double* x2 = x->value.ptr(b, c + k, 0, 0);
            double* dst = out.ptr(b, c, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = x1[i] * f(x2[i]);
        }
    return make_op(std::move(out), {x}, [x, k, plane, f, fprime](Node& self) {
        if (!x->requires_grad) return;
        const Shape s = x->value.shape();
        Tensor dx(s);
        for (int b = 0; b < s.b; ++b)
            for (int c = 0; c < k; ++c) {
                const double* x1 = x->value.ptr(b, c, 0, 0);
                const double* x2 = x->value.ptr(b, c + k, 0, 0);
                const double* g = self.grad.ptr(b, c, 0, 0);
                double* d1 = dx.ptr(b, c, 0, 0);
                double* d2 = dx.ptr(b, c + k, 0, 0);
                for (std::int64_t i = 0; i < plane; ++i) {
                    d1[i] = g[i] * f(x2[i]);
                    d2[i] = g[i] * x1[i] * fprime(x2[i]);
                }
            }
        x->accumulate_grad(dx);
    });
}

double identity_fn(double z) { return z; }
double one_fn(double) { return 1.0; }

}  // namespace

NodeRef simple_gate(const NodeRef& x) {
    return halving_gate(x, "simple_gate", identity_fn, one_fn);
}

NodeRef nonlinear_gate(const NodeRef& x) {
    return halving_gate(x, "nonlinear_gate", gelu, gelu_deriv);
}

NodeRef pixel_shuffle(const NodeRef& x, int s) {
    const Shape xs = x->value.shape();
    if (s < 1 || xs.c % (s * s) != 0) {
        throw ShapeError("pixel_shuffle: channels " + std::to_string(xs.c) +
                         " not divisible by s^2 with s=" + std::to_string(s));
    }
    const int oc = xs.c / (s * s);
    Tensor out(Shape{xs.b, oc, xs.h * s, xs.w * s});
    for (int b = 0; b < xs.b; ++b)
        for (int c = 0; c < oc; ++c)
            for (int dy = 0; dy < s; ++dy)
                for (int dx_ = 0; dx_ < s; ++dx_) {
                    const int ic = c * s * s + dy * s + dx_;
                    for (int h = 0; h < xs.h; ++h) {
                        const double* src = x->value.ptr(b, ic, h, 0);
                        double* dst = out.ptr(b, c, h * s + dy, dx_);
                        for (int w = 0; w < xs.w; ++w) dst[w * s] = src[w];
                    }
                }
    return make_op(std::move(out), {x}, [x, s, oc](Node& self) {
        if (!x->requires_grad) return;
        const Shape xs = x->value.shape();
        Tensor dx(xs);
        for (int b = 0; b < xs.b; ++b)
            for (int c = 0; c < oc; ++c)
                for (int dy = 0; dy < s; ++dy)
                    for (int dx_ = 0; dx_ < s; ++dx_) {
                        const int ic = c * s * s + dy * s + dx_;
                        for (int h = 0; h < xs.h; ++h) {
                            double* dst = dx.ptr(b, ic, h, 0);
                            const double* src = self.grad.ptr(b, c, h * s + dy, dx_);
                            for (int w = 0; w < xs.w; ++w) dst[w] = src[w * s];
                        }
                    }
        x->accumulate_grad(dx);
    });
}

namespace {

struct BilinearTaps {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

BilinearTaps bilinear_taps(int in_size, int s) {
    BilinearTaps t;
    const int out_size = in_size * s;
    t.lo.resize(out_size);
    t.hi.resize(out_size);
    t.frac.resize(out_size);
    for (int o = 0; o < out_size; ++o) {
        const double pos = (o + 0.5) / s - 0.5;
        double fl = std::floor(pos);
        int i0 = static_cast<int>(fl);
        double f = pos - fl;
        t.lo[o] = std::clamp(i0, 0, in_size - 1);
        t.hi[o] = std::clamp(i0 + 1, 0, in_size - 1);
        t.frac[o] = f;
    }
    return t;
}

}  // namespace

Tensor bilinear_upsample_value(const Tensor& x, int s) {
    const Shape xs = x.shape();
    const BilinearTaps th = bilinear_taps(xs.h, s);
    const BilinearTaps tw = bilinear_taps(xs.w, s);
    Tensor out(Shape{xs.b, xs.c, xs.h * s, xs.w * s});
    for (int b = 0; b < xs.b; ++b)
        for (int c = 0; c < xs.c; ++c)
            for (int oh = 0; oh < xs.h * s; ++oh) {
                const double fh = th.frac[oh];
                const double* r0 = x.ptr(b, c, th.lo[oh], 0);
                const double* r1 = x.ptr(b, c, th.hi[oh], 0);
                double* dst = out.ptr(b, c, oh, 0);
                for (int ow = 0; ow < xs.w * s; ++ow) {
                    const double fw = tw.frac[ow];
                    const double v0 = r0[tw.lo[ow]] * (1.0 - fw) + r0[tw.hi[ow]] * fw;
                    const double v1 = r1[tw.lo[ow]] * (1.0 - fw) + r1[tw.hi[ow]] * fw;
                    dst[ow] = v0 * (1.0 - fh) + v1 * fh;
                }
            }
    return out;
}

NodeRef bilinear_upsample(const NodeRef& x, int s) {
    Tensor out = bilinear_upsample_value(x->value, s);
    return make_op(std::move(out), {x}, [x, s](Node& self) {
        if (!x->requires_grad) return;
        const Shape xs = x->value.shape();
        const BilinearTaps th = bilinear_taps(xs.h, s);
        const BilinearTaps tw = bilinear_taps(xs.w, s);
        Tensor dx(xs);
        for (int b = 0; b < xs.b; ++b)
            for (int c = 0; c < xs.c; ++c)
                for (int oh = 0; oh < xs.h * s; ++oh) {
                    const double fh = th.frac[oh];
                    double* r0 = dx.ptr(b, c, th.lo[oh], 0);
                    double* r1 = dx.ptr(b, c, th.hi[oh], 0);
                    const double* g = self.grad.ptr(b, c, oh, 0);
                    for (int ow = 0; ow < xs.w * s; ++ow) {
                        const double fw = tw.frac[ow];
                        r0[tw.lo[ow]] += g[ow] * (1.0 - fw) * (1.0 - fh);
                        r0[tw.hi[ow]] += g[ow] * fw * (1.0 - fh);
                        r1[tw.lo[ow]] += g[ow] * (1.0 - fw) * fh;
                        r1[tw.hi[ow]] += g[ow] * fw * fh;
                    }
                }
        x->accumulate_grad(dx);
    });
}

namespace {

// Row-stochastic weights for one (b, h) slice: A[i][j] over width positions.
void attention_slice(const Tensor& q, const Tensor& k, int b, int h,
                     double* a /* W*W */) {
    const Shape s = q.shape();
    const int W = s.w;
    const int C = s.c;
    const double sc = 1.0 / std::sqrt(static_cast<double>(C));
    for (int i = 0; i < W; ++i) {
        double row_max = -1e300;
        for (int j = 0; j < W; ++j) {
            double dot = 0.0;
            for (int c = 0; c < C; ++c) dot += q.at(b, c, h, i) * k.at(b, c, h, j);
            a[i * W + j] = dot * sc;
            row_max = std::max(row_max, a[i * W + j]);
        }
        double denom = 0.0;
        for (int j = 0; j < W; ++j) {
            a[i * W + j] = std::exp(a[i * W + j] - row_max);
            denom += a[i * W + j];
        }
        const double inv = 1.0 / denom;
        for (int j = 0; j < W; ++j) a[i * W + j] *= inv;
    }
}

}  // namespace

Tensor width_attention_weights(const Tensor& q, const Tensor& k, int b, int h) {
    check_same_shape(q, k, "width_attention_weights");
    const int W = q.shape().w;
    Tensor a(Shape{1, 1, W, W});
    attention_slice(q, k, b, h, a.data());
    return a;
}

NodeRef width_attention(const NodeRef& q, const NodeRef& k, const NodeRef& v) {
    check_same_shape(q->value, k->value, "width_attention q/k");
    check_same_shape(q->value, v->value, "width_attention q/v");
    const Shape s = q->value.shape();
    const int B = s.b, C = s.c, H = s.h, W = s.w;
    // Attention weights per (batch, row), kept for the backward pass.
    auto weights = std::make_shared<Tensor>(Shape{B, H, W, W});
    Tensor out(s);
    for (int b = 0; b < B; ++b)
        for (int h = 0; h < H; ++h) {
            double* a = weights->ptr(b, h, 0, 0);
            attention_slice(q->value, k->value, b, h, a);
            for (int c = 0; c < C; ++c) {
                const double* vrow = v->value.ptr(b, c, h, 0);
                double* orow = out.ptr(b, c, h, 0);
                for (int i = 0; i < W; ++i) {
                    double acc = 0.0;
                    const double* arow = a + static_cast<std::int64_t>(i) * W;
                    for (int j = 0; j < W; ++j) acc += arow[j] * vrow[j];
                    orow[i] = acc;
                }
            }
        }
    return make_op(std::move(out), {q, k, v}, [q, k, v, weights](Node& self) {
        const Shape s = q->value.shape();
        const int B = s.b, C = s.c, H = s.h, W = s.w;
        const double sc = 1.0 / std::sqrt(static_cast<double>(C));
        Tensor dq(s), dk(s), dv(s);
        std::vector<double> da(static_cast<size_t>(W) * W);
        std::vector<double> ds_(static_cast<size_t>(W) * W);
        for (int b = 0; b < B; ++b)
            for (int h = 0; h < H; ++h) {
                const double* a = weights->ptr(b, h, 0, 0);
                // dV = A^T g ; dA = g V^T.
                std::fill(da.begin(), da.end(), 0.0);
                for (int c = 0; c < C; ++c) {
                    const double* g = self.grad.ptr(b, c, h, 0);
                    const double* vrow = v->value.ptr(b, c, h, 0);
                    double* dvrow = dv.ptr(b, c, h, 0);
                    for (int i = 0; i < W; ++i) {
                        const double gi = g[i];
                        const double* arow = a + static_cast<std::int64_t>(i) * W;
                        double* darow = da.data() + static_cast<std::int64_t>(i) * W;
                        for (int j = 0; j < W; ++j) {
                            dvrow[j] += arow[j] * gi;
                            darow[j] += gi * vrow[j];
                        }
                    }
                }
                // Softmax backward per row: dS = A .* (dA - rowdot(dA, A)).
                for (int i = 0; i < W; ++i) {
                    const double* arow = a + static_cast<std::int64_t>(i) * W;
                    const double* darow = da.data() + static_cast<std::int64_t>(i) * W;
                    double dot = 0.0;
                    for (int j = 0; j < W; ++j) dot += darow[j] * arow[j];
                    double* dsrow = ds_.data() + static_cast<std::int64_t>(i) * W;
                    for (int j = 0; j < W; ++j) dsrow[j] = arow[j] * (darow[j] - dot);
                }
                // dQ = scale * dS K ; dK = scale * dS^T Q.
                for (int c = 0; c < C; ++c) {
                    const double* qrow = q->value.ptr(b, c, h, 0);
                    const double* krow = k->value.ptr(b, c, h, 0);
                    double* dqrow = dq.ptr(b, c, h, 0);
                    double* dkrow = dk.ptr(b, c, h, 0);
                    for (int i = 0; i < W; ++i) {
                        const double* dsrow = ds_.data() + static_cast<std::int64_t>(i) * W;
                        double accq = 0.0;
                        for (int j = 0; j < W; ++j) {
                            accq += dsrow[j] * krow[j];
                            dkrow[j] += sc * dsrow[j] * qrow[i];
                        }
                        dqrow[i] += sc * accq;
                    }
                }
            }
        if (q->requires_grad) q->accumulate_grad(dq);
        if (k->requires_grad) k->accumulate_grad(dk);
        if (v->requires_grad) v->accumulate_grad(dv);
    });
}

NodeRef sum_squares(const NodeRef& x) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < x->value.numel(); ++i)
        acc += x->value[i] * x->value[i];
    return make_op(Tensor::scalar(acc), {x}, [x](Node& self) {
        if (!x->requires_grad) return;
        const double g = self.grad[0];
        Tensor dx(x->value.shape());
        for (std::int64_t i = 0; i < dx.numel(); ++i) dx[i] = 2.0 * g * x->value[i];
        x->accumulate_grad(dx);
    });
}

}  // namespace mffssr
