#include "mffssr/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mffssr/errors.hpp"

namespace mffssr {

std::string to_string(FfnKind k) {
    return k == FfnKind::kIrf ? "IRF" : "simple_FFN";
}

std::string to_string(CrossModule m) {
    switch (m) {
        case CrossModule::kCvim: return "CVIM";
        case CrossModule::kScam: return "SCAM";
        default: return "none";
    }
}

FfnKind ffn_kind_from_string(const std::string& s) {
    if (s == "IRF" || s == "irf") return FfnKind::kIrf;
    if (s == "simple_FFN" || s == "simple_ffn" || s == "ffn") return FfnKind::kSimpleFfn;
    throw ConfigError("unknown ffn_kind '" + s + "' (expected IRF or simple_FFN)");
}

CrossModule cross_module_from_string(const std::string& s) {
    if (s == "CVIM" || s == "cvim") return CrossModule::kCvim;
    if (s == "SCAM" || s == "scam") return CrossModule::kScam;
    if (s == "none") return CrossModule::kNone;
    throw ConfigError("unknown cross_module '" + s + "' (expected CVIM, SCAM or none)");
}

ModelConfig ModelConfig::defaults_for_scale(int scale) {
    ModelConfig cfg;
    cfg.scale = scale;
    if (scale == 2) {
        cfg.num_blocks = 16;
        cfg.channels = 64;
    } else {
        cfg.num_blocks = 24;
        cfg.channels = 48;
    }
    return cfg;
}

namespace {

int checked_round(double v, const char* what) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9) {
        throw ConfigError(std::string(what) + " = " + std::to_string(v) +
                          " is not a whole channel count");
    }
    return static_cast<int>(r);
}

}  // namespace

int ModelConfig::intra_channels() const {
    return checked_round(theta * expanded_channels(), "theta * C_e");
}

int ModelConfig::cross_channels() const {
    return expanded_channels() - intra_channels();
}

void ModelConfig::validate() const {
    if (scale != 2 && scale != 4)
        throw ConfigError("scale must be 2 or 4, got " + std::to_string(scale));
    if (num_blocks < 0)
        throw ConfigError("num_blocks must be >= 0, got " + std::to_string(num_blocks));
    if (channels < 4)
        throw ConfigError("channels must be >= 4, got " + std::to_string(channels));
    if (!(theta > 0.0 && theta < 1.0))
        throw ConfigError("theta must lie in (0, 1), got " + std::to_string(theta));
    if (mfef_expansion < 1 || irf_expansion < 1)
        throw ConfigError("expansion factors must be >= 1");
    if (lka_dilation < 1)
        throw ConfigError("lka_dilation must be >= 1");
    const int a = intra_channels();
    const int b = cross_channels();
    if (a < 1 || b < 1)
        throw ConfigError("theta split leaves an empty branch (intra=" +
                          std::to_string(a) + ", cross=" + std::to_string(b) + ")");
    if ((irf_expansion * channels) % 2 != 0)
        throw ConfigError("irf_expansion * channels must be even for the gate");
}

// --- parameter construction -----------------------------------------------

namespace {

ConvParams make_conv(int out_ch, int in_ch, int k, int pad, int dilation,
                     int groups) {
    ConvParams p;
    p.w = parameter(Tensor(Shape{out_ch, in_ch / groups, k, k}), "");
    p.b = parameter(Tensor(Shape{1, out_ch, 1, 1}), "");
    p.spec = ConvSpec{pad, dilation, groups};
    return p;
}

ConvParams pconv(int out_ch, int in_ch) { return make_conv(out_ch, in_ch, 1, 0, 1, 1); }

ConvParams dwconv(int ch, int k, int pad, int dilation = 1) {
    return make_conv(ch, ch, k, pad, dilation, ch);
}

LayerNormParams make_ln(int ch) {
    LayerNormParams p;
    p.gamma = parameter(Tensor(Shape{1, ch, 1, 1}, 1.0), "");
    p.beta = parameter(Tensor(Shape{1, ch, 1, 1}), "");
    return p;
}

ProjStack make_stack(int ch) {
    return ProjStack{pconv(ch, ch), dwconv(ch, 3, 1)};
}

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int C = cfg_.channels;
    const int Ce = cfg_.expanded_channels();
    const int a = cfg_.intra_channels();
    const int b = cfg_.cross_channels();
    const int d = cfg_.lka_dilation;

    shallow_ = make_conv(C, 3, 3, 1, 1, 1);
    recon_ = make_conv(3 * cfg_.scale * cfg_.scale, C, 3, 1, 1, 1);

    blocks_.resize(static_cast<size_t>(cfg_.num_blocks));
    for (auto& blk : blocks_) {
        blk.ln1 = make_ln(C);
        blk.pconv1 = pconv(Ce, C);
        if (cfg_.use_repconv) {
            RepConvParams rc;
            rc.k3 = make_conv(2 * b, a, 3, 1, 1, 1);
            rc.k1 = make_conv(2 * b, a, 1, 0, 1, 1);
            rc.has_identity = (a == 2 * b);
            blk.repconv = std::move(rc);
        } else {
            blk.conv3 = make_conv(2 * b, a, 3, 1, 1, 1);
        }
        blk.ca = pconv(b, b);
        if (cfg_.cross_module == CrossModule::kCvim) {
            CvimParams cv;
            cv.q_l = make_stack(b);
            cv.k_r = make_stack(b);
            cv.v_r = make_stack(b);
            cv.q_r = make_stack(b);
            cv.k_l = make_stack(b);
            cv.v_l = make_stack(b);
            cv.out_l = pconv(b, b);
            cv.out_r = pconv(b, b);
            cv.gamma_l = parameter(Tensor(Shape{1, b, 1, 1}), "");
            cv.gamma_r = parameter(Tensor(Shape{1, b, 1, 1}), "");
            blk.cvim = std::move(cv);
        } else if (cfg_.cross_module == CrossModule::kScam) {
            ScamParams sc;
            sc.norm_l = make_ln(b);
            sc.norm_r = make_ln(b);
            sc.proj_l = pconv(b, b);
            sc.proj_r = pconv(b, b);
            sc.value_l = pconv(b, b);
            sc.value_r = pconv(b, b);
            sc.gamma_l = parameter(Tensor(Shape{1, b, 1, 1}), "");
            sc.gamma_r = parameter(Tensor(Shape{1, b, 1, 1}), "");
            blk.scam = std::move(sc);
        }
        blk.hf = dwconv(b, 3, 1);
        if (cfg_.use_lka) {
            blk.lka_dw5 = dwconv(b, 5, 2);
            blk.lka_dw7 = dwconv(b, 7, 3 * d, d);
            blk.lka_pw = pconv(b, b);
        }
        blk.pconv2 = pconv(C, b);
        if (cfg_.ffn_kind == FfnKind::kIrf) {
            IrfParams irf;
            irf.ln = make_ln(C);
            irf.pconv3 = pconv(cfg_.irf_expansion * C, C);
            irf.dw3 = dwconv(cfg_.irf_expansion * C, 3, 1);
            irf.pconv4 = pconv(C, cfg_.irf_expansion * C / 2);
            blk.irf = std::move(irf);
        } else {
            SimpleFfnParams ffn;
            ffn.ln = make_ln(C);
            ffn.expand = pconv(2 * C, C);
            ffn.project = pconv(C, C);
            blk.ffn = std::move(ffn);
        }
    }

    // parameters() attaches the canonical names as it walks.
    (void)parameters();
}

RepConvParams make_repconv(int out_ch, int in_ch) {
    RepConvParams rc;
    rc.k3 = make_conv(out_ch, in_ch, 3, 1, 1, 1);
    rc.k1 = make_conv(out_ch, in_ch, 1, 0, 1, 1);
    rc.has_identity = (out_ch == in_ch);
    return rc;
}

// --- canonical parameter walk ---------------------------------------------

namespace {

using ParamFn = std::function<void(const std::string&, const NodeRef&)>;

void walk_conv(const std::string& prefix, const ConvParams& c, const ParamFn& fn) {
    fn(prefix + ".w", c.w);
    fn(prefix + ".b", c.b);
}

void walk_ln(const std::string& prefix, const LayerNormParams& ln, const ParamFn& fn) {
    fn(prefix + ".g", ln.gamma);
    fn(prefix + ".b", ln.beta);
}

void walk_stack(const std::string& prefix, const ProjStack& s, const ParamFn& fn) {
    walk_conv(prefix + ".pw", s.pw, fn);
    walk_conv(prefix + ".dw", s.dw, fn);
}

void walk_block(const std::string& prefix, const BlockParams& blk, bool deploy,
                const ParamFn& fn) {
    walk_ln(prefix + ".mfef.ln", blk.ln1, fn);
    walk_conv(prefix + ".mfef.pconv1", blk.pconv1, fn);
    if (blk.repconv) {
        if (deploy) {
            if (!blk.repconv->fused)
                throw UsageError("deploy parameters requested before fuse_repconv()");
            walk_conv(prefix + ".mfef.repconv.fused", *blk.repconv->fused, fn);
        } else {
            walk_conv(prefix + ".mfef.repconv.k3", blk.repconv->k3, fn);
            walk_conv(prefix + ".mfef.repconv.k1", blk.repconv->k1, fn);
        }
    }
    if (blk.conv3) walk_conv(prefix + ".mfef.conv3", *blk.conv3, fn);
    walk_conv(prefix + ".mfef.ca", blk.ca, fn);
    walk_conv(prefix + ".mfef.hf", blk.hf, fn);
    if (blk.lka_dw5) {
        walk_conv(prefix + ".mfef.lka.dw5", *blk.lka_dw5, fn);
        walk_conv(prefix + ".mfef.lka.dw7", *blk.lka_dw7, fn);
        walk_conv(prefix + ".mfef.lka.pw", *blk.lka_pw, fn);
    }
    walk_conv(prefix + ".mfef.pconv2", blk.pconv2, fn);
    if (blk.cvim) {
        const auto& cv = *blk.cvim;
        walk_stack(prefix + ".cvim.q_l", cv.q_l, fn);
        walk_stack(prefix + ".cvim.k_r", cv.k_r, fn);
        walk_stack(prefix + ".cvim.v_r", cv.v_r, fn);
        walk_stack(prefix + ".cvim.q_r", cv.q_r, fn);
        walk_stack(prefix + ".cvim.k_l", cv.k_l, fn);
        walk_stack(prefix + ".cvim.v_l", cv.v_l, fn);
        walk_conv(prefix + ".cvim.out_l", cv.out_l, fn);
        walk_conv(prefix + ".cvim.out_r", cv.out_r, fn);
        fn(prefix + ".cvim.gamma_l", cv.gamma_l);
        fn(prefix + ".cvim.gamma_r", cv.gamma_r);
    }
    if (blk.scam) {
        const auto& sc = *blk.scam;
        walk_ln(prefix + ".scam.norm_l", sc.norm_l, fn);
        walk_ln(prefix + ".scam.norm_r", sc.norm_r, fn);
        walk_conv(prefix + ".scam.proj_l", sc.proj_l, fn);
        walk_conv(prefix + ".scam.proj_r", sc.proj_r, fn);
        walk_conv(prefix + ".scam.value_l", sc.value_l, fn);
        walk_conv(prefix + ".scam.value_r", sc.value_r, fn);
        fn(prefix + ".scam.gamma_l", sc.gamma_l);
        fn(prefix + ".scam.gamma_r", sc.gamma_r);
    }
    if (blk.irf) {
        walk_ln(prefix + ".irf.ln", blk.irf->ln, fn);
        walk_conv(prefix + ".irf.pconv3", blk.irf->pconv3, fn);
        walk_conv(prefix + ".irf.dw3", blk.irf->dw3, fn);
        walk_conv(prefix + ".irf.pconv4", blk.irf->pconv4, fn);
    }
    if (blk.ffn) {
        walk_ln(prefix + ".ffn.ln", blk.ffn->ln, fn);
        walk_conv(prefix + ".ffn.expand", blk.ffn->expand, fn);
        walk_conv(prefix + ".ffn.project", blk.ffn->project, fn);
    }
}

void walk_model(const ConvParams& shallow, const std::vector<BlockParams>& blocks,
                const ConvParams& recon, bool deploy, const ParamFn& fn) {
    walk_conv("shallow", shallow, fn);
    for (size_t i = 0; i < blocks.size(); ++i)
        walk_block("block" + std::to_string(i), blocks[i], deploy, fn);
    walk_conv("recon", recon, fn);
}

}  // namespace

std::vector<NamedParam> Model::parameters() const {
    std::vector<NamedParam> out;
    walk_model(shallow_, blocks_, recon_, false,
               [&out](const std::string& name, const NodeRef& node) {
                   node->name = name;
                   out.push_back({name, node});
               });
    return out;
}

std::vector<NamedParam> Model::parameters_deploy() const {
    std::vector<NamedParam> out;
    walk_model(shallow_, blocks_, recon_, true,
               [&out](const std::string& name, const NodeRef& node) {
                   node->name = name;
                   out.push_back({name, node});
               });
    return out;
}

void Model::init_weights(Rng& rng) {
    for (auto& p : parameters()) {
        Tensor& t = p.node->value;
        if (p.name.ends_with(".w")) {
            const Shape s = t.shape();
            const double fan_in = static_cast<double>(s.c) * s.h * s.w;
            const double bound = 1.0 / std::sqrt(fan_in);
            for (std::int64_t i = 0; i < t.numel(); ++i)
                t[i] = rng.uniform(-bound, bound);
        } else if (p.name.ends_with(".g")) {
            t.fill(1.0);
        } else {
            t.fill(0.0);  // biases, LN beta, cross-module gammas
        }
    }
}

// --- RepConv ---------------------------------------------------------------

NodeRef repconv_forward(const NodeRef& x, const RepConvParams& p, bool deploy) {
    if (deploy) {
        if (!p.fused) throw UsageError("repconv deploy forward requested before fusion");
        return conv2d(x, p.fused->w, p.fused->b, p.fused->spec);
    }
    NodeRef y = add(conv2d(x, p.k3.w, p.k3.b, p.k3.spec),
                    conv2d(x, p.k1.w, p.k1.b, p.k1.spec));
    if (p.has_identity) y = add(y, x);
    return y;
}

RepConvParams repconv_fuse(const RepConvParams& p) {
    RepConvParams out = p;
    const Shape ks = p.k3.w->value.shape();
    Tensor fw = p.k3.w->value;
    Tensor fb = p.k3.b->value;
    // 1x1 branch lands on the center tap.
    for (int oc = 0; oc < ks.b; ++oc) {
        for (int ic = 0; ic < ks.c; ++ic)
            fw.at(oc, ic, 1, 1) += p.k1.w->value.at(oc, ic, 0, 0);
        fb.at(0, oc, 0, 0) += p.k1.b->value.at(0, oc, 0, 0);
    }
    // Identity is a per-channel center delta (square kernels only).
    if (p.has_identity) {
        for (int c = 0; c < ks.b; ++c) fw.at(c, c, 1, 1) += 1.0;
    }
    ConvParams fused;
    fused.w = parameter(std::move(fw), p.k3.w->name + ".fused");
    fused.b = parameter(std::move(fb), p.k3.b->name + ".fused");
    fused.spec = p.k3.spec;
    out.fused = std::move(fused);
    return out;
}

void Model::fuse_repconv() {
    for (auto& blk : blocks_) {
        if (blk.repconv) blk.repconv = repconv_fuse(*blk.repconv);
    }
}

// --- forward building blocks ------------------------------------------------

std::pair<NodeRef, NodeRef> shallow_extract(const NodeRef& left,
                                            const NodeRef& right,
                                            const ConvParams& conv) {
    const int expected = conv.w->value.shape().c;
    for (const NodeRef* v : {&left, &right}) {
        const int actual = (*v)->value.shape().c;
        if (actual != expected) {
            throw ShapeError("shallow_extract: expected " + std::to_string(expected) +
                             " input channels, actual " + std::to_string(actual));
        }
    }
    return {conv2d(left, conv.w, conv.b, conv.spec),
            conv2d(right, conv.w, conv.b, conv.spec)};
}

NodeRef channel_attention(const NodeRef& x, const ConvParams& pconv) {
    NodeRef gate = conv2d(global_avg_pool(x), pconv.w, pconv.b, pconv.spec);
    return broadcast_mul(x, gate);
}

NodeRef large_kernel_attention(const NodeRef& x, const ConvParams& dw5,
                               const ConvParams& dw7, const ConvParams& pw) {
    NodeRef t = conv2d(x, dw5.w, dw5.b, dw5.spec);
    t = conv2d(t, dw7.w, dw7.b, dw7.spec);
    t = conv2d(t, pw.w, pw.b, pw.spec);
    return mul(x, t);
}

namespace {

NodeRef project_qkv(const NodeRef& x, const ProjStack& s) {
    return conv2d(conv2d(x, s.pw.w, s.pw.b, s.pw.spec), s.dw.w, s.dw.b, s.dw.spec);
}

}  // namespace

std::pair<NodeRef, NodeRef> cvim_forward(const NodeRef& x2_left,
                                         const NodeRef& x2_right,
                                         const CvimParams& p) {
    check_same_shape(x2_left->value, x2_right->value, "cvim_forward");
    NodeRef q_l = project_qkv(x2_left, p.q_l);
    NodeRef k_r = project_qkv(x2_right, p.k_r);
    NodeRef v_r = project_qkv(x2_right, p.v_r);
    NodeRef q_r = project_qkv(x2_right, p.q_r);
    NodeRef k_l = project_qkv(x2_left, p.k_l);
    NodeRef v_l = project_qkv(x2_left, p.v_l);

    NodeRef to_left = conv2d(width_attention(q_l, k_r, v_r),
                             p.out_l.w, p.out_l.b, p.out_l.spec);
    NodeRef to_right = conv2d(width_attention(q_r, k_l, v_l),
                              p.out_r.w, p.out_r.b, p.out_r.spec);
    return {add(x2_left, broadcast_mul(to_left, p.gamma_l)),
            add(x2_right, broadcast_mul(to_right, p.gamma_r))};
}

std::pair<NodeRef, NodeRef> scam_forward(const NodeRef& x2_left,
                                         const NodeRef& x2_right,
                                         const ScamParams& p) {
    check_same_shape(x2_left->value, x2_right->value, "scam_forward");
    NodeRef nl = layer_norm_channels(x2_left, p.norm_l.gamma, p.norm_l.beta);
    NodeRef nr = layer_norm_channels(x2_right, p.norm_r.gamma, p.norm_r.beta);
    NodeRef q_l = conv2d(nl, p.proj_l.w, p.proj_l.b, p.proj_l.spec);
    NodeRef q_r = conv2d(nr, p.proj_r.w, p.proj_r.b, p.proj_r.spec);
    NodeRef v_l = conv2d(x2_left, p.value_l.w, p.value_l.b, p.value_l.spec);
    NodeRef v_r = conv2d(x2_right, p.value_r.w, p.value_r.b, p.value_r.spec);

    // One logits matrix serves both directions (transposed for the second).
    NodeRef to_left = width_attention(q_l, q_r, v_r);
    NodeRef to_right = width_attention(q_r, q_l, v_l);
    return {add(x2_left, broadcast_mul(to_left, p.gamma_l)),
            add(x2_right, broadcast_mul(to_right, p.gamma_r))};
}

std::pair<NodeRef, NodeRef> kappa_pair(const NodeRef& x_left,
                                       const NodeRef& x_right,
                                       const BlockParams& blk,
                                       const ModelConfig& cfg, bool deploy) {
    const int Ce = cfg.expanded_channels();
    const int a = cfg.intra_channels();
    for (const NodeRef* v : {&x_left, &x_right}) {
        if ((*v)->value.shape().c != Ce) {
            throw ShapeError("kappa: expected " + std::to_string(Ce) +
                             " channels, actual " +
                             std::to_string((*v)->value.shape().c));
        }
    }

    auto intra_branch = [&](const NodeRef& x1) {
        NodeRef t = blk.repconv ? repconv_forward(x1, *blk.repconv, deploy)
                                : conv2d(x1, blk.conv3->w, blk.conv3->b, blk.conv3->spec);
        t = simple_gate(t);
        return mul(t, channel_attention(t, blk.ca));
    };

    NodeRef x1_l = slice_channels(x_left, 0, a);
    NodeRef x2_l = slice_channels(x_left, a, Ce);
    NodeRef x1_r = slice_channels(x_right, 0, a);
    NodeRef x2_r = slice_channels(x_right, a, Ce);

    NodeRef b1_l = intra_branch(x1_l);
    NodeRef b1_r = intra_branch(x1_r);

    NodeRef b2_l = x2_l;
    NodeRef b2_r = x2_r;
    if (cfg.cross_module == CrossModule::kCvim) {
        std::tie(b2_l, b2_r) = cvim_forward(x2_l, x2_r, *blk.cvim);
    } else if (cfg.cross_module == CrossModule::kScam) {
        std::tie(b2_l, b2_r) = scam_forward(x2_l, x2_r, *blk.scam);
    }
    return {add(b1_l, b2_l), add(b1_r, b2_r)};
}

NodeRef kappa(const NodeRef& x, const NodeRef& partner, const BlockParams& blk,
              const ModelConfig& cfg) {
    if (cfg.cross_module != CrossModule::kNone && !partner) {
        throw UsageError("kappa: cross_module " + to_string(cfg.cross_module) +
                         " requires partner-view features");
    }
    return kappa_pair(x, partner ? partner : x, blk, cfg).first;
}

std::pair<NodeRef, NodeRef> mfef_forward(const NodeRef& left,
                                         const NodeRef& right,
                                         const BlockParams& blk,
                                         const ModelConfig& cfg, bool deploy) {
    auto expand = [&](const NodeRef& x) {
        NodeRef n = layer_norm_channels(x, blk.ln1.gamma, blk.ln1.beta);
        return conv2d(n, blk.pconv1.w, blk.pconv1.b, blk.pconv1.spec);
    };
    auto [k_l, k_r] = kappa_pair(expand(left), expand(right), blk, cfg, deploy);

    auto finish = [&](const NodeRef& k, const NodeRef& f_in) {
        NodeRef f = add(conv2d(k, blk.hf.w, blk.hf.b, blk.hf.spec), k);
        NodeRef attn = cfg.use_lka
            ? large_kernel_attention(f, *blk.lka_dw5, *blk.lka_dw7, *blk.lka_pw)
            : f;
        return add(conv2d(attn, blk.pconv2.w, blk.pconv2.b, blk.pconv2.spec), f_in);
    };
    return {finish(k_l, left), finish(k_r, right)};
}

NodeRef irf_forward(const NodeRef& x, const BlockParams& blk,
                    const ModelConfig& cfg) {
    if (cfg.ffn_kind == FfnKind::kIrf) {
        const auto& p = *blk.irf;
        NodeRef t = layer_norm_channels(x, p.ln.gamma, p.ln.beta);
        t = conv2d(t, p.pconv3.w, p.pconv3.b, p.pconv3.spec);
        t = conv2d(t, p.dw3.w, p.dw3.b, p.dw3.spec);
        t = nonlinear_gate(t);
        t = conv2d(t, p.pconv4.w, p.pconv4.b, p.pconv4.spec);
        return add(t, x);
    }
    const auto& p = *blk.ffn;
    NodeRef t = layer_norm_channels(x, p.ln.gamma, p.ln.beta);
    t = conv2d(t, p.expand.w, p.expand.b, p.expand.spec);
    t = simple_gate(t);
    t = conv2d(t, p.project.w, p.project.b, p.project.spec);
    return add(t, x);
}

std::pair<NodeRef, NodeRef> mff_block_forward(const NodeRef& left,
                                              const NodeRef& right,
                                              const BlockParams& blk,
                                              const ModelConfig& cfg,
                                              bool deploy) {
    auto [l, r] = mfef_forward(left, right, blk, cfg, deploy);
    return {irf_forward(l, blk, cfg), irf_forward(r, blk, cfg)};
}

std::pair<NodeRef, NodeRef> upsample_reconstruct(
    const NodeRef& deep_left, const NodeRef& deep_right,
    const NodeRef& lr_left, const NodeRef& lr_right, const ConvParams& recon,
    int scale) {
    if (scale != 2 && scale != 4)
        throw ConfigError("upsample_reconstruct: unsupported scale " +
                          std::to_string(scale));
    auto per_view = [&](const NodeRef& deep, const NodeRef& lr) {
        NodeRef feat = pixel_shuffle(conv2d(deep, recon.w, recon.b, recon.spec), scale);
        return add(feat, bilinear_upsample(lr, scale));
    };
    return {per_view(deep_left, lr_left), per_view(deep_right, lr_right)};
}

std::pair<NodeRef, NodeRef> Model::forward(const NodeRef& lr_left,
                                           const NodeRef& lr_right,
                                           bool deploy) const {
    check_same_shape(lr_left->value, lr_right->value, "mffssr_forward");
    if (!lr_left->value.all_finite() || !lr_right->value.all_finite())
        throw DataError("mffssr_forward: input contains NaN or Inf");
    auto [l, r] = shallow_extract(lr_left, lr_right, shallow_);
    for (const auto& blk : blocks_)
        std::tie(l, r) = mff_block_forward(l, r, blk, cfg_, deploy);
    return upsample_reconstruct(l, r, lr_left, lr_right, recon_, cfg_.scale);
}

StereoPair Model::forward_values(const Tensor& lr_left, const Tensor& lr_right,
                                 bool deploy) const {
    NoGradGuard guard;
    auto [l, r] = forward(constant(lr_left), constant(lr_right), deploy);
    return StereoPair{std::move(l->value), std::move(r->value)};
}

}  // namespace mffssr
