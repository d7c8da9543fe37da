#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mffssr/nn_ops.hpp"
#include "mffssr/rng.hpp"

namespace mffssr {

enum class FfnKind { kIrf, kSimpleFfn };
enum class CrossModule { kCvim, kScam, kNone };

std::string to_string(FfnKind k);
std::string to_string(CrossModule m);
FfnKind ffn_kind_from_string(const std::string& s);
CrossModule cross_module_from_string(const std::string& s);

// Network hyperparameters. The stock models are N=16/C=64 for x2 and
// N=24/C=48 for x4, both with theta = 0.75.
struct ModelConfig {
    int scale = 4;
    int num_blocks = 24;
    int channels = 48;
    double theta = 0.75;
    int mfef_expansion = 1;  // e1: pconv1 widens C to C_e = e1*C
    int irf_expansion = 4;   // e2: IRF widens C to e2*C ahead of the gate
    int lka_dilation = 3;
    bool use_lka = true;
    bool use_repconv = true;
    FfnKind ffn_kind = FfnKind::kIrf;
    CrossModule cross_module = CrossModule::kCvim;

    static ModelConfig defaults_for_scale(int scale);

    // Throws ConfigError on out-of-range fields or a theta that does not
    // split the expanded width into whole channels.
    void validate() const;

    int expanded_channels() const { return mfef_expansion * channels; }
    // Width of the intra-view split X1 (theta * C_e).
    int intra_channels() const;
    // Width of the cross-view split X2 ((1 - theta) * C_e); this is also
    // the working width of CA, LKA and the cross module.
    int cross_channels() const;

    bool operator==(const ModelConfig&) const = default;
};

struct StereoPair {
    Tensor left;
    Tensor right;
};

struct ConvParams {
    NodeRef w;
    NodeRef b;
    ConvSpec spec;
};

struct LayerNormParams {
    NodeRef gamma;
    NodeRef beta;
};

// Train-time multi-branch convolution (3x3 + 1x1 + optional identity) and
// its algebraically fused single-kernel deploy form.
struct RepConvParams {
    ConvParams k3;
    ConvParams k1;
    bool has_identity = false;
    std::optional<ConvParams> fused;
};

NodeRef repconv_forward(const NodeRef& x, const RepConvParams& p,
                        bool deploy = false);
// Folds the 1x1 branch (center tap) and identity (per-channel center delta)
// into a single 3x3 kernel; forward agrees with the branches to 1e-5.
RepConvParams repconv_fuse(const RepConvParams& p);
// Fresh zero-weight RepConv (3x3 pad 1 plus 1x1, identity when square).
RepConvParams make_repconv(int out_ch, int in_ch);

struct ProjStack {
    ConvParams pw;  // 1x1 point-wise
    ConvParams dw;  // 3x3 depth-wise
};

struct CvimParams {
    ProjStack q_l, k_r, v_r;  // left -> right attention inputs
    ProjStack q_r, k_l, v_l;  // right -> left attention inputs
    ConvParams out_l, out_r;
    NodeRef gamma_l, gamma_r;  // zero-initialized channel scales
};

struct ScamParams {
    LayerNormParams norm_l, norm_r;
    ConvParams proj_l, proj_r;    // shared query/key projection per view
    ConvParams value_l, value_r;
    NodeRef gamma_l, gamma_r;
};

struct IrfParams {
    LayerNormParams ln;
    ConvParams pconv3;  // C -> e2*C
    ConvParams dw3;     // depth-wise 3x3 at e2*C
    ConvParams pconv4;  // e2*C/2 -> C
};

struct SimpleFfnParams {
    LayerNormParams ln;
    ConvParams expand;   // C -> 2C
    ConvParams project;  // C -> C
};

// One MFF block: a HAFEB parameter set shared by both views plus the
// embedded cross module serving the kappa branches of both views.
struct BlockParams {
    LayerNormParams ln1;
    ConvParams pconv1;
    std::optional<RepConvParams> repconv;  // when use_repconv
    std::optional<ConvParams> conv3;       // plain 3x3 otherwise
    ConvParams ca;                         // channel attention point-wise conv
    std::optional<CvimParams> cvim;
    std::optional<ScamParams> scam;
    ConvParams hf;  // feature fusion depth-wise 3x3
    std::optional<ConvParams> lka_dw5, lka_dw7, lka_pw;
    ConvParams pconv2;
    std::optional<IrfParams> irf;
    std::optional<SimpleFfnParams> ffn;
};

// --- Spec-level building blocks (graph ops over parameter bundles) -------

std::pair<NodeRef, NodeRef> shallow_extract(const NodeRef& left,
                                            const NodeRef& right,
                                            const ConvParams& conv);

// y = x .* pconv(global_average_pool(x)); no squashing nonlinearity.
NodeRef channel_attention(const NodeRef& x, const ConvParams& pconv);

// y = x .* pconv(DWDConv7_dil(DWConv5(x))).
NodeRef large_kernel_attention(const NodeRef& x, const ConvParams& dw5,
                               const ConvParams& dw7, const ConvParams& pw);

std::pair<NodeRef, NodeRef> cvim_forward(const NodeRef& x2_left,
                                         const NodeRef& x2_right,
                                         const CvimParams& p);

std::pair<NodeRef, NodeRef> scam_forward(const NodeRef& x2_left,
                                         const NodeRef& x2_right,
                                         const ScamParams& p);

// kappa for both views jointly; the cross branch couples them.
std::pair<NodeRef, NodeRef> kappa_pair(const NodeRef& x_left,
                                       const NodeRef& x_right,
                                       const BlockParams& blk,
                                       const ModelConfig& cfg,
                                       bool deploy = false);

// Single-view kappa; `partner` holds the other view's split input and may
// be null only when cfg.cross_module is None (throws UsageError otherwise).
// `x` is treated as the left view.
NodeRef kappa(const NodeRef& x, const NodeRef& partner,
              const BlockParams& blk, const ModelConfig& cfg);

std::pair<NodeRef, NodeRef> mfef_forward(const NodeRef& left,
                                         const NodeRef& right,
                                         const BlockParams& blk,
                                         const ModelConfig& cfg,
                                         bool deploy = false);

NodeRef irf_forward(const NodeRef& x, const BlockParams& blk,
                    const ModelConfig& cfg);

std::pair<NodeRef, NodeRef> mff_block_forward(const NodeRef& left,
                                              const NodeRef& right,
                                              const BlockParams& blk,
                                              const ModelConfig& cfg,
                                              bool deploy = false);

std::pair<NodeRef, NodeRef> upsample_reconstruct(
    const NodeRef& deep_left, const NodeRef& deep_right,
    const NodeRef& lr_left, const NodeRef& lr_right, const ConvParams& recon,
    int scale);

// --- Whole network --------------------------------------------------------

class Model {
public:
    explicit Model(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }

    // Fan-in-scaled uniform conv weights, zero biases, LN affine (1, 0),
    // zero cross-module gammas.
    void init_weights(Rng& rng);

    // Canonical parameter listing (train-time multi-branch form); names
    // follow block{i}.{submodule}.{param} and drive serialization order.
    std::vector<NamedParam> parameters() const;
    // Deploy listing with RepConv branches replaced by the fused kernel;
    // requires fuse_repconv() first.
    std::vector<NamedParam> parameters_deploy() const;

    void fuse_repconv();

    // Full graph forward (Eqs-level pipeline): shallow extraction, N MFF
    // blocks, pixel-shuffle reconstruction with the bilinear global
    // residual. Rejects non-3-channel or non-finite inputs.
    std::pair<NodeRef, NodeRef> forward(const NodeRef& lr_left,
                                        const NodeRef& lr_right,
                                        bool deploy = false) const;

    // Value-only inference (no tape).
    StereoPair forward_values(const Tensor& lr_left, const Tensor& lr_right,
                              bool deploy = false) const;

    BlockParams& block(int i) { return blocks_[static_cast<size_t>(i)]; }
    const BlockParams& block(int i) const { return blocks_[static_cast<size_t>(i)]; }
    const ConvParams& shallow() const { return shallow_; }
    const ConvParams& recon() const { return recon_; }

private:
    ModelConfig cfg_;
    ConvParams shallow_;
    std::vector<BlockParams> blocks_;
    ConvParams recon_;
};

}  // namespace mffssr
