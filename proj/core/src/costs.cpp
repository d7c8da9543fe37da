#include "mffssr/costs.hpp"

#include <algorithm>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace {

// Breakdown bucket from a canonical parameter name.
std::string bucket_of(const std::string& name) {
    if (name.starts_with("shallow")) return "shallow";
    if (name.starts_with("recon")) return "recon";
    const auto dot = name.find('.');
    const std::string sub = name.substr(dot + 1);
    if (sub.starts_with("mfef.")) return "mfef";
    if (sub.starts_with("cvim.") || sub.starts_with("scam.")) return "cross";
    return "ffn";
}

void add_to(std::vector<std::pair<std::string, std::int64_t>>& v,
            const std::string& key, std::int64_t amount) {
    for (auto& [k, val] : v)
        if (k == key) {
            val += amount;
            return;
        }
    v.emplace_back(key, amount);
}

void add_to(std::vector<std::pair<std::string, double>>& v, const std::string& key,
            double amount) {
    for (auto& [k, val] : v)
        if (k == key) {
            val += amount;
            return;
        }
    v.emplace_back(key, amount);
}

}  // namespace

CostReport param_count(const ModelConfig& cfg, bool fused) {
    cfg.validate();
    Model model(cfg);
    if (fused) model.fuse_repconv();
    const auto params = fused ? model.parameters_deploy() : model.parameters();
    CostReport report;
    for (const auto& p : params) {
        const std::int64_t n = p.node->value.numel();
        report.total_params += n;
        add_to(report.params_breakdown, bucket_of(p.name), n);
    }
    return report;
}

CostReport macs_estimate(const ModelConfig& cfg, int input_h, int input_w) {
    cfg.validate();
    if (input_h < 1 || input_w < 1)
        throw UsageError("macs_estimate: input size must be positive");
    const double hw = static_cast<double>(input_h) * input_w;
    const double C = cfg.channels;
    const double Ce = cfg.expanded_channels();
    const double a = cfg.intra_channels();
    const double b = cfg.cross_channels();
    const double e2 = cfg.irf_expansion;
    const double s2 = static_cast<double>(cfg.scale) * cfg.scale;

    auto conv = [hw](double cin, double cout, double k, double groups = 1.0) {
        return cin * cout * k * k * hw / groups;
    };

    CostReport report;
    report.input_h = input_h;
    report.input_w = input_w;

    // Everything below is the stereo-pair convention: shared per-view convs
    // run twice, the cross module runs once per block.
    const double shallow = 2.0 * conv(3, C, 3);
    const double recon = 2.0 * conv(C, 3 * s2, 3);

    double mfef = 0.0;
    mfef += conv(C, Ce, 1);                          // pconv1
    mfef += conv(a, 2 * b, 3) + (cfg.use_repconv ? conv(a, 2 * b, 1) : 0.0);
    mfef += conv(b, b, 1);                           // channel attention gate
    mfef += conv(b, b, 3, b);                        // H_f depth-wise
    if (cfg.use_lka)
        mfef += conv(b, b, 5, b) + conv(b, b, 7, b) + conv(b, b, 1);
    mfef += conv(b, C, 1);                           // pconv2
    mfef *= 2.0;                                     // both views

    double ffn = 0.0;
    if (cfg.ffn_kind == FfnKind::kIrf) {
        ffn = conv(C, e2 * C, 1) + conv(e2 * C, e2 * C, 3, e2 * C) +
              conv(e2 * C / 2, C, 1);
    } else {
        ffn = conv(C, 2 * C, 1) + conv(C, C, 1);
    }
    ffn *= 2.0;

    const double attention_dir = 2.0 * input_h * static_cast<double>(input_w) *
                                 input_w * b;
    double cross = 0.0;
    if (cfg.cross_module == CrossModule::kCvim) {
        cross = 6.0 * (conv(b, b, 1) + conv(b, b, 3, b))  // q/k/v stacks
                + 2.0 * conv(b, b, 1)                     // out projections
                + 2.0 * attention_dir;
    } else if (cfg.cross_module == CrossModule::kScam) {
        cross = 4.0 * conv(b, b, 1) + 2.0 * attention_dir;
    }

    const double n = cfg.num_blocks;
    add_to(report.macs_breakdown, "shallow", shallow);
    add_to(report.macs_breakdown, "mfef", n * mfef);
    add_to(report.macs_breakdown, "cross", n * cross);
    add_to(report.macs_breakdown, "ffn", n * ffn);
    add_to(report.macs_breakdown, "recon", recon);
    report.macs_pair = shallow + n * (mfef + cross + ffn) + recon;
    report.macs_single_view = 0.5 * report.macs_pair;
    return report;
}

CostReport cost_report(const ModelConfig& cfg, int input_h, int input_w,
                       bool fused) {
    CostReport report = macs_estimate(cfg, input_h, input_w);
    CostReport params = param_count(cfg, fused);
    report.total_params = params.total_params;
    report.params_breakdown = std::move(params.params_breakdown);
    return report;
}

ModelConfig AblationSpec::apply(const ModelConfig& base) const {
    ModelConfig cfg = base;
    if (name == "full") {
    } else if (name == "net-a") {
        cfg.use_lka = false;
    } else if (name == "net-b") {
        cfg.use_repconv = false;
    } else if (name == "net-c") {
        cfg.use_lka = false;
        cfg.use_repconv = false;
    } else if (name == "net-d") {
        cfg.ffn_kind = FfnKind::kSimpleFfn;
    } else if (name == "scam") {
        cfg.cross_module = CrossModule::kScam;
    } else if (name.starts_with("theta-")) {
        cfg.theta = std::stod(name.substr(6));
    } else {
        throw UsageError("unknown ablation '" + name + "'");
    }
    return cfg;
}

AblationSpec AblationSpec::by_name(const std::string& name) {
    const auto& all = names();
    if (std::find(all.begin(), all.end(), name) == all.end())
        throw UsageError("unknown ablation '" + name + "' (try: full, net-a, net-b, "
                         "net-c, net-d, theta-0.25, theta-0.5, theta-0.75, "
                         "theta-0.875, scam)");
    return AblationSpec{name};
}

const std::vector<std::string>& AblationSpec::names() {
    static const std::vector<std::string> kNames = {
        "full",       "net-a",     "net-b",      "net-c",       "net-d",
        "theta-0.25", "theta-0.5", "theta-0.75", "theta-0.875", "scam"};
    return kNames;
}

}  // namespace mffssr
