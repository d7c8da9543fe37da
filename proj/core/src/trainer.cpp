#include "mffssr/trainer.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "mffssr/errors.hpp"

namespace mffssr {

void TrainConfig::validate() const {
    if (lr0 <= 0.0) throw ConfigError("lr0 must be > 0");
    if (lr_min < 0.0 || lr_min > lr0) throw ConfigError("lr_min must lie in [0, lr0]");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("betas must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (total_iters < 1) throw ConfigError("total_iters must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (checkpoint_every < 0 || eval_every < 0)
        throw ConfigError("periodic intervals must be >= 0");
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr0, double lr_min) {
    if (t < 0) throw UsageError("cosine_lr: t must be >= 0");
    if (t >= total) return lr_min;
    const double phase = 3.14159265358979323846 * static_cast<double>(t) /
                         static_cast<double>(total);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

namespace {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void lion_step(const std::vector<NamedParam>& params, std::vector<Tensor>& momentum,
               double lr, const TrainConfig& cfg) {
    if (momentum.size() != params.size())
        throw UsageError("lion_step: momentum/parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i].node->value;
        const Tensor& g = params[i].node->grad_or_zeros();
        Tensor& m = momentum[i];
        check_same_shape(p, m, "lion_step momentum");
        check_same_shape(p, g, "lion_step gradient");
        for (std::int64_t k = 0; k < p.numel(); ++k) {
            const double u = sign0(cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k]);
            p[k] -= lr * (u + cfg.weight_decay * p[k]);
            m[k] = cfg.beta2 * m[k] + (1.0 - cfg.beta2) * g[k];
        }
    }
}

Batch make_batch(const std::vector<TrainTuple>& tuples) {
    if (tuples.empty()) throw UsageError("make_batch: empty tuple list");
    const Shape ls = tuples.front().lr_left.shape();
    const Shape hs = tuples.front().hr_left.shape();
    const int n = static_cast<int>(tuples.size());
    Batch b;
    b.lr_left = Tensor(Shape{n, ls.c, ls.h, ls.w});
    b.lr_right = Tensor(Shape{n, ls.c, ls.h, ls.w});
    b.hr_left = Tensor(Shape{n, hs.c, hs.h, hs.w});
    b.hr_right = Tensor(Shape{n, hs.c, hs.h, hs.w});
    std::ostringstream ids;
    for (int i = 0; i < n; ++i) {
        const TrainTuple& t = tuples[static_cast<size_t>(i)];
        check_same_shape(tuples.front().lr_left, t.lr_left, "make_batch");
        auto copy_into = [i](Tensor& dst, const Tensor& src) {
            std::copy(src.data(), src.data() + src.numel(),
                      dst.data() + dst.index(i, 0, 0, 0));
        };
        copy_into(b.lr_left, t.lr_left);
        copy_into(b.lr_right, t.lr_right);
        copy_into(b.hr_left, t.hr_left);
        copy_into(b.hr_right, t.hr_right);
        ids << (i ? "," : "") << t.id;
    }
    b.ids = ids.str();
    return b;
}

BatchProvider dataset_provider(const DatasetManifest& manifest, int batch_size,
                               const AugmentFlags& flags) {
    if (manifest.records.empty())
        throw UsageError("dataset_provider: dataset is empty");
    auto cache = std::make_shared<std::map<std::string, LoadedSample>>();
    return [manifest, batch_size, flags, cache](std::int64_t, Rng& rng) {
        std::vector<TrainTuple> tuples;
        int attempts = 0;
        while (static_cast<int>(tuples.size()) < batch_size) {
            if (++attempts > 100 * batch_size)
                throw DataError("dataset_provider: no usable samples for patch size");
            const auto& rec = manifest.records[static_cast<size_t>(
                rng.below(static_cast<std::int64_t>(manifest.records.size())))];
            auto it = cache->find(rec.id);
            if (it == cache->end())
                it = cache->emplace(rec.id, load_sample(rec, manifest.scale)).first;
            try {
                TrainTuple t = sample_patch(it->second, manifest.scale,
                                            manifest.patch_h, manifest.patch_w, rng);
                tuples.push_back(augment(t, rng, flags));
            } catch (const DataError& e) {
                std::cerr << "warning: skipping sample: " << e.what() << "\n";
            }
        }
        return make_batch(tuples);
    };
}

TrainResult train_loop(Model& model, const TrainConfig& tcfg,
                       const LossConfig& lcfg, const BatchProvider& provider,
                       std::ostream* log,
                       const std::filesystem::path& checkpoint_path,
                       const std::filesystem::path& resume_from,
                       const TrainHooks& hooks) {
    tcfg.validate();
    lcfg.validate();

    const auto params = model.parameters();
    std::vector<Tensor> momentum;
    std::int64_t start = 0;
    Rng rng(tcfg.seed);
    if (!resume_from.empty()) {
        TrainerState st = load_checkpoint(resume_from, model);
        momentum = std::move(st.momentum);
        start = st.step;
        rng.load_state(st.rng_state);
    } else {
        momentum.reserve(params.size());
        for (const auto& p : params) momentum.emplace_back(p.node->value.shape());
    }

    auto save_state = [&](std::int64_t next_step) {
        if (checkpoint_path.empty()) return;
        TrainerState st;
        st.step = next_step;
        st.momentum = momentum;
        st.rng_state = rng.save_state();
        save_checkpoint(checkpoint_path, model, st);
    };

    TrainResult result;
    for (std::int64_t t = start; t < tcfg.total_iters; ++t) {
        const double lr = cosine_lr(t, tcfg.total_iters, tcfg.lr0, tcfg.lr_min);
        Batch batch = provider(t, rng);

        NodeRef lr_l = constant(std::move(batch.lr_left));
        NodeRef lr_r = constant(std::move(batch.lr_right));
        NodeRef hr_l = constant(std::move(batch.hr_left));
        NodeRef hr_r = constant(std::move(batch.hr_right));
        auto [sr_l, sr_r] = model.forward(lr_l, lr_r);
        NodeRef loss = total_loss_node(sr_l, sr_r, hr_l, hr_r, lcfg);
        const double loss_v = loss->value[0];
        if (!std::isfinite(loss_v)) {
            save_state(t);
            throw NumericError("NaN loss at iter " + std::to_string(t) +
                               " (batch ids: " + batch.ids + ")");
        }

        for (const auto& p : params) p.node->zero_grad();
        backward(loss);
        lion_step(params, momentum, lr, tcfg);

        if (log) {
            std::ostringstream line;
            line.setf(std::ios::scientific);
            line.precision(12);
            line << t << "\t" << loss_v << "\t" << lr << "\n";
            (*log) << line.str();
            log->flush();
        }
        result.final_loss = loss_v;
        result.iters_run = t + 1;

        if (tcfg.checkpoint_every > 0 && (t + 1) % tcfg.checkpoint_every == 0)
            save_state(t + 1);
        if (hooks.periodic && tcfg.eval_every > 0 && (t + 1) % tcfg.eval_every == 0)
            hooks.periodic(t + 1);
    }
    save_state(tcfg.total_iters);
    return result;
}

}  // namespace mffssr
