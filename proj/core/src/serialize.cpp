#include "mffssr/serialize.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'F', 'F', 'S', 'S', 'R', 'W', 'A'};
constexpr std::uint32_t kVersion = 1;

json config_to_json(const ModelConfig& cfg) {
    return json{{"scale", cfg.scale},
                {"num_blocks", cfg.num_blocks},
                {"channels", cfg.channels},
                {"theta", cfg.theta},
                {"mfef_expansion", cfg.mfef_expansion},
                {"irf_expansion", cfg.irf_expansion},
                {"lka_dilation", cfg.lka_dilation},
                {"use_lka", cfg.use_lka},
                {"use_repconv", cfg.use_repconv},
                {"ffn_kind", to_string(cfg.ffn_kind)},
                {"cross_module", to_string(cfg.cross_module)}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.scale = j.at("scale").get<int>();
    cfg.num_blocks = j.at("num_blocks").get<int>();
    cfg.channels = j.at("channels").get<int>();
    cfg.theta = j.at("theta").get<double>();
    cfg.mfef_expansion = j.at("mfef_expansion").get<int>();
    cfg.irf_expansion = j.at("irf_expansion").get<int>();
    cfg.lka_dilation = j.at("lka_dilation").get<int>();
    cfg.use_lka = j.at("use_lka").get<bool>();
    cfg.use_repconv = j.at("use_repconv").get<bool>();
    cfg.ffn_kind = ffn_kind_from_string(j.at("ffn_kind").get<std::string>());
    cfg.cross_module = cross_module_from_string(j.at("cross_module").get<std::string>());
    return cfg;
}

struct NamedTensorRef {
    std::string name;
    const Tensor* tensor;
};

void write_archive(const std::filesystem::path& path, const std::string& kind,
                   const ModelConfig& cfg, const std::vector<NamedTensorRef>& tensors,
                   const json& trainer) {
    json manifest;
    manifest["kind"] = kind;
    manifest["config"] = config_to_json(cfg);
    json jt = json::array();
    std::int64_t offset = 0;
    for (const auto& t : tensors) {
        const Shape s = t.tensor->shape();
        jt.push_back(json{{"name", t.name},
                          {"dtype", "f64"},
                          {"shape", {s.b, s.c, s.h, s.w}},
                          {"offset", offset},
                          {"count", t.tensor->numel()}});
        offset += t.tensor->numel();
    }
    manifest["tensors"] = std::move(jt);
    if (!trainer.is_null()) manifest["trainer"] = trainer;

    const std::string mbytes = manifest.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t ver = kVersion;
    out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    const std::uint64_t mlen = mbytes.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
    for (const auto& t : tensors) {
        out.write(reinterpret_cast<const char*>(t.tensor->data()),
                  static_cast<std::streamsize>(t.tensor->numel() * sizeof(double)));
    }
    if (!out) throw DataError("short write to '" + path.string() + "'");
}

struct RawArchive {
    json manifest;
    std::vector<double> payload;
};

RawArchive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("'" + path.string() + "' is not a weight archive");
    std::uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    if (ver != kVersion)
        throw DataError("unsupported archive version " + std::to_string(ver));
    std::uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string mbytes(mlen, '\0');
    in.read(mbytes.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw DataError("truncated manifest in '" + path.string() + "'");
    RawArchive a;
    a.manifest = json::parse(mbytes, nullptr, false);
    if (a.manifest.is_discarded())
        throw DataError("malformed manifest in '" + path.string() + "'");
    std::int64_t total = 0;
    for (const auto& t : a.manifest.at("tensors")) total += t.at("count").get<std::int64_t>();
    a.payload.resize(static_cast<size_t>(total));
    in.read(reinterpret_cast<char*>(a.payload.data()),
            static_cast<std::streamsize>(total * static_cast<std::int64_t>(sizeof(double))));
    if (!in) throw DataError("truncated payload in '" + path.string() + "'");
    return a;
}

void load_named_into(const RawArchive& a, const std::string& name, Tensor& dst) {
    for (const auto& t : a.manifest.at("tensors")) {
        if (t.at("name").get<std::string>() != name) continue;
        const auto sh = t.at("shape");
        const Shape s{sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>(), sh[3].get<int>()};
        if (!(s == dst.shape()))
            throw DataError("tensor '" + name + "' shape " + s.str() +
                            " does not match model " + dst.shape().str());
        const auto off = t.at("offset").get<std::int64_t>();
        std::copy(a.payload.begin() + off, a.payload.begin() + off + dst.numel(),
                  dst.data());
        return;
    }
    throw DataError("tensor '" + name + "' missing from archive");
}

}  // namespace

void save_weights(const std::filesystem::path& path, const Model& model,
                  bool deploy) {
    const auto params = deploy ? model.parameters_deploy() : model.parameters();
    std::vector<NamedTensorRef> tensors;
    tensors.reserve(params.size());
    for (const auto& p : params) tensors.push_back({p.name, &p.node->value});
    write_archive(path, "weights", model.config(), tensors, json());
}

ModelConfig peek_config(const std::filesystem::path& path) {
    return config_from_json(read_archive(path).manifest.at("config"));
}

Model load_model(const std::filesystem::path& path) {
    const RawArchive a = read_archive(path);
    Model model(config_from_json(a.manifest.at("config")));
    for (auto& p : model.parameters()) load_named_into(a, p.name, p.node->value);
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainerState& state) {
    const auto params = model.parameters();
    if (state.momentum.size() != params.size())
        throw UsageError("save_checkpoint: momentum/parameter count mismatch");
    std::vector<NamedTensorRef> tensors;
    tensors.reserve(2 * params.size());
    for (const auto& p : params) tensors.push_back({p.name, &p.node->value});
    for (size_t i = 0; i < params.size(); ++i)
        tensors.push_back({"opt.m." + params[i].name, &state.momentum[i]});
    json trainer{{"step", state.step}, {"rng", state.rng_state}};
    write_archive(path, "checkpoint", model.config(), tensors, trainer);
}

TrainerState load_checkpoint(const std::filesystem::path& path, Model& model) {
    const RawArchive a = read_archive(path);
    if (a.manifest.at("kind").get<std::string>() != "checkpoint")
        throw DataError("'" + path.string() + "' is not a checkpoint");
    const ModelConfig cfg = config_from_json(a.manifest.at("config"));
    if (!(cfg == model.config()))
        throw DataError("checkpoint config does not match model config");
    TrainerState state;
    for (auto& p : model.parameters()) {
        load_named_into(a, p.name, p.node->value);
        Tensor m(p.node->value.shape());
        load_named_into(a, "opt.m." + p.name, m);
        state.momentum.push_back(std::move(m));
    }
    state.step = a.manifest.at("trainer").at("step").get<std::int64_t>();
    state.rng_state = a.manifest.at("trainer").at("rng").get<std::string>();
    return state;
}

ArchiveInfo inspect_archive(const std::filesystem::path& path) {
    const RawArchive a = read_archive(path);
    ArchiveInfo info;
    info.kind = a.manifest.at("kind").get<std::string>();
    info.config = config_from_json(a.manifest.at("config"));
    for (const auto& t : a.manifest.at("tensors")) {
        const auto sh = t.at("shape");
        const std::string name = t.at("name").get<std::string>();
        const Shape s{sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>(), sh[3].get<int>()};
        info.tensors.emplace_back(name, s);
        if (!name.starts_with("opt.")) info.total_scalars += s.numel();
    }
    return info;
}

}  // namespace mffssr
