#include "mffssr/config_file.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + v + "'");
    }
}

std::int64_t to_i64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

void set_key(FullConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
    const std::string full = section + "." + key;
    if (section == "model") {
        auto& m = cfg.model;
        if (key == "scale") m.scale = to_int(value, full);
        else if (key == "num_blocks") m.num_blocks = to_int(value, full);
        else if (key == "channels") m.channels = to_int(value, full);
        else if (key == "theta") m.theta = to_double(value, full);
        else if (key == "mfef_expansion") m.mfef_expansion = to_int(value, full);
        else if (key == "irf_expansion") m.irf_expansion = to_int(value, full);
        else if (key == "lka_dilation") m.lka_dilation = to_int(value, full);
        else if (key == "use_lka") m.use_lka = to_bool(value, full);
        else if (key == "use_repconv") m.use_repconv = to_bool(value, full);
        else if (key == "ffn_kind") m.ffn_kind = ffn_kind_from_string(value);
        else if (key == "cross_module") m.cross_module = cross_module_from_string(value);
        else throw ConfigError("unknown key '" + full + "'");
    } else if (section == "train") {
        auto& t = cfg.train;
        if (key == "lr0") t.lr0 = to_double(value, full);
        else if (key == "lr_min") t.lr_min = to_double(value, full);
        else if (key == "beta1") t.beta1 = to_double(value, full);
        else if (key == "beta2") t.beta2 = to_double(value, full);
        else if (key == "weight_decay") t.weight_decay = to_double(value, full);
        else if (key == "total_iters") t.total_iters = to_i64(value, full);
        else if (key == "batch_size") t.batch_size = to_int(value, full);
        else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_i64(value, full));
        else if (key == "checkpoint_every") t.checkpoint_every = to_i64(value, full);
        else if (key == "eval_every") t.eval_every = to_i64(value, full);
        else throw ConfigError("unknown key '" + full + "'");
    } else if (section == "data") {
        auto& d = cfg.data;
        if (key == "root") d.root = value;
        else if (key == "split") d.split = value;
        else if (key == "eval_split") d.eval_split = value;
        else if (key == "patch_h") d.patch_h = to_int(value, full);
        else if (key == "patch_w") d.patch_w = to_int(value, full);
        else if (key == "hflip") d.augment.hflip = to_bool(value, full);
        else if (key == "vflip") d.augment.vflip = to_bool(value, full);
        else if (key == "channel_shuffle") d.augment.channel_shuffle = to_bool(value, full);
        else if (key == "rot90") d.augment.rot90 = to_bool(value, full);
        else throw ConfigError("unknown key '" + full + "'");
    } else if (section == "loss") {
        auto& l = cfg.loss;
        if (key == "lambda") l.lambda = to_double(value, full);
        else if (key == "epsilon") l.epsilon = to_double(value, full);
        else throw ConfigError("unknown key '" + full + "'");
    } else {
        throw ConfigError("unknown section '[" + section + "]'");
    }
}

}  // namespace

FullConfig parse_config_text(std::istream& in, const std::string& origin) {
    FullConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header '" + t + "'");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value, got '" + t + "'");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside any [section]");
        set_key(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

FullConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
    return parse_config_text(in, path.string());
}

void apply_override(FullConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw UsageError("override must look like section.key=value, got '" +
                         assignment + "'");
    set_key(cfg, trim(assignment.substr(0, dot)),
            trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)));
}

void write_config(std::ostream& os, const FullConfig& cfg) {
    os << "[model]\n";
    os << "scale = " << cfg.model.scale << "\n";
    os << "num_blocks = " << cfg.model.num_blocks << "\n";
    os << "channels = " << cfg.model.channels << "\n";
    os << "theta = " << cfg.model.theta << "\n";
    os << "mfef_expansion = " << cfg.model.mfef_expansion << "\n";
    os << "irf_expansion = " << cfg.model.irf_expansion << "\n";
    os << "lka_dilation = " << cfg.model.lka_dilation << "\n";
    os << "use_lka = " << (cfg.model.use_lka ? "true" : "false") << "\n";
    os << "use_repconv = " << (cfg.model.use_repconv ? "true" : "false") << "\n";
    os << "ffn_kind = " << to_string(cfg.model.ffn_kind) << "\n";
    os << "cross_module = " << to_string(cfg.model.cross_module) << "\n";
    os << "\n[train]\n";
    os << "lr0 = " << cfg.train.lr0 << "\n";
    os << "lr_min = " << cfg.train.lr_min << "\n";
    os << "beta1 = " << cfg.train.beta1 << "\n";
    os << "beta2 = " << cfg.train.beta2 << "\n";
    os << "weight_decay = " << cfg.train.weight_decay << "\n";
    os << "total_iters = " << cfg.train.total_iters << "\n";
    os << "batch_size = " << cfg.train.batch_size << "\n";
    os << "seed = " << cfg.train.seed << "\n";
    os << "checkpoint_every = " << cfg.train.checkpoint_every << "\n";
    os << "eval_every = " << cfg.train.eval_every << "\n";
    os << "\n[data]\n";
    os << "root = " << cfg.data.root << "\n";
    os << "split = " << cfg.data.split << "\n";
    os << "eval_split = " << cfg.data.eval_split << "\n";
    os << "patch_h = " << cfg.data.patch_h << "\n";
    os << "patch_w = " << cfg.data.patch_w << "\n";
    os << "hflip = " << (cfg.data.augment.hflip ? "true" : "false") << "\n";
    os << "vflip = " << (cfg.data.augment.vflip ? "true" : "false") << "\n";
    os << "channel_shuffle = " << (cfg.data.augment.channel_shuffle ? "true" : "false") << "\n";
    os << "rot90 = " << (cfg.data.augment.rot90 ? "true" : "false") << "\n";
    os << "\n[loss]\n";
    os << "lambda = " << cfg.loss.lambda << "\n";
    os << "epsilon = " << cfg.loss.epsilon << "\n";
}

}  // namespace mffssr
