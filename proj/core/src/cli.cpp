#include "mffssr/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mffssr/config_file.hpp"
#include "mffssr/costs.hpp"
#include "mffssr/errors.hpp"
#include "mffssr/metrics.hpp"
#include "mffssr/plot.hpp"
#include "mffssr/serialize.hpp"
#include "mffssr/trainer.hpp"

namespace mffssr::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt_count(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(0);
    os << v;
    return os.str();
}

void print_model_line(std::ostream& out, const ModelConfig& m) {
    out << "model: scale=" << m.scale << " blocks=" << m.num_blocks
        << " channels=" << m.channels << " theta=" << m.theta
        << " cross=" << to_string(m.cross_module) << " ffn=" << to_string(m.ffn_kind)
        << " lka=" << (m.use_lka ? "on" : "off")
        << " repconv=" << (m.use_repconv ? "on" : "off") << "\n";
}

void print_cost_report(std::ostream& out, const ModelConfig& m,
                       const CostReport& r, bool fused) {
    print_model_line(out, m);
    out << "params.total = " << r.total_params
        << (fused ? " (repconv fused)" : "") << "\n";
    for (const auto& [k, v] : r.params_breakdown)
        out << "params." << k << " = " << v << "\n";
    out << "input = " << r.input_h << "x" << r.input_w << "\n";
    out << "macs.pair = " << fmt_count(r.macs_pair) << "\n";
    out << "macs.single_view = " << fmt_count(r.macs_single_view) << "\n";
    for (const auto& [k, v] : r.macs_breakdown)
        out << "macs." << k << " = " << fmt_count(v) << "\n";
    // Both conventions: some papers report FLOPs = 2 * MACs.
    out << "flops.pair = " << fmt_count(2.0 * r.macs_pair) << "\n";
    out << "flops.single_view = " << fmt_count(2.0 * r.macs_single_view) << "\n";
}

FullConfig load_full_config(const std::string& config_path,
                            const std::vector<std::string>& overrides) {
    FullConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
}

int run_guarded(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
    CLI::App app{"MFFSSR stereo image super-resolution toolkit"};
    app.require_subcommand(1);

    // --- summarize ---
    auto* sum = app.add_subcommand("summarize", "Print parameter and MAC costs");
    int sum_scale = 4;
    std::string sum_config, sum_ablation;
    std::vector<std::string> sum_sets;
    int sum_h = 128, sum_w = 128;
    bool sum_fused = false;
    sum->add_option("--scale", sum_scale, "Use the stock config for this scale");
    sum->add_option("--config", sum_config, "Config file");
    sum->add_option("--set", sum_sets, "Override section.key=value");
    sum->add_option("--ablation", sum_ablation, "Apply a named ablation preset");
    sum->add_option("--height", sum_h, "MAC input height");
    sum->add_option("--width", sum_w, "MAC input width");
    sum->add_flag("--fused", sum_fused, "Count RepConv in fused deploy form");

    // --- ablate ---
    auto* abl = app.add_subcommand("ablate", "Resolve an ablation preset");
    std::string abl_name;
    bool abl_summarize = false;
    std::string abl_emit;
    int abl_scale = 4;
    abl->add_option("--name", abl_name, "Preset name")->required();
    abl->add_option("--scale", abl_scale, "Base scale config");
    abl->add_flag("--summarize", abl_summarize, "Also print costs");
    abl->add_option("--emit", abl_emit, "Write the resolved config file here");

    // --- train ---
    auto* tr = app.add_subcommand("train", "Train a model");
    std::string tr_config, tr_out, tr_resume;
    std::vector<std::string> tr_sets;
    tr->add_option("--config", tr_config, "Config file")->required();
    tr->add_option("--set", tr_sets, "Override section.key=value");
    tr->add_option("--out", tr_out, "Output directory")->required();
    tr->add_option("--resume", tr_resume, "Resume from checkpoint");

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "Evaluate PSNR/SSIM on a dataset");
    std::string ev_weights, ev_root, ev_split = "val", ev_out;
    int ev_border = 0;
    bool ev_fused = false;
    ev->add_option("--weights", ev_weights, "Weight archive")->required();
    ev->add_option("--data", ev_root, "Dataset root")->required();
    ev->add_option("--split", ev_split, "Dataset split");
    ev->add_option("--border-crop", ev_border, "Crop borders before metrics");
    ev->add_flag("--fused", ev_fused, "Run RepConv in deploy form");
    ev->add_option("--out", ev_out, "Directory for report.txt");

    // --- infer ---
    auto* in = app.add_subcommand("infer", "Super-resolve one stereo pair");
    std::string in_weights, in_left, in_right, in_out;
    bool in_fused = false;
    in->add_option("--weights", in_weights, "Weight archive")->required();
    in->add_option("--left", in_left, "LR left PNG")->required();
    in->add_option("--right", in_right, "LR right PNG")->required();
    in->add_option("--out", in_out, "Output prefix (writes <out>_L.png/_R.png)")
        ->required();
    in->add_flag("--fused", in_fused, "Run RepConv in deploy form");

    // --- plot ---
    auto* pl = app.add_subcommand("plot", "Render loss curves and crops");
    std::string pl_log, pl_out, pl_lr, pl_sr, pl_hr, pl_crops;
    pl->add_option("--log", pl_log, "Training log file");
    pl->add_option("--out", pl_out, "Loss curve SVG path");
    pl->add_option("--lr", pl_lr, "LR crop PNG");
    pl->add_option("--sr", pl_sr, "SR crop PNG");
    pl->add_option("--hr", pl_hr, "HR crop PNG");
    pl->add_option("--out-crops", pl_crops, "Side-by-side PNG path");

    std::vector<std::string> argv_storage;
    argv_storage.emplace_back("mffssr");
    for (const auto& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(argv_storage.size());
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_code::kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return exit_code::kUsage;
    }

    if (sum->parsed()) {
        FullConfig cfg;
        if (!sum_config.empty()) {
            cfg = load_full_config(sum_config, sum_sets);
        } else {
            cfg.model = ModelConfig::defaults_for_scale(sum_scale);
            for (const auto& o : sum_sets) apply_override(cfg, o);
        }
        ModelConfig m = cfg.model;
        if (!sum_ablation.empty()) m = AblationSpec::by_name(sum_ablation).apply(m);
        print_cost_report(out, m, cost_report(m, sum_h, sum_w, sum_fused), sum_fused);
        return exit_code::kSuccess;
    }

    if (abl->parsed()) {
        const ModelConfig base = ModelConfig::defaults_for_scale(abl_scale);
        const ModelConfig m = AblationSpec::by_name(abl_name).apply(base);
        out << "ablation: " << abl_name << "\n";
        out << "use_lka = " << (m.use_lka ? "true" : "false") << "\n";
        out << "use_repconv = " << (m.use_repconv ? "true" : "false") << "\n";
        out << "ffn_kind = " << to_string(m.ffn_kind) << "\n";
        out << "cross_module = " << to_string(m.cross_module) << "\n";
        out << "theta = " << m.theta << "\n";
        if (abl_summarize)
            print_cost_report(out, m, cost_report(m), false);
        if (!abl_emit.empty()) {
            FullConfig full;
            full.model = m;
            std::ofstream os(abl_emit);
            if (!os) throw DataError("cannot write '" + abl_emit + "'");
            write_config(os, full);
        }
        return exit_code::kSuccess;
    }

    if (tr->parsed()) {
        FullConfig cfg = load_full_config(tr_config, tr_sets);
        cfg.model.validate();
        fs::create_directories(tr_out);
        Model model(cfg.model);
        Rng init_rng(cfg.train.seed);
        model.init_weights(init_rng);

        const DatasetManifest manifest =
            load_manifest(cfg.data.root, cfg.data.split, cfg.model.scale,
                          cfg.data.patch_h, cfg.data.patch_w);
        auto provider = dataset_provider(manifest, cfg.train.batch_size,
                                         cfg.data.augment);
        const fs::path out_dir(tr_out);
        std::ofstream log(out_dir / "train.log",
                          tr_resume.empty() ? std::ios::trunc : std::ios::app);
        TrainHooks hooks;
        hooks.periodic = [&](std::int64_t iter) {
            const fs::path eval_dir = fs::path(cfg.data.root) / cfg.data.eval_split;
            if (!fs::is_directory(eval_dir)) return;
            const DatasetManifest ev = load_manifest(cfg.data.root, cfg.data.eval_split,
                                                     cfg.model.scale);
            const MetricReport rep = evaluate_dataset(model, ev);
            std::ofstream rs(out_dir / ("eval_" + std::to_string(iter) + ".txt"));
            write_report(rs, rep);
        };
        try {
            train_loop(model, cfg.train, cfg.loss, provider, &log,
                       out_dir / "checkpoint.mffw",
                       tr_resume.empty() ? fs::path() : fs::path(tr_resume), hooks);
        } catch (const NumericError& e) {
            std::ofstream dump(out_dir / "diagnostic.txt");
            dump << e.what() << "\n";
            throw;
        }
        save_weights(out_dir / "weights.mffw", model);
        out << "trained: " << (out_dir / "weights.mffw").string() << "\n";
        return exit_code::kSuccess;
    }

    if (ev->parsed()) {
        Model model = load_model(ev_weights);
        if (ev_fused) model.fuse_repconv();
        const DatasetManifest manifest =
            load_manifest(ev_root, ev_split, model.config().scale);
        EvalConfig ecfg;
        ecfg.border_crop = ev_border;
        ecfg.fused = ev_fused;
        const MetricReport rep = evaluate_dataset(model, manifest, ecfg);
        write_report(out, rep);
        if (!ev_out.empty()) {
            fs::create_directories(ev_out);
            std::ofstream rs(fs::path(ev_out) / "report.txt");
            write_report(rs, rep);
        }
        return exit_code::kSuccess;
    }

    if (in->parsed()) {
        Model model = load_model(in_weights);
        if (in_fused) model.fuse_repconv();
        const Tensor left = read_png(in_left);
        const Tensor right = read_png(in_right);
        const StereoPair sr = model.forward_values(left, right, in_fused);
        write_png(in_out + "_L.png", sr.left);
        write_png(in_out + "_R.png", sr.right);
        out << "wrote " << in_out << "_L.png and " << in_out << "_R.png\n";
        return exit_code::kSuccess;
    }

    if (pl->parsed()) {
        bool did = false;
        if (!pl_log.empty()) {
            if (pl_out.empty())
                throw UsageError("plot --log requires --out <svg>");
            write_loss_curve_svg(pl_log, pl_out);
            out << "wrote " << pl_out << "\n";
            did = true;
        }
        if (!pl_lr.empty() || !pl_sr.empty() || !pl_hr.empty()) {
            if (pl_lr.empty() || pl_sr.empty() || pl_hr.empty() || pl_crops.empty())
                throw UsageError("plot crops require --lr --sr --hr and --out-crops");
            write_side_by_side_png(pl_lr, pl_sr, pl_hr, pl_crops);
            out << "wrote " << pl_crops << "\n";
            did = true;
        }
        if (!did) throw UsageError("plot: nothing to do (pass --log or --lr/--sr/--hr)");
        return exit_code::kSuccess;
    }

    return exit_code::kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return run_guarded(args, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_code::kNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return exit_code::kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::kData;
    }
}

}  // namespace mffssr::cli
