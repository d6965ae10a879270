// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "nacn2n/checkpoint.hpp"
#include "nacn2n/config.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/experiments.hpp"
#include "nacn2n/phantom.hpp"

namespace nacn2n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : Error {
    using Error::Error;
};

struct Common {
    std::string config_file;
    bool dry_run = false;
};

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extra) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& arg : extra) {
        const auto eq = arg.find('=');
        if (arg.rfind("--", 0) != 0 || eq == std::string::npos || arg.find('.') > eq) {
            throw UsageError("unrecognized argument '" + arg + "' (overrides look like --section.key=value)");
        }
        out.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
    }
    return out;
}

ResolvedConfig resolve(const Common& c, const std::vector<std::string>& extra, std::ostream& err) {
    const std::optional<std::string> file =
        c.config_file.empty() ? std::nullopt : std::optional<std::string>(c.config_file);
    ResolvedConfig rc = resolve_config(file, parse_overrides(extra), std::getenv("NACN2N_SEED"));
    for (const auto& n : rc.notes) err << "note: " << n << '\n';
    err << "resolved config: " << rc.json.dump() << '\n';
    return rc;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << s;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

std::vector<ImageGrid> load_dir(const fs::path& dir, std::vector<std::string>* paths = nullptr) {
    if (!fs::is_directory(dir)) throw IoError("no images found: " + dir.string() + " is not a directory");
    const auto files = list_images(dir);
    if (files.empty()) throw IoError("no images found in " + dir.string());
    std::vector<ImageGrid> out;
    for (const auto& f : files) {
        out.push_back(normalize(load_image(f)));
        if (paths) paths->push_back(fs::absolute(f).string());
    }
    return out;
}

std::string seq_name(const std::string& id, int k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_c%02d", k);
    return id + buf;
}

// Training images and (optionally) a validation set for train/eval commands.
struct TrainData {
    std::vector<ImageGrid> train;
    std::vector<std::string> train_paths;
    std::optional<ValidationSet> validation;
    std::string source;
};

TrainData gather(const RootConfig& cfg, std::ostream& err) {
    TrainData td;
    if (cfg.data.input_dir.empty()) {
        if (cfg.experiment.scale == "full") throw ConfigError("full scale needs data.input_dir", "data.input_dir");
        err << "note: data.input_dir not set; using synthetic phantoms\n";
        const ExperimentData d = prepare_data(cfg);
        td.train = d.train_ldct;
        td.validation = ValidationSet{d.test_inputs, d.test_refs};
        td.source = d.source;
        return td;
    }
    std::vector<std::string> paths;
    std::vector<ImageGrid> all = load_dir(cfg.data.input_dir, &paths);
    std::map<std::string, ImageGrid> refs;
    if (!cfg.data.reference_dir.empty()) {
        for (auto& g : load_dir(cfg.data.reference_dir)) refs.emplace(g.id(), std::move(g));
    }
    const auto sp = split(all, cfg.data.train_fraction, cfg.data.seed);
    const std::set<std::string> train_ids(sp.train_ids.begin(), sp.train_ids.end());
    ValidationSet val;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (train_ids.count(all[i].id())) {
            td.train.push_back(all[i]);
            td.train_paths.push_back(paths[i]);
        } else if (auto it = refs.find(all[i].id()); it != refs.end()) {
            val.inputs.push_back(all[i]);
            val.references.push_back(it->second);
        }
    }
    if (!val.inputs.empty()) td.validation = std::move(val);
    td.source = cfg.data.input_dir;
    return td;
}

int cmd_corrupt(const RootConfig& cfg, const fs::path& in, const fs::path& out, std::ostream& os) {
    std::vector<std::string> paths;
    const auto images = load_dir(in, &paths);
    ensure_dir(out);
    json files = json::array();
    for (std::size_t i = 0; i < images.size(); ++i) {
        for (int k = 0; k < cfg.data.copies; ++k) {
            const std::uint64_t seed = copy_seed(cfg.noise.seed, images[i].id(), k);
            ImageGrid z = corrupt(images[i], cfg.noise, seed);
            const std::string name = seq_name(images[i].id(), k) + ".nacg";
            save_image(z, out / name, ImageFormat::raw);
            files.push_back({{"file", name}, {"source", paths[i]}, {"id", images[i].id()},
                             {"copy", k}, {"seed", seed}});
        }
    }
    json man{{"format", "nacn2n-corrupt"}, {"version", 1}, {"spec", noise_spec_to_json(cfg.noise)},
             {"generator", RandomStream::kGeneratorName}, {"copies", cfg.data.copies}, {"files", files}};
    write_text(out / "manifest.json", man.dump(2) + "\n");
    os << "wrote " << files.size() << " corrupted images to " << out.string() << '\n';
    return 0;
}

int cmd_build_dataset(const RootConfig& cfg, const fs::path& in, const fs::path& out, std::ostream& os) {
    std::vector<std::string> paths;
    auto images = load_dir(in, &paths);
    const auto sp = split(images, cfg.data.train_fraction, cfg.data.seed);
    const std::set<std::string> train_ids(sp.train_ids.begin(), sp.train_ids.end());
    std::vector<ImageGrid> train;
    std::vector<std::string> train_paths;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (train_ids.count(images[i].id())) {
            train.push_back(images[i]);
            train_paths.push_back(paths[i]);
        }
    }
    const PairSet ps = build_pairs(train, cfg.noise, cfg.data.copies, cfg.data.mode, cfg.noise.seed, train_paths);
    json man = ps.manifest();
    man["split"] = {{"train", sp.train_ids}, {"test", sp.test_ids},
                    {"fraction", cfg.data.train_fraction}, {"seed", cfg.data.seed}};
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    write_text(out, man.dump(2) + "\n");
    os << "pair set: " << ps.size() << " pairs from " << train.size() << " training images ("
       << sp.test_ids.size() << " held out) -> " << out.string() << '\n';
    return 0;
}

PairSet pairs_for_training(const RootConfig& cfg, TrainData& td) {
    if (!cfg.data.manifest.empty()) {
        std::ifstream in(cfg.data.manifest);
        if (!in) throw IoError("cannot read pair manifest " + cfg.data.manifest);
        const json man = json::parse(in);
        std::vector<ImageGrid> imgs;
        for (const auto& s : man.at("sources")) {
            ImageGrid g = normalize(load_image(s.at("path").get<std::string>()));
            g.set_id(s.at("id").get<std::string>());
            g.set_group(s.value("group", ""));
            imgs.push_back(std::move(g));
        }
        return pairs_from_manifest(man, std::move(imgs));
    }
    std::vector<ImageGrid> sources = td.train;
    if (cfg.data.patch_size > 0) {
        std::vector<ImageGrid> patches;
        for (const auto& img : sources) {
            auto p = extract_patches(img, cfg.data.patch_size, cfg.data.patch_stride);
            patches.insert(patches.end(), p.begin(), p.end());
        }
        sources = std::move(patches);
        td.train_paths.clear();
    }
    return build_pairs(sources, cfg.noise, cfg.data.copies, cfg.data.mode, cfg.noise.seed, td.train_paths);
}

int cmd_train(const ResolvedConfig& rc, const fs::path& out, const std::string& resume, std::ostream& os,
              std::ostream& err) {
    const RootConfig& cfg = rc.config;
    TrainData td = gather(cfg, err);
    const PairSet pairs = pairs_for_training(cfg, td);
    ensure_dir(out);
    write_text(out / "config.json", rc.json.dump(2) + "\n");
    ChainModel<float> chain = compose_chain(build_backbone<float>(cfg.model.backbone), cfg.model.modules,
                                            cfg.model.init_seed);
    TrainOptions opt;
    if (!resume.empty()) {
        Checkpoint ck = load_checkpoint(resume);
        if (!(ck.backbone == cfg.model.backbone) || ck.modules != cfg.model.modules) {
            throw ConfigError("checkpoint model does not match model config", "model");
        }
        chain.set_theta(ck.theta);
        opt.resume = ck.state;
        os << "resuming from epoch " << ck.state.epoch << '\n';
    } else {
        std::error_code ec;
        fs::remove(out / "train_log.csv", ec);
    }
    opt.checkpoint_dir = out / "checkpoints";
    opt.log_csv = out / "train_log.csv";
    opt.validation = td.validation;
    opt.on_epoch = [&](const EpochRecord& r) {
        os << "epoch " << r.epoch << " loss " << r.loss << " lr " << r.lr;
        if (r.val_psnr) os << " val_psnr " << *r.val_psnr << " val_ssim " << *r.val_ssim;
        os << '\n';
    };
    os << "training " << cfg.model.backbone.name << " T=" << cfg.model.modules << " ("
       << chain.parameter_count() << " parameters) on " << pairs.size() << " pairs\n";
    const TrainState st = train(chain, pairs, cfg.train, opt);
    save_checkpoint(out / "checkpoint", chain, st, rc.json["train"]);
    write_text(out / "history.json", st.history.to_json().dump(2) + "\n");
    os << "checkpoint: " << (out / "checkpoint").string() << '\n';
    return 0;
}

int cmd_eval(const ResolvedConfig& rc, const fs::path& ckpt_dir, const fs::path& out, bool all_images,
             std::ostream& os, std::ostream& err) {
    const RootConfig& cfg = rc.config;
    if (!fs::exists(ckpt_dir / "manifest.json")) throw IoError("checkpoint not found: " + ckpt_dir.string());
    const ChainModel<float> chain = restore_chain(load_checkpoint(ckpt_dir));
    std::vector<ImageGrid> inputs, refs;
    if (cfg.data.input_dir.empty()) {
        err << "note: data.input_dir not set; evaluating on synthetic phantoms\n";
        const ExperimentData d = prepare_data(cfg);
        inputs = d.test_inputs;
        refs = d.test_refs;
    } else {
        if (cfg.data.reference_dir.empty()) {
            throw ConfigError("eval needs data.reference_dir with clean references", "data.reference_dir");
        }
        auto all = load_dir(cfg.data.input_dir);
        std::map<std::string, ImageGrid> rmap;
        for (auto& g : load_dir(cfg.data.reference_dir)) rmap.emplace(g.id(), std::move(g));
        std::set<std::string> keep;
        if (!all_images) {
            const auto sp = split(all, cfg.data.train_fraction, cfg.data.seed);
            keep.insert(sp.test_ids.begin(), sp.test_ids.end());
        }
        for (auto& x : all) {
            if (!all_images && !keep.count(x.id())) continue;
            auto it = rmap.find(x.id());
            if (it == rmap.end()) throw Error("no reference for image id '" + x.id() + "'");
            inputs.push_back(x);
            refs.push_back(it->second);
        }
    }
    const Evaluation ev = evaluate(chain, inputs, refs);
    json j{{"model", ev.model.to_json()}, {"baseline", ev.baseline.to_json()},
           {"checkpoint", ckpt_dir.string()}};
    if (cfg.experiment.scale == "full") j["reference"] = published_reference("method");
    ensure_dir(out);
    write_text(out / "metrics.csv", ev.model.to_csv());
    write_text(out / "baseline.csv", ev.baseline.to_csv());
    write_text(out / "metrics.json", j.dump(2) + "\n");
    char buf[160];
    std::snprintf(buf, sizeof buf, "model    PSNR %.4f dB  SSIM %.4f\ninput    PSNR %.4f dB  SSIM %.4f\n",
                  ev.model.aggregate.psnr_mean, ev.model.aggregate.ssim_mean,
                  ev.baseline.aggregate.psnr_mean, ev.baseline.aggregate.ssim_mean);
    os << buf;
    if (cfg.experiment.scale == "full") os << "published reference, not reproduced: 27.294 dB / 0.6978\n";
    return 0;
}

int cmd_experiment(const RootConfig& cfg, std::ostream& os) {
    const ExperimentResult res = run_experiment(cfg);
    const auto files = emit_report(res, cfg.experiment.output_dir);
    for (const auto& row : res.rows) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-16s %-11s PSNR %8.4f  SSIM %.4f  (input %8.4f / %.4f)%s\n",
                      row.value.c_str(), row.status.c_str(), row.psnr, row.ssim, row.baseline_psnr,
                      row.baseline_ssim, row.resumed ? " [cached]" : "");
        os << buf;
    }
    for (const auto& n : res.notes) os << "note: " << n << '\n';
    for (const auto& f : files) os << "wrote " << f.string() << '\n';
    return 0;
}

int cmd_phantoms(const RootConfig& cfg, int n, const fs::path& out, const std::string& format,
                 std::ostream& os) {
    if (n < 1) throw ConfigError("phantom count must be >= 1", "count");
    const ImageFormat fmt = parse_image_format(format);
    const auto ph = make_phantoms(n, cfg.experiment.phantom_size, cfg.experiment.phantom_seed);
    ensure_dir(out);
    json files = json::array();
    const std::string ext = fmt == ImageFormat::raw ? ".nacg" : ".png";
    for (const auto& p : ph) {
        save_image(p, out / (p.id() + ext), fmt);
        files.push_back({{"file", p.id() + ext}, {"id", p.id()}});
    }
    json man{{"format", "nacn2n-phantoms"}, {"version", 1}, {"count", n},
             {"size", cfg.experiment.phantom_size}, {"seed", cfg.experiment.phantom_seed},
             {"image_format", to_string(fmt)}, {"files", files}};
    write_text(out / "manifest.json", man.dump(2) + "\n");
    os << "wrote " << n << " phantoms to " << out.string() << '\n';
    return 0;
}

int cmd_report(const fs::path& dir, std::ostream& os) {
    if (!fs::is_directory(dir)) throw IoError("report directory not found: " + dir.string());
    std::vector<fs::path> tables;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.size() > 11 && name.substr(name.size() - 11) == "_table.json") tables.push_back(e.path());
    }
    std::sort(tables.begin(), tables.end());
    if (tables.empty()) throw IoError("no *_table.json files in " + dir.string());
    std::ostringstream md;
    md << "# " << dir.filename().string() << "\n";
    for (const auto& t : tables) {
        std::ifstream in(t);
        const json j = json::parse(in);
        md << "\n## " << j.value("axis", "?") << "\n\n| " << j.value("axis", "?")
           << " | status | PSNR | SSIM | input PSNR | input SSIM |\n|---|---|---|---|---|---|\n";
        auto f = [](const json& v) {
            if (!v.is_number()) return std::string("-");
            char b[32];
            std::snprintf(b, sizeof b, "%.4f", v.get<double>());
            return std::string(b);
        };
        for (const auto& r : j.at("rows")) {
            md << "| " << r.value("value", "") << " | " << r.value("status", "") << " | " << f(r["psnr"])
               << " | " << f(r["ssim"]) << " | " << f(r["baseline_psnr"]) << " | "
               << f(r["baseline_ssim"]) << " |\n";
        }
        if (j.contains("reference") && !j["reference"]["rows"].empty()) {
            md << "\n" << j["reference"].value("label", "") << ":\n\n";
            for (const auto& r : j["reference"]["rows"]) {
                md << "- " << r.value("name", "") << ": " << f(r["psnr"]) << " dB / " << f(r["ssim"]) << "\n";
            }
        }
    }
    write_text(dir / "summary.md", md.str());
    os << "wrote " << (dir / "summary.md").string() << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Self-supervised low-dose CT denoising (noise2noise with noisy-as-clean pairs)", "nacn2n"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config_file, "JSON config file");
        sub->add_flag("--dry-run", common.dry_run, "print the resolved config and exit");
        sub->allow_extras();
        sub->footer("Any config value can be set with --section.key=value, e.g. --train.epochs=10");
    };

    std::string in_dir, out_path, ckpt, resume, format = "raw", plan_file;
    int count = 0;
    bool all_images = false;
    std::vector<std::string> methods;

    auto* corrupt_cmd = app.add_subcommand("corrupt", "corrupt every image in a directory");
    add_common(corrupt_cmd);
    corrupt_cmd->add_option("--in", in_dir, "input image directory")->required();
    corrupt_cmd->add_option("--out", out_path, "output directory")->required();

    auto* build_cmd = app.add_subcommand("build-dataset", "write a pair-set manifest");
    add_common(build_cmd);
    build_cmd->add_option("--in", in_dir, "input image directory")->required();
    build_cmd->add_option("--out", out_path, "manifest path")->required();

    auto* train_cmd = app.add_subcommand("train", "train a chain model");
    add_common(train_cmd);
    train_cmd->add_option("--out", out_path, "run directory")->default_val("runs/train");
    train_cmd->add_option("--resume", resume, "checkpoint directory to continue from");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against clean references");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", ckpt, "checkpoint directory")->required();
    eval_cmd->add_option("--out", out_path, "output directory")->default_val("runs/eval");
    eval_cmd->add_flag("--all", all_images, "evaluate every image, not only the held-out split");

    auto* sweep_cmd = app.add_subcommand("sweep", "run the sweep described by experiment.axis");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--plan", plan_file, "experiment plan (same format as --config)");

    auto* ablate_cmd = app.add_subcommand("ablate", "noise-model and noisy-as-clean ablations");
    add_common(ablate_cmd);

    auto* tab_cmd = app.add_subcommand("tabulate", "compare against precomputed external outputs");
    add_common(tab_cmd);
    tab_cmd->add_option("--method", methods, "external method as name=directory (repeatable)");

    auto* ph_cmd = app.add_subcommand("phantoms", "write clean synthetic phantoms");
    add_common(ph_cmd);
    ph_cmd->add_option("count", count, "number of phantoms")->required();
    ph_cmd->add_option("--out", out_path, "output directory")->required();
    ph_cmd->add_option("--format", format, "raw, png8 or png16")->default_val("raw");

    auto* rep_cmd = app.add_subcommand("report", "summarize emitted tables as markdown");
    add_common(rep_cmd);
    rep_cmd->add_option("--dir", in_dir, "experiment directory holding *_table.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        if (!plan_file.empty()) {
            if (!common.config_file.empty()) throw UsageError("give either --plan or --config, not both");
            common.config_file = plan_file;
        }
        auto extras = sub->remaining();
        if (sub == ablate_cmd) extras.insert(extras.begin(), "--experiment.axis=ablation");
        if (sub == tab_cmd) extras.insert(extras.begin(), "--experiment.axis=none");
        ResolvedConfig rc = resolve(common, extras, err);
        if (sub == ablate_cmd && rc.config.experiment.values.empty()) {
            rc.config.experiment.values = json::array({"poisson_only", "gaussian_only", "ndct_base", "full"});
            rc.json = to_json(rc.config);
        }
        for (const auto& m : methods) {
            const auto eq = m.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--method expects name=directory, got '" + m + "'");
            rc.config.experiment.externals.push_back({m.substr(0, eq), m.substr(eq + 1)});
            rc.json = to_json(rc.config);
        }
        if (sub == sweep_cmd && (rc.config.experiment.axis == "none" || rc.config.experiment.axis == "ablation")) {
            if (rc.config.experiment.axis == "none") {
                throw ConfigError("sweep needs experiment.axis (backbone, module_count, gaussian_variance)",
                                  "experiment.axis");
            }
        }
        if (common.dry_run) {
            out << rc.json.dump(2) << '\n';
            return 0;
        }
        const RootConfig& cfg = rc.config;
        if (sub == corrupt_cmd) return cmd_corrupt(cfg, in_dir, out_path, out);
        if (sub == build_cmd) return cmd_build_dataset(cfg, in_dir, out_path, out);
        if (sub == train_cmd) return cmd_train(rc, out_path, resume, out, err);
        if (sub == eval_cmd) return cmd_eval(rc, ckpt, out_path, all_images, out, err);
        if (sub == sweep_cmd || sub == ablate_cmd || sub == tab_cmd) return cmd_experiment(cfg, out);
        if (sub == ph_cmd) return cmd_phantoms(cfg, count, out_path, format, out);
        if (sub == rep_cmd) return cmd_report(in_dir, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        err << "config error";
        if (!e.key().empty()) err << " [" << e.key() << "]";
        err << ": " << e.what() << '\n';
        return 1;
    } catch (const RegistryError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace nacn2n
