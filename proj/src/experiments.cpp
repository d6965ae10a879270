// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nacn2n/checkpoint.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/phantom.hpp"
#include "nacn2n/plot.hpp"

namespace nacn2n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_or_nan(const json& j, const char* k) {
    return j.contains(k) && j[k].is_number() ? j[k].get<double>() : kNaN;
}

std::string fmt(double v, int prec = 6) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("short write to " + p.string());
}

std::string value_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 1e15) return std::to_string(static_cast<long long>(d));
        std::ostringstream os;
        os << d;
        return os.str();
    }
    return v.dump();
}

const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> v{"poisson_only", "gaussian_only", "ndct_base", "full"};
    return v;
}

void require_values(const ExperimentPlan& plan) {
    if (plan.experiment.values.empty()) {
        throw ConfigError("experiment.values must not be empty for axis " + plan.experiment.axis,
                          "experiment.values");
    }
}

fs::path experiment_dir(const ExperimentPlan& plan) {
    return fs::path(plan.experiment.output_dir) / plan.experiment.name;
}

ExperimentResult new_result(const ExperimentPlan& plan, const std::string& axis) {
    ExperimentResult r;
    r.experiment = plan.experiment.name;
    r.axis = axis;
    r.reference = published_reference(axis);
    return r;
}

// Desk runs are capped at the desk budget; the caps are recorded in notes.
ExperimentPlan apply_scale(ExperimentPlan plan, std::vector<std::string>& notes) {
    if (plan.experiment.scale != "desk") return plan;
    if (plan.train.epochs > 30) {
        notes.push_back("desk scale: train.epochs capped from " + std::to_string(plan.train.epochs) + " to 30");
        plan.train.epochs = 30;
    }
    const long pairs_per_source = plan.data.mode == PairingMode::n2n_pair
                                      ? static_cast<long>(plan.data.copies) * (plan.data.copies - 1)
                                      : plan.data.copies;
    const long pairs = pairs_per_source * plan.experiment.train_phantoms;
    if (pairs > 300) {
        const int cap = static_cast<int>(300 / pairs_per_source);
        notes.push_back("desk scale: experiment.train_phantoms capped from " +
                        std::to_string(plan.experiment.train_phantoms) + " to " + std::to_string(cap));
        plan.experiment.train_phantoms = std::max(1, cap);
    }
    return plan;
}

}  // namespace

json RunResult::to_json() const {
    return {{"value", value},
            {"status", status},
            {"note", note},
            {"psnr", num(psnr)},
            {"ssim", num(ssim)},
            {"baseline_psnr", num(baseline_psnr)},
            {"baseline_ssim", num(baseline_ssim)},
            {"first_loss", num(first_loss)},
            {"final_loss", num(final_loss)},
            {"parameter_count", parameter_count},
            {"pair_count", pair_count},
            {"config_hash", config_hash},
            {"seeds", seeds},
            {"checkpoint", checkpoint}};
}

RunResult RunResult::from_json(const json& j) {
    RunResult r;
    r.value = j.value("value", "");
    r.status = j.value("status", "ok");
    r.note = j.value("note", "");
    r.psnr = num_or_nan(j, "psnr");
    r.ssim = num_or_nan(j, "ssim");
    r.baseline_psnr = num_or_nan(j, "baseline_psnr");
    r.baseline_ssim = num_or_nan(j, "baseline_ssim");
    r.first_loss = num_or_nan(j, "first_loss");
    r.final_loss = num_or_nan(j, "final_loss");
    r.parameter_count = j.value("parameter_count", std::size_t{0});
    r.pair_count = j.value("pair_count", std::size_t{0});
    r.config_hash = j.value("config_hash", "");
    r.seeds = j.value("seeds", json::object());
    r.checkpoint = j.value("checkpoint", "");
    return r;
}

ExperimentPlan load_plan(const fs::path& path) {
    return resolve_config(path.string(), {}, nullptr).config;
}

ExperimentPlan desk_plan() {
    ExperimentPlan p;
    p.model.backbone = BackboneConfig::defaults_for("unet");
    p.model.backbone.base_channels = 16;
    p.model.modules = 5;
    p.train.epochs = 30;
    p.experiment.scale = "desk";
    p.experiment.train_phantoms = 100;
    p.experiment.test_phantoms = 16;
    p.experiment.phantom_size = 64;
    return p;
}

ExperimentData prepare_data(const ExperimentPlan& plan) {
    ExperimentData d;
    const auto& e = plan.experiment;
    if (e.scale == "desk") {
        d.train_clean = make_phantoms(e.train_phantoms, e.phantom_size, e.phantom_seed, "train");
        d.test_refs = make_phantoms(e.test_phantoms, e.phantom_size,
                                    derive_seed(e.phantom_seed, {fnv1a64("test")}), "test");
        auto observe = [&](const ImageGrid& y) {
            // stored observations live in the display range, like decoded CT slices
            ImageGrid x = clip_for_display(
                corrupt(y, e.ldct, derive_seed(e.ldct.seed, {fnv1a64(y.id())})));
            x.set_id(y.id());
            return x;
        };
        for (const auto& y : d.train_clean) d.train_ldct.push_back(observe(y));
        for (const auto& y : d.test_refs) d.test_inputs.push_back(observe(y));
        d.source = "phantoms(seed=" + std::to_string(e.phantom_seed) + ",size=" +
                   std::to_string(e.phantom_size) + ",train=" + std::to_string(e.train_phantoms) +
                   ",test=" + std::to_string(e.test_phantoms) + ")";
        return d;
    }
    if (plan.data.input_dir.empty()) {
        throw ConfigError("full scale needs data.input_dir", "data.input_dir");
    }
    const auto files = list_images(plan.data.input_dir);
    if (files.empty()) throw IoError("no images found in " + plan.data.input_dir);
    std::vector<ImageGrid> ldct;
    for (const auto& f : files) ldct.push_back(normalize(load_image(f)));
    std::map<std::string, ImageGrid> ndct;
    if (!plan.data.reference_dir.empty()) {
        for (const auto& f : list_images(plan.data.reference_dir)) {
            ImageGrid g = normalize(load_image(f));
            ndct.emplace(g.id(), std::move(g));
        }
    }
    const auto sp = split(ldct, plan.data.train_fraction, plan.data.seed);
    const std::set<std::string> train_ids(sp.train_ids.begin(), sp.train_ids.end());
    for (const auto& x : ldct) {
        const auto it = ndct.find(x.id());
        if (train_ids.count(x.id())) {
            d.train_ldct.push_back(x);
            if (it != ndct.end()) d.train_clean.push_back(it->second);
        } else if (it != ndct.end()) {
            d.test_inputs.push_back(x);
            d.test_refs.push_back(it->second);
        }
    }
    if (d.train_clean.size() != d.train_ldct.size()) d.train_clean.clear();
    if (d.test_refs.empty()) {
        throw ConfigError("no normal-dose references found for the test split in data.reference_dir",
                          "data.reference_dir");
    }
    d.source = "dirs(" + plan.data.input_dir + "," + plan.data.reference_dir + ")";
    return d;
}

RunResult run_point(const ExperimentPlan& plan_in, const ExperimentData& data,
                    const std::string& variant, const fs::path& run_dir) {
    ExperimentPlan plan = plan_in;
    RunResult res;
    res.value = run_dir.filename().string();
    const std::string v = variant.empty() ? "full" : variant;
    if (v == "poisson_only") plan.noise.gaussian_variance = 0.0;
    else if (v == "gaussian_only") plan.noise.poisson_scale.reset();
    else if (v != "full" && v != "ndct_base") throw ConfigError("unknown ablation variant '" + v + "'", "experiment.values");

    res.seeds = {{"noise", plan.noise.seed}, {"data", plan.data.seed}, {"init", plan.model.init_seed},
                 {"train", plan.train.seed}, {"phantom", plan.experiment.phantom_seed},
                 {"ldct", plan.experiment.ldct.seed}};
    json point = to_json(plan);
    point.erase("experiment");
    point["variant"] = v;
    point["data_source"] = data.source;
    point["ldct"] = noise_spec_to_json(plan.experiment.ldct);
    res.config_hash = hex_hash(config_hash(point));

    const bool use_clean = v == "ndct_base";
    if (use_clean && data.train_clean.empty()) {
        res.status = "skipped";
        res.note = "ndct_base needs clean references for the training images; none supplied";
        return res;
    }

    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create " + run_dir.string() + ": " + ec.message());
    const fs::path result_file = run_dir / "result.json";
    if (fs::exists(result_file)) {
        std::ifstream in(result_file);
        const json prev = json::parse(in, nullptr, false);
        if (!prev.is_discarded() && prev.value("config_hash", "") == res.config_hash) {
            RunResult r = RunResult::from_json(prev);
            r.resumed = true;
            return r;
        }
    }

    std::vector<ImageGrid> sources = use_clean ? data.train_clean : data.train_ldct;
    if (plan.data.patch_size > 0) {
        std::vector<ImageGrid> patches;
        for (const auto& img : sources) {
            auto p = extract_patches(img, plan.data.patch_size, plan.data.patch_stride);
            patches.insert(patches.end(), p.begin(), p.end());
        }
        sources = std::move(patches);
    }
    const PairSet pairs = build_pairs(sources, plan.noise, plan.data.copies, plan.data.mode, plan.noise.seed);
    res.pair_count = pairs.size();

    ChainModel<float> chain = compose_chain(build_backbone<float>(plan.model.backbone),
                                            plan.model.modules, plan.model.init_seed);
    res.parameter_count = chain.parameter_count();

    TrainOptions opt;
    if (plan.train.checkpoint_every > 0) opt.checkpoint_dir = run_dir / "checkpoints";
    opt.log_csv = run_dir / "train_log.csv";
    fs::remove(opt.log_csv, ec);
    const TrainState st = train(chain, pairs, plan.train, opt);
    if (!st.history.epochs.empty()) {
        res.first_loss = st.history.epochs.front().loss;
        res.final_loss = st.history.epochs.back().loss;
    }
    const fs::path ckpt = run_dir / "checkpoint";
    save_checkpoint(ckpt, chain, st, to_json(plan)["train"]);
    res.checkpoint = ckpt.string();

    const Evaluation ev = evaluate(chain, data.test_inputs, data.test_refs);
    res.psnr = ev.model.aggregate.psnr_mean;
    res.ssim = ev.model.aggregate.ssim_mean;
    res.baseline_psnr = ev.baseline.aggregate.psnr_mean;
    res.baseline_ssim = ev.baseline.aggregate.ssim_mean;
    write_text(run_dir / "metrics.csv", ev.model.to_csv());
    json mj{{"model", ev.model.to_json()}, {"baseline", ev.baseline.to_json()}};
    write_text(run_dir / "metrics.json", mj.dump(2) + "\n");

    const ImageGrid panel = render_panels(
        {data.test_refs[0], data.test_inputs[0], ev.outputs[0]},
        {"CLEAN", "LDCT " + fmt(ev.baseline.rows[0].psnr, 2),
         "OUT " + fmt(ev.model.rows[0].psnr, 2)},
        2);
    save_image(panel, run_dir / "panel.png", ImageFormat::png8);

    if (plan.noise.is_silent()) {
        res.status = "degenerate";
        res.note = "no training noise: input equals target";
    }
    write_text(result_file, res.to_json().dump(2) + "\n");
    return res;
}

ExperimentResult sweep_backbones(const ExperimentPlan& plan_in) {
    require_values(plan_in);
    ExperimentResult out = new_result(plan_in, "backbone");
    const ExperimentPlan plan = apply_scale(plan_in, out.notes);
    std::vector<std::string> names;
    for (const auto& v : plan.experiment.values) {
        if (!v.is_string()) throw ConfigError("backbone values must be names", "experiment.values");
        const auto name = v.get<std::string>();
        if (registry_status(name) == RegistryStatus::unknown) {
            throw RegistryError("unknown backbone '" + name + "' in experiment.values");
        }
        names.push_back(name);
    }
    const ExperimentData data = prepare_data(plan);
    for (const auto& name : names) {
        const fs::path dir = experiment_dir(plan) / ("backbone=" + name);
        if (registry_status(name) == RegistryStatus::reserved) {
            RunResult r;
            r.value = name;
            r.status = "unavailable";
            r.note = "reserved backbone, not implemented";
            out.rows.push_back(r);
            continue;
        }
        ExperimentPlan p = plan;
        p.model.backbone = BackboneConfig::defaults_for(name);
        if (plan.experiment.scale == "desk") {
            p.model.backbone.base_channels =
                std::min(p.model.backbone.base_channels, plan.model.backbone.base_channels);
        }
        RunResult r = run_point(p, data, "full", dir);
        r.value = name;
        out.rows.push_back(r);
    }
    return out;
}

ExperimentResult sweep_module_count(const ExperimentPlan& plan_in) {
    require_values(plan_in);
    ExperimentResult out = new_result(plan_in, "module_count");
    const ExperimentPlan plan = apply_scale(plan_in, out.notes);
    std::vector<int> ts;
    for (const auto& v : plan.experiment.values) {
        if (!v.is_number_integer() || v.get<int>() < 1) {
            throw ConfigError("module_count values must be positive integers", "experiment.values");
        }
        ts.push_back(v.get<int>());
    }
    const ExperimentData data = prepare_data(plan);
    std::optional<std::size_t> count;
    for (int t : ts) {
        ExperimentPlan p = plan;
        p.model.modules = t;
        RunResult r = run_point(p, data, "full", experiment_dir(plan) / ("module_count=" + std::to_string(t)));
        r.value = std::to_string(t);
        if (count && r.parameter_count != *count) {
            throw Error("parameter count changed with T: " + std::to_string(*count) + " vs " +
                        std::to_string(r.parameter_count));
        }
        count = r.parameter_count;
        out.rows.push_back(r);
    }
    out.notes.push_back("parameter_count identical across T: " + std::to_string(*count));
    return out;
}

ExperimentResult sweep_noise_variance(const ExperimentPlan& plan_in) {
    require_values(plan_in);
    ExperimentResult out = new_result(plan_in, "gaussian_variance");
    const ExperimentPlan plan = apply_scale(plan_in, out.notes);
    std::vector<double> vals;
    for (const auto& v : plan.experiment.values) {
        if (!v.is_number()) throw ConfigError("gaussian_variance values must be numbers", "experiment.values");
        if (v.get<double>() < 0) throw ConfigError("gaussian_variance values must be >= 0", "experiment.values");
        vals.push_back(v.get<double>());
    }
    const ExperimentData data = prepare_data(plan);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        ExperimentPlan p = plan;
        p.noise.gaussian_variance = vals[i];
        const std::string label = value_string(plan.experiment.values[i]);
        RunResult r = run_point(p, data, "full", experiment_dir(plan) / ("gaussian_variance=" + label));
        r.value = label;
        out.rows.push_back(r);
    }
    return out;
}

ExperimentResult run_ablations(const ExperimentPlan& plan_in) {
    require_values(plan_in);
    ExperimentResult out = new_result(plan_in, "ablation");
    const ExperimentPlan plan = apply_scale(plan_in, out.notes);
    std::vector<std::string> names;
    const auto& known = ablation_variants();
    for (const auto& v : plan.experiment.values) {
        const std::string name = v.is_string() ? v.get<std::string>() : v.dump();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ConfigError("unknown ablation variant '" + name + "'", "experiment.values");
        }
        names.push_back(name);
    }
    const ExperimentData data = prepare_data(plan);
    for (const auto& name : names) {
        RunResult r = run_point(plan, data, name, experiment_dir(plan) / ("ablation=" + name));
        r.value = name;
        if (r.status == "skipped") out.notes.push_back("ablation " + name + " skipped: " + r.note);
        out.rows.push_back(r);
    }
    // Soft check only: reported, never enforced.
    const RunResult* full = nullptr;
    for (const auto& r : out.rows) if (r.value == "full") full = &r;
    if (full) {
        for (const auto& r : out.rows) {
            if ((r.value == "poisson_only" || r.value == "gaussian_only") && std::isfinite(r.psnr) &&
                r.psnr > full->psnr) {
                out.notes.push_back("soft check: full PSNR below " + r.value);
            }
        }
    }
    return out;
}

ExperimentResult tabulate_methods(const MetricReport& ours, const MetricReport& baseline,
                                  const std::vector<ImageGrid>& refs,
                                  const std::vector<NamedDir>& externals) {
    ExperimentResult out;
    out.experiment = "methods";
    out.axis = "method";
    out.reference = published_reference("method");
    auto row = [](const std::string& name, const MetricReport& m) {
        RunResult r;
        r.value = name;
        r.psnr = m.aggregate.psnr_mean;
        r.ssim = m.aggregate.ssim_mean;
        return r;
    };
    out.rows.push_back(row("LDCT", baseline));
    for (const auto& ext : externals) {
        RunResult r;
        r.value = ext.name;
        try {
            std::map<std::string, ImageGrid> found;
            if (fs::is_directory(ext.dir)) {
                for (const auto& f : list_images(ext.dir)) {
                    ImageGrid g = normalize(load_image(f));
                    found.emplace(g.id(), std::move(g));
                }
            }
            std::vector<ImageGrid> outputs;
            std::vector<std::string> missing;
            for (const auto& ref : refs) {
                const auto it = found.find(ref.id());
                if (it == found.end()) missing.push_back(ref.id());
                else outputs.push_back(it->second);
            }
            if (!missing.empty()) {
                r.status = "incomplete";
                std::string list;
                for (std::size_t i = 0; i < missing.size() && i < 5; ++i) list += (i ? " " : "") + missing[i];
                r.note = std::to_string(missing.size()) + " missing id(s): " + list;
            } else {
                const MetricReport m = score(outputs, refs);
                r.psnr = m.aggregate.psnr_mean;
                r.ssim = m.aggregate.ssim_mean;
            }
        } catch (const std::exception& e) {
            r.status = "error";
            r.note = e.what();
        }
        out.rows.push_back(r);
    }
    out.rows.push_back(row("ours", ours));
    return out;
}

ExperimentResult tabulate_methods(const ExperimentPlan& plan_in) {
    std::vector<std::string> notes;
    const ExperimentPlan plan = apply_scale(plan_in, notes);
    const ExperimentData data = prepare_data(plan);
    const fs::path dir = experiment_dir(plan) / "method=ours";
    RunResult r = run_point(plan, data, "full", dir);
    const ChainModel<float> chain = restore_chain(load_checkpoint(r.checkpoint));
    const Evaluation ev = evaluate(chain, data.test_inputs, data.test_refs);
    std::vector<NamedDir> ext;
    for (const auto& e : plan.experiment.externals) ext.push_back({e.name, e.dir});
    ExperimentResult out = tabulate_methods(ev.model, ev.baseline, data.test_refs, ext);
    out.experiment = plan.experiment.name;
    out.notes = notes;
    out.rows.back().config_hash = r.config_hash;
    out.rows.back().seeds = r.seeds;
    out.rows.back().checkpoint = r.checkpoint;
    out.rows.back().parameter_count = r.parameter_count;
    out.rows.back().pair_count = r.pair_count;
    out.rows.back().final_loss = r.final_loss;
    out.rows.back().first_loss = r.first_loss;
    return out;
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    const auto& axis = plan.experiment.axis;
    if (axis == "backbone") return sweep_backbones(plan);
    if (axis == "module_count") return sweep_module_count(plan);
    if (axis == "gaussian_variance") return sweep_noise_variance(plan);
    if (axis == "ablation") return run_ablations(plan);
    return tabulate_methods(plan);
}

json published_reference(const std::string& axis) {
    json rows = json::array();
    auto add = [&](const std::string& name, double p, double s) {
        rows.push_back({{"name", name}, {"psnr", p}, {"ssim", s}});
    };
    json ref;
    ref["label"] = "published reference, not reproduced";
    if (axis == "backbone") {
        add("r2unet", 24.547, 0.6509);
        add("attunet", 24.977, 0.6800);
        add("r2aunet", 24.559, 0.6773);
        add("cpce", 24.765, 0.6898);
        add("resnet", 24.765, 0.6697);
        add("unet", 27.294, 0.6978);
    } else if (axis == "module_count") {
        ref["optimum"] = 5;
    } else if (axis == "gaussian_variance") {
        ref["optimum"] = 15;
    } else if (axis == "ablation") {
        add("poisson_only", 23.153, 0.5578);
        add("gaussian_only", 22.418, 0.5233);
        add("ndct_base", 27.384, 0.6898);
        add("full", 27.294, 0.6978);
    } else if (axis == "method") {
        add("LDCT", 21.698, 0.4176);
        add("BM3D", 22.027, 0.5133);
        add("N2V", 25.486, 0.6298);
        add("NBR2NBR", 24.112, 0.6363);
        add("B2U", 25.818, 0.5828);
        add("CycleGAN", 27.965, 0.6926);
        add("ADN", 27.204, 0.5767);
        add("Dual-GAN", 24.544, 0.5868);
        add("ours", 27.294, 0.6978);
    }
    ref["rows"] = rows;
    return ref;
}

std::string table_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << r.axis << ",status,psnr,ssim,baseline_psnr,baseline_ssim,first_loss,final_loss,"
          "parameter_count,pair_count,config_hash,noise_seed,data_seed,init_seed,train_seed,"
          "checkpoint,note\n";
    for (const auto& row : r.rows) {
        auto seed = [&](const char* k) {
            return row.seeds.contains(k) ? row.seeds[k].dump() : std::string();
        };
        os << csv_field(row.value) << ',' << row.status << ',' << fmt(row.psnr) << ','
           << fmt(row.ssim) << ',' << fmt(row.baseline_psnr) << ',' << fmt(row.baseline_ssim)
           << ',' << fmt(row.first_loss, 9) << ',' << fmt(row.final_loss, 9) << ','
           << row.parameter_count << ',' << row.pair_count << ',' << row.config_hash << ','
           << seed("noise") << ',' << seed("data") << ',' << seed("init") << ','
           << seed("train") << ',' << csv_field(row.checkpoint) << ',' << csv_field(row.note)
           << '\n';
    }
    return os.str();
}

json table_json(const ExperimentResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back(row.to_json());
    return {{"experiment", r.experiment},
            {"axis", r.axis},
            {"columns", {r.axis, "psnr", "ssim"}},
            {"rows", rows},
            {"notes", r.notes},
            {"reference", r.reference}};
}

std::vector<fs::path> emit_report(const ExperimentResult& r, const fs::path& out_dir) {
    if (r.rows.empty()) throw Error("refusing to emit an empty report for " + r.experiment);
    const fs::path dir = out_dir / r.experiment;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const std::string stem = r.axis == "method" ? "methods" : r.axis;
    std::vector<fs::path> written{dir / (stem + "_table.csv"), dir / (stem + "_table.json"),
                                  dir / (stem + "_plot.png")};
    write_text(written[0], table_csv(r));
    write_text(written[1], table_json(r).dump(2) + "\n");

    LinePlot plot;
    const bool numeric = r.axis == "module_count" || r.axis == "gaussian_variance";
    plot.title = r.experiment + " " + r.axis;
    plot.x_label = numeric ? r.axis : r.axis + " index";
    plot.y_label = "PSNR DB";
    Series model{"MODEL", {}, {}}, base{"INPUT", {}, {}};
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        double x = static_cast<double>(i);
        if (numeric) {
            try {
                x = std::stod(r.rows[i].value);
            } catch (const std::exception&) {
            }
        }
        model.x.push_back(x);
        model.y.push_back(r.rows[i].psnr);
        base.x.push_back(x);
        base.y.push_back(r.rows[i].baseline_psnr);
    }
    plot.series.push_back(model);
    if (std::any_of(base.y.begin(), base.y.end(), [](double v) { return std::isfinite(v); })) {
        plot.series.push_back(base);
    }
    save_plot(plot, written[2]);
    return written;
}

}  // namespace nacn2n
