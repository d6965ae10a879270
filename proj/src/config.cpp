// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nacn2n/errors.hpp"

namespace nacn2n {

using nlohmann::json;

namespace {

// Reads one JSON object section, remembering which keys were consumed so that
// leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object", path_);
    }

    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k);
    }
    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    template <typename T>
    void get(const std::string& k, T& out) {
        if (!has(k)) return;
        try {
            out = j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(key(k) + " has the wrong type: " + j_.at(k).dump(), key(k));
        }
    }
    void get_u64(const std::string& k, std::uint64_t& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if (v.is_number_unsigned()) out = v.get<std::uint64_t>();
        else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) out = v.get<std::uint64_t>();
        else throw ConfigError(key(k) + " must be a non-negative integer", key(k));
    }
    const json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + key(it.key()), key(it.key()));
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json backbone_json(const BackboneConfig& b) {
    return {{"name", b.name}, {"base_channels", b.base_channels}, {"depth", b.depth},
            {"kernel_size", b.kernel_size}, {"residual", b.residual}};
}

}  // namespace

json noise_spec_to_json(const NoiseSpec& spec) {
    json j;
    j["poisson_scale"] = spec.poisson_scale ? json(*spec.poisson_scale) : json("off");
    j["gaussian_variance"] = spec.gaussian_variance;
    j["rho"] = spec.rho;
    j["seed"] = spec.seed;
    return j;
}

NoiseSpec noise_spec_from_json(const json& j, const std::string& prefix) {
    NoiseSpec s;
    Section sec(j, prefix);
    if (sec.has("poisson_scale")) {
        const auto& v = sec.raw("poisson_scale");
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "off")) s.poisson_scale.reset();
        else if (v.is_number()) s.poisson_scale = v.get<double>();
        else throw ConfigError(sec.key("poisson_scale") + " must be a number or \"off\"", sec.key("poisson_scale"));
    }
    sec.get("gaussian_variance", s.gaussian_variance);
    sec.get("rho", s.rho);
    sec.get_u64("seed", s.seed);
    sec.finish();
    try {
        validate(s);
    } catch (const ConfigError& e) {
        // re-key under the section actually being read
        std::string k = e.key();
        if (k.rfind("noise.", 0) == 0) k = prefix + k.substr(5);
        throw ConfigError(e.what(), k);
    }
    return s;
}

json to_json(const RootConfig& c) {
    json j;
    j["noise"] = noise_spec_to_json(c.noise);
    const auto& d = c.data;
    j["data"] = {{"input_dir", d.input_dir},   {"reference_dir", d.reference_dir},
                 {"manifest", d.manifest},     {"copies", d.copies},
                 {"mode", to_string(d.mode)},  {"train_fraction", d.train_fraction},
                 {"patch_size", d.patch_size}, {"patch_stride", d.patch_stride},
                 {"seed", d.seed}};
    j["model"] = backbone_json(c.model.backbone);
    j["model"]["T"] = c.model.modules;
    j["model"]["init_seed"] = c.model.init_seed;
    const auto& t = c.train;
    j["train"] = {{"loss", to_string(t.loss)},     {"base_lr", t.base_lr},
                  {"beta1", t.beta1},              {"beta2", t.beta2},
                  {"epsilon", t.epsilon},          {"batch_size", t.batch_size},
                  {"epochs", t.epochs},            {"lr_half_period", t.lr_half_period},
                  {"seed", t.seed},                {"checkpoint_every", t.checkpoint_every},
                  {"fresh_noise_per_epoch", t.fresh_noise_per_epoch}};
    const auto& e = c.experiment;
    json ext = json::array();
    for (const auto& m : e.externals) ext.push_back({{"name", m.name}, {"dir", m.dir}});
    j["experiment"] = {{"name", e.name},
                       {"axis", e.axis},
                       {"values", e.values},
                       {"scale", e.scale},
                       {"output_dir", e.output_dir},
                       {"ldct", noise_spec_to_json(e.ldct)},
                       {"train_phantoms", e.train_phantoms},
                       {"test_phantoms", e.test_phantoms},
                       {"phantom_size", e.phantom_size},
                       {"phantom_seed", e.phantom_seed},
                       {"externals", ext}};
    return j;
}

RootConfig root_config_from_json(const json& j) {
    RootConfig c;
    Section root(j, "");
    if (root.has("noise")) c.noise = noise_spec_from_json(root.raw("noise"), "noise");
    if (root.has("data")) {
        Section s(root.raw("data"), "data");
        auto& d = c.data;
        s.get("input_dir", d.input_dir);
        s.get("reference_dir", d.reference_dir);
        s.get("manifest", d.manifest);
        s.get("copies", d.copies);
        if (s.has("mode")) {
            std::string m;
            s.get("mode", m);
            d.mode = parse_pairing_mode(m);
        }
        s.get("train_fraction", d.train_fraction);
        s.get("patch_size", d.patch_size);
        s.get("patch_stride", d.patch_stride);
        s.get_u64("seed", d.seed);
        s.finish();
    }
    if (root.has("model")) {
        Section s(root.raw("model"), "model");
        auto& m = c.model;
        if (s.has("name")) {
            std::string name;
            s.get("name", name);
            // switching backbone picks up that backbone's canonical sizes unless given
            m.backbone = BackboneConfig::defaults_for(name);
        }
        s.get("base_channels", m.backbone.base_channels);
        s.get("depth", m.backbone.depth);
        s.get("kernel_size", m.backbone.kernel_size);
        s.get("residual", m.backbone.residual);
        s.get("T", m.modules);
        s.get_u64("init_seed", m.init_seed);
        s.finish();
    }
    if (root.has("train")) {
        Section s(root.raw("train"), "train");
        auto& t = c.train;
        if (s.has("loss")) {
            std::string l;
            s.get("loss", l);
            t.loss = parse_loss_kind(l);
        }
        s.get("base_lr", t.base_lr);
        s.get("beta1", t.beta1);
        s.get("beta2", t.beta2);
        s.get("epsilon", t.epsilon);
        s.get("batch_size", t.batch_size);
        s.get("epochs", t.epochs);
        s.get("lr_half_period", t.lr_half_period);
        s.get_u64("seed", t.seed);
        s.get("checkpoint_every", t.checkpoint_every);
        s.get("fresh_noise_per_epoch", t.fresh_noise_per_epoch);
        s.finish();
    }
    if (root.has("experiment")) {
        Section s(root.raw("experiment"), "experiment");
        auto& e = c.experiment;
        s.get("name", e.name);
        s.get("axis", e.axis);
        if (s.has("values")) {
            e.values = s.raw("values");
            if (!e.values.is_array()) throw ConfigError("experiment.values must be a list", "experiment.values");
        }
        s.get("scale", e.scale);
        s.get("output_dir", e.output_dir);
        if (s.has("ldct")) e.ldct = noise_spec_from_json(s.raw("ldct"), "experiment.ldct");
        s.get("train_phantoms", e.train_phantoms);
        s.get("test_phantoms", e.test_phantoms);
        s.get("phantom_size", e.phantom_size);
        s.get_u64("phantom_seed", e.phantom_seed);
        if (s.has("externals")) {
            const auto& arr = s.raw("externals");
            if (!arr.is_array()) throw ConfigError("experiment.externals must be a list", "experiment.externals");
            for (const auto& m : arr) {
                Section ms(m, "experiment.externals[]");
                ExternalMethod em;
                ms.get("name", em.name);
                ms.get("dir", em.dir);
                ms.finish();
                e.externals.push_back(em);
            }
        }
        s.finish();
    }
    root.finish();
    return c;
}

void apply_override(json& j, const std::string& dotted, const std::string& value) {
    if (dotted.empty()) throw ConfigError("empty override key");
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string part = dotted.substr(start, dot - start);
        if (part.empty()) throw ConfigError("malformed override key '" + dotted + "'", dotted);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override key '" + dotted + "' is not a section", dotted);
            *node = json::object();
        }
        start = dot + 1;
    }
}

void validate(const RootConfig& c) {
    validate(c.noise);
    if (c.data.mode == PairingMode::n2n_pair && c.data.copies < 2) {
        throw ConfigError("data.copies must be >= 2 for n2n_pair", "data.copies");
    }
    if (c.data.copies < 1) throw ConfigError("data.copies must be >= 1", "data.copies");
    if (!(c.data.train_fraction > 0 && c.data.train_fraction < 1)) {
        throw ConfigError("data.train_fraction must be in (0,1)", "data.train_fraction");
    }
    if (c.data.patch_size < 0) throw ConfigError("data.patch_size must be >= 0", "data.patch_size");
    if (c.data.patch_size > 0 && c.data.patch_stride < 1) {
        throw ConfigError("data.patch_stride must be >= 1 when patching", "data.patch_stride");
    }
    validate(c.model.backbone);
    if (c.model.modules < 1) throw ConfigError("model.T must be >= 1", "model.T");
    validate(c.train);
    const auto& e = c.experiment;
    static const std::set<std::string> axes{"none", "backbone", "module_count",
                                            "gaussian_variance", "ablation"};
    if (!axes.count(e.axis)) throw ConfigError("unknown experiment.axis '" + e.axis + "'", "experiment.axis");
    if (e.scale != "desk" && e.scale != "full") {
        throw ConfigError("experiment.scale must be desk or full", "experiment.scale");
    }
    if (e.train_phantoms < 1) throw ConfigError("experiment.train_phantoms must be >= 1", "experiment.train_phantoms");
    if (e.test_phantoms < 1) throw ConfigError("experiment.test_phantoms must be >= 1", "experiment.test_phantoms");
    if (e.phantom_size < 8) throw ConfigError("experiment.phantom_size must be >= 8", "experiment.phantom_size");
}

ResolvedConfig resolve_config(const std::optional<std::string>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              const char* env_seed) {
    ResolvedConfig out;
    json j = to_json(RootConfig{});
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("cannot read config file " + *file, "config");
        json fj;
        try {
            fj = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file " + *file + " is not valid JSON: " + e.what(), "config");
        }
        if (!fj.is_object()) throw ConfigError("config file must hold a JSON object", "config");
        // model.name in a file resets the sizes to that backbone's defaults
        // unless they are given alongside it.
        if (fj.contains("model") && fj["model"].contains("name")) {
            const auto d = BackboneConfig::defaults_for(fj["model"]["name"].get<std::string>());
            j["model"]["base_channels"] = d.base_channels;
            j["model"]["depth"] = d.depth;
        }
        j.merge_patch(fj);
    }
    for (const auto& [k, v] : overrides) {
        if (k == "model.name") {
            const auto d = BackboneConfig::defaults_for(v);
            j["model"]["base_channels"] = d.base_channels;
            j["model"]["depth"] = d.depth;
        }
        apply_override(j, k, v);
    }
    for (const auto& [k, v] : overrides) {
        if (k == "model.base_channels" || k == "model.depth") apply_override(j, k, v);
    }
    if (env_seed && *env_seed) {
        std::uint64_t seed = 0;
        try {
            std::size_t pos = 0;
            seed = std::stoull(env_seed, &pos);
            if (pos != std::string(env_seed).size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(std::string("NACN2N_SEED is not an integer: ") + env_seed, "NACN2N_SEED");
        }
        for (const char* path : {"noise.seed", "data.seed", "model.init_seed", "train.seed"}) {
            apply_override(j, path, std::to_string(seed));
        }
        out.notes.push_back("NACN2N_SEED=" + std::to_string(seed) +
                            " overrides noise.seed, data.seed, model.init_seed, train.seed");
    }
    // Round-trip through the typed config so the echoed JSON is canonical.
    out.config = root_config_from_json(j);
    validate(out.config);
    out.json = to_json(out.config);
    return out;
}

std::uint64_t config_hash(const json& j) { return fnv1a64(j.dump()); }

std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace nacn2n
