// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "nacn2n/config.hpp"
#include "nacn2n/errors.hpp"

namespace nacn2n {

PairingMode parse_pairing_mode(const std::string& s) {
    if (s == "n2n_pair") return PairingMode::n2n_pair;
    if (s == "nac_target") return PairingMode::nac_target;
    throw ConfigError("unknown pairing mode '" + s + "' (expected n2n_pair or nac_target)",
                      "data.mode");
}

std::string to_string(PairingMode m) {
    return m == PairingMode::n2n_pair ? "n2n_pair" : "nac_target";
}

std::uint64_t copy_seed(std::uint64_t master_seed, const std::string& source_id, int copy) {
    return derive_seed(master_seed, {fnv1a64(source_id), static_cast<std::uint64_t>(copy)});
}

PairSet::PairSet(std::shared_ptr<const std::vector<ImageGrid>> sources,
                 std::vector<SourceRef> refs, NoiseSpec spec, int copies, PairingMode mode,
                 std::uint64_t master_seed, std::vector<PairRecord> pairs)
    : sources_(std::move(sources)), refs_(std::move(refs)), spec_(spec), copies_(copies),
      mode_(mode), master_seed_(master_seed), pairs_(std::move(pairs)) {}

TrainingPair PairSet::materialize(std::size_t i) const {
    const PairRecord& r = pairs_.at(i);
    const ImageGrid& src = sources_->at(r.source_index);
    TrainingPair p{corrupt(src, spec_, r.input_seed), ImageGrid{}};
    p.input.set_id(src.id() + "#c" + std::to_string(r.input_copy));
    if (r.target_seed) {
        p.target = corrupt(src, spec_, *r.target_seed);
        p.target.set_id(src.id() + "#c" + std::to_string(*r.target_copy));
    } else {
        p.target = src;
    }
    return p;
}

TrainingPair PairSet::materialize_fresh(std::size_t i, std::uint64_t epoch) const {
    const PairRecord& r = pairs_.at(i);
    const ImageGrid& src = sources_->at(r.source_index);
    TrainingPair p{corrupt(src, spec_, derive_seed(r.input_seed, {epoch})), ImageGrid{}};
    if (r.target_seed) {
        p.target = corrupt(src, spec_, derive_seed(*r.target_seed, {epoch}));
    } else {
        p.target = src;
    }
    return p;
}

nlohmann::json PairSet::manifest() const {
    nlohmann::json j;
    j["format"] = "nacn2n-pairset";
    j["version"] = 1;
    j["spec"] = noise_spec_to_json(spec_);
    j["mode"] = to_string(mode_);
    j["copies"] = copies_;
    j["master_seed"] = master_seed_;
    j["generator"] = RandomStream::kGeneratorName;
    j["pair_count"] = pairs_.size();
    auto& src = j["sources"] = nlohmann::json::array();
    for (const auto& r : refs_) src.push_back({{"id", r.id}, {"group", r.group}, {"path", r.path}});
    return j;
}

PairSet build_pairs(std::vector<ImageGrid> images, const NoiseSpec& spec, int copies,
                    PairingMode mode, std::uint64_t master_seed,
                    std::vector<std::string> source_paths) {
    validate(spec);
    if (images.empty()) throw ConfigError("build_pairs needs at least one source image");
    if (mode == PairingMode::n2n_pair && copies < 2) {
        throw ConfigError("n2n_pair mode needs copies >= 2, got " + std::to_string(copies),
                          "data.copies");
    }
    if (copies < 1) throw ConfigError("copies must be >= 1", "data.copies");
    if (!source_paths.empty() && source_paths.size() != images.size()) {
        throw ConfigError("source path list does not match image count");
    }

    std::vector<SourceRef> refs;
    std::vector<PairRecord> pairs;
    for (std::size_t s = 0; s < images.size(); ++s) {
        const ImageGrid& img = images[s];
        validate(img);
        if (img.range() != kUnitRange) {
            throw DomainError("build_pairs expects normalized images; '" + img.id() +
                              "' is not normalized");
        }
        refs.push_back({img.id(), img.group(), source_paths.empty() ? "" : source_paths[s]});
        if (mode == PairingMode::n2n_pair) {
            for (int a = 0; a < copies; ++a) {
                for (int b = 0; b < copies; ++b) {
                    if (a == b) continue;
                    pairs.push_back({s, img.id(), a, copy_seed(master_seed, img.id(), a), b,
                                     copy_seed(master_seed, img.id(), b)});
                }
            }
        } else {
            for (int a = 0; a < copies; ++a) {
                pairs.push_back({s, img.id(), a, copy_seed(master_seed, img.id(), a),
                                 std::nullopt, std::nullopt});
            }
        }
    }
    auto shared = std::make_shared<const std::vector<ImageGrid>>(std::move(images));
    return PairSet(std::move(shared), std::move(refs), spec, copies, mode, master_seed,
                   std::move(pairs));
}

PairSet pairs_from_manifest(const nlohmann::json& manifest, std::vector<ImageGrid> images) {
    if (manifest.value("format", "") != "nacn2n-pairset") {
        throw FormatError("not a pair-set manifest");
    }
    const auto& sources = manifest.at("sources");
    if (sources.size() != images.size()) {
        throw ConfigError("manifest lists " + std::to_string(sources.size()) +
                          " sources but " + std::to_string(images.size()) + " images given");
    }
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& s = sources[i];
        if (s.at("id").get<std::string>() != images[i].id()) {
            throw ConfigError("source " + std::to_string(i) + " id mismatch: manifest '" +
                              s.at("id").get<std::string>() + "' vs image '" + images[i].id() +
                              "'");
        }
        images[i].set_group(s.value("group", ""));
        paths.push_back(s.value("path", ""));
    }
    return build_pairs(std::move(images), noise_spec_from_json(manifest.at("spec")),
                       manifest.at("copies").get<int>(),
                       parse_pairing_mode(manifest.at("mode").get<std::string>()),
                       manifest.at("master_seed").get<std::uint64_t>(), std::move(paths));
}

SplitResult split(const std::vector<IdGroup>& items, double train_fraction,
                  std::uint64_t master_seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)", "data.train_fraction");
    }
    // std::map keeps groups in a name order independent of input order.
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& it : items) {
        groups[it.group.empty() ? "\x01" + it.id : it.group].push_back(it.id);
    }
    if (groups.size() < 2) {
        throw ConfigError("cannot split a single group into train and test partitions",
                          "data.train_fraction");
    }
    std::vector<const std::vector<std::string>*> order;
    for (const auto& [name, ids] : groups) order.push_back(&ids);
    std::mt19937_64 rng(derive_seed(master_seed, {fnv1a64("split")}));
    std::shuffle(order.begin(), order.end(), rng);

    const auto target = static_cast<long>(std::lround(train_fraction * items.size()));
    long train_count = 0;
    SplitResult out;
    for (const auto* ids : order) {
        const long next = train_count + static_cast<long>(ids->size());
        const bool closer = std::labs(next - target) < std::labs(train_count - target);
        if (closer) {
            out.train_ids.insert(out.train_ids.end(), ids->begin(), ids->end());
            train_count = next;
        } else {
            out.test_ids.insert(out.test_ids.end(), ids->begin(), ids->end());
        }
    }
    if (out.train_ids.empty() || out.test_ids.empty()) {
        throw ConfigError("train fraction " + std::to_string(train_fraction) +
                              " leaves one partition empty with these groups",
                          "data.train_fraction");
    }
    return out;
}

SplitResult split(const std::vector<ImageGrid>& images, double train_fraction,
                  std::uint64_t master_seed) {
    std::vector<IdGroup> items;
    items.reserve(images.size());
    for (const auto& img : images) items.push_back({img.id(), img.group()});
    return split(items, train_fraction, master_seed);
}

std::vector<ImageGrid> extract_patches(const ImageGrid& img, int size, int stride) {
    if (stride < 1) throw ConfigError("patch stride must be >= 1", "data.patch_stride");
    if (size < 1 || size > std::min(img.height(), img.width())) {
        throw ShapeError("patch size " + std::to_string(size) + " does not fit image " +
                         std::to_string(img.height()) + "x" + std::to_string(img.width()));
    }
    std::vector<ImageGrid> out;
    const int ny = (img.height() - size) / stride + 1;
    const int nx = (img.width() - size) / stride + 1;
    out.reserve(static_cast<std::size_t>(ny) * nx);
    for (int py = 0; py < ny; ++py) {
        for (int px = 0; px < nx; ++px) {
            const int oy = py * stride;
            const int ox = px * stride;
            ImageGrid patch(size, size, img.range(),
                            img.id() + "@y" + std::to_string(oy) + "x" + std::to_string(ox));
            patch.set_group(img.group());
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) patch.at(y, x) = img.at(oy + y, ox + x);
            }
            out.push_back(std::move(patch));
        }
    }
    return out;
}

}  // namespace nacn2n
