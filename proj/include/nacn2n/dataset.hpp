// SPDX-License-Identifier: Apache-2.0
//
// Noise2Noise training pairs built from (already noisy) low-dose images.
//
// A PairSet stores provenance only. Pixels are regenerated on demand from the
// source images and the per-copy stream seeds, so the same index always
// yields bit-identical images.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nacn2n/image.hpp"
#include "nacn2n/noise.hpp"

namespace nacn2n {

enum class PairingMode {
    /// Two independent corruptions of the same source, emitted in both orders.
    n2n_pair,
    /// (corrupt(x), x): the target is the uncorrupted source.
    nac_target,
};

PairingMode parse_pairing_mode(const std::string& s);
std::string to_string(PairingMode m);

struct PairRecord {
    std::size_t source_index = 0;
    std::string source_id;
    int input_copy = 0;
    std::uint64_t input_seed = 0;
    /// Absent in nac_target mode (target is the source itself).
    std::optional<int> target_copy;
    std::optional<std::uint64_t> target_seed;
};

struct SourceRef {
    std::string id;
    std::string group;
    std::string path;
};

struct TrainingPair {
    ImageGrid input;
    ImageGrid target;
};

class PairSet {
public:
    PairSet() = default;
    PairSet(std::shared_ptr<const std::vector<ImageGrid>> sources, std::vector<SourceRef> refs,
            NoiseSpec spec, int copies, PairingMode mode, std::uint64_t master_seed,
            std::vector<PairRecord> pairs);

    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }
    const PairRecord& record(std::size_t i) const { return pairs_.at(i); }
    const std::vector<PairRecord>& records() const noexcept { return pairs_; }

    PairingMode mode() const noexcept { return mode_; }
    const NoiseSpec& spec() const noexcept { return spec_; }
    int copies() const noexcept { return copies_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }
    const std::vector<ImageGrid>& sources() const { return *sources_; }
    const std::vector<SourceRef>& source_refs() const noexcept { return refs_; }

    /// Regenerates pair `i` from its provenance.
    TrainingPair materialize(std::size_t i) const;

    /// Like materialize, but with corruption streams re-keyed by `epoch`
    /// (used when fresh noise is drawn every epoch).
    TrainingPair materialize_fresh(std::size_t i, std::uint64_t epoch) const;

    /// JSON manifest: spec, mode, copies, master seed and sources; no pixels.
    nlohmann::json manifest() const;

private:
    std::shared_ptr<const std::vector<ImageGrid>> sources_;
    std::vector<SourceRef> refs_;
    NoiseSpec spec_;
    int copies_ = 0;
    PairingMode mode_ = PairingMode::n2n_pair;
    std::uint64_t master_seed_ = 0;
    std::vector<PairRecord> pairs_;
};

/// Stream seed for copy `copy` of source `source_id`.
std::uint64_t copy_seed(std::uint64_t master_seed, const std::string& source_id, int copy);

/// Builds the pair index. n2n_pair emits copies*(copies-1) ordered pairs per
/// source; nac_target emits `copies` pairs per source.
PairSet build_pairs(std::vector<ImageGrid> images, const NoiseSpec& spec, int copies,
                    PairingMode mode, std::uint64_t master_seed,
                    std::vector<std::string> source_paths = {});

/// Rebuilds a PairSet from a manifest and the (normalized) source images it names.
PairSet pairs_from_manifest(const nlohmann::json& manifest, std::vector<ImageGrid> images);

struct SplitResult {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

struct IdGroup {
    std::string id;
    std::string group;  // empty: the id is its own group
};

/// Deterministic shuffled split that never separates a group.
SplitResult split(const std::vector<IdGroup>& items, double train_fraction,
                  std::uint64_t master_seed);
SplitResult split(const std::vector<ImageGrid>& images, double train_fraction,
                  std::uint64_t master_seed);

/// Row-major sliding-window crops. Patch ids are "<id>@y<row>x<col>".
std::vector<ImageGrid> extract_patches(const ImageGrid& img, int size, int stride);

}  // namespace nacn2n
