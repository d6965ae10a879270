// SPDX-License-Identifier: Apache-2.0
//
// Sweep and ablation harness. Every run writes <output_dir>/<experiment>/
// <axis>=<value>/ with a result.json keyed by a config hash, so an
// interrupted sweep resumes by skipping completed runs.
#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nacn2n/config.hpp"
#include "nacn2n/metrics.hpp"

namespace nacn2n {

/// The plan is the root config; its experiment section selects the axis.
using ExperimentPlan = RootConfig;

ExperimentPlan load_plan(const std::filesystem::path& path);

/// Desk-scale defaults: 64x64 phantoms, 100 sources x 2 copies = 200 pairs,
/// 30 epochs, unet base 16, T 5.
ExperimentPlan desk_plan();

struct ExperimentData {
    std::vector<ImageGrid> train_ldct;
    /// Clean counterparts of train_ldct (phantoms or NDCT); may be empty.
    std::vector<ImageGrid> train_clean;
    std::vector<ImageGrid> test_inputs;
    std::vector<ImageGrid> test_refs;
    std::string source;
};

/// desk: phantoms, with low-dose observations from experiment.ldct.
/// full: data.input_dir (low-dose) and data.reference_dir (normal-dose),
/// split by data.train_fraction.
ExperimentData prepare_data(const ExperimentPlan& plan);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunResult {
    std::string value;
    /// ok, unavailable, skipped, degenerate, incomplete, error
    std::string status = "ok";
    std::string note;
    double psnr = kNaN;
    double ssim = kNaN;
    double baseline_psnr = kNaN;
    double baseline_ssim = kNaN;
    double first_loss = kNaN;
    double final_loss = kNaN;
    std::size_t parameter_count = 0;
    std::size_t pair_count = 0;
    std::string config_hash;
    nlohmann::json seeds = nlohmann::json::object();
    std::string checkpoint;
    bool resumed = false;

    nlohmann::json to_json() const;
    static RunResult from_json(const nlohmann::json& j);
};

struct ExperimentResult {
    std::string experiment;
    /// backbone, module_count, gaussian_variance, ablation, method
    std::string axis;
    std::vector<RunResult> rows;
    nlohmann::json reference = nlohmann::json::object();
    std::vector<std::string> notes;
};

/// Trains and evaluates one configuration in `run_dir`, or reloads the stored
/// result when result.json there carries the same config hash.
RunResult run_point(const ExperimentPlan& plan, const ExperimentData& data,
                    const std::string& variant, const std::filesystem::path& run_dir);

ExperimentResult sweep_backbones(const ExperimentPlan& plan);
ExperimentResult sweep_module_count(const ExperimentPlan& plan);
ExperimentResult sweep_noise_variance(const ExperimentPlan& plan);
ExperimentResult run_ablations(const ExperimentPlan& plan);

struct NamedDir {
    std::string name;
    std::filesystem::path dir;
};

/// LDCT baseline row, our row and one row per external method directory.
ExperimentResult tabulate_methods(const MetricReport& ours, const MetricReport& baseline,
                                  const std::vector<ImageGrid>& references,
                                  const std::vector<NamedDir>& externals);
/// Trains "ours" from the plan (resumable) and tabulates it against externals.
ExperimentResult tabulate_methods(const ExperimentPlan& plan);

/// Dispatches on experiment.axis.
ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Writes table.csv, table.json and plot.png under <out_dir>/<experiment>/.
/// Returns the written paths. Empty results are an error.
std::vector<std::filesystem::path> emit_report(const ExperimentResult& result,
                                               const std::filesystem::path& out_dir);

/// Reference numbers from the original study for an axis, labelled as not reproduced.
nlohmann::json published_reference(const std::string& axis);

std::string table_csv(const ExperimentResult& result);
nlohmann::json table_json(const ExperimentResult& result);

}  // namespace nacn2n
