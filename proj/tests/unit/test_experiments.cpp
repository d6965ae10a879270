// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "nacn2n/checkpoint.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/experiments.hpp"
#include "support.hpp"

using namespace nacn2n;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

ExperimentPlan tiny_plan(const std::string& name, const std::string& axis, nlohmann::json values) {
    ExperimentPlan p = desk_plan();
    p.experiment.name = name;
    p.experiment.axis = axis;
    p.experiment.values = std::move(values);
    p.experiment.output_dir = testing::scratch_dir("exp_" + name).string();
    p.experiment.train_phantoms = 4;
    p.experiment.test_phantoms = 2;
    p.experiment.phantom_size = 16;
    p.model.backbone.base_channels = 2;
    p.model.backbone.depth = 1;
    p.model.modules = 1;
    p.train.epochs = 1;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("desk plan defaults") {
    const ExperimentPlan p = desk_plan();
    CHECK(p.model.backbone.base_channels == 16);
    CHECK(p.model.modules == 5);
    CHECK(p.train.epochs == 30);
    CHECK(p.experiment.train_phantoms * 2 == 200);
}

TEST_CASE("desk data has aligned clean references") {
    const ExperimentPlan p = tiny_plan("data", "none", nlohmann::json::array());
    const ExperimentData d = prepare_data(p);
    REQUIRE(d.train_ldct.size() == 4);
    REQUIRE(d.train_clean.size() == 4);
    REQUIRE(d.test_inputs.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(d.test_inputs[i].id() == d.test_refs[i].id());
    for (const auto& x : d.train_ldct)
        for (float v : x.pixels()) CHECK((v >= 0.f && v <= 1.f));
}

TEST_CASE("module-count sweep keeps parameters and seeds fixed") {
    ExperimentPlan p = tiny_plan("tsweep", "module_count", {1, 2, 3});
    const ExperimentResult r = sweep_module_count(p);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK(row.status == "ok");
        CHECK(row.parameter_count == r.rows[0].parameter_count);
        CHECK(row.seeds == r.rows[0].seeds);
        CHECK(std::isfinite(row.psnr));
    }
    // a second call reloads every point instead of retraining
    const ExperimentResult again = sweep_module_count(p);
    for (const auto& row : again.rows) CHECK(row.resumed);
    CHECK(again.rows[1].psnr == r.rows[1].psnr);
}

TEST_CASE("backbone sweep marks reserved names and rejects unknown ones") {
    ExperimentPlan p = tiny_plan("bsweep", "backbone", {"unet", "cpce", "resnet", "attunet"});
    const ExperimentResult r = sweep_backbones(p);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].status == "ok");
    CHECK(r.rows[1].status == "ok");
    CHECK(r.rows[2].status == "ok");
    CHECK(r.rows[3].status == "unavailable");
    p.experiment.values = {"foo"};
    CHECK_THROWS_AS(sweep_backbones(p), RegistryError);
}

TEST_CASE("noise variance sweep validates values") {
    ExperimentPlan p = tiny_plan("vsweep", "gaussian_variance", {-1});
    CHECK_THROWS_AS(sweep_noise_variance(p), ConfigError);
    p.experiment.values = {0, 15};
    const ExperimentResult r = sweep_noise_variance(p);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].value == "15");
}

TEST_CASE("ablations cover the four variants") {
    ExperimentPlan p = tiny_plan("abl", "ablation", {"bogus"});
    CHECK_THROWS_AS(run_ablations(p), ConfigError);
    p.experiment.values = {"poisson_only", "gaussian_only", "ndct_base", "full"};
    const ExperimentResult r = run_ablations(p);
    REQUIRE(r.rows.size() == 4);
    for (const auto& row : r.rows) CHECK(row.status == "ok");
    p.experiment.values = {"full"};
    p.noise = NoiseSpec::off();
    p.experiment.name = "abl_silent";
    CHECK(run_ablations(p).rows[0].status == "degenerate");
}

TEST_CASE("method table lists the baseline first and ours last") {
    ExperimentPlan p = tiny_plan("methods", "method", nlohmann::json::array());
    const ExperimentResult r = tabulate_methods(p);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows.front().value == "LDCT");
    CHECK(r.rows.back().value == "ours");
    CHECK(r.rows.back().psnr == r.rows.back().psnr);
}

TEST_CASE("external methods with missing outputs are incomplete") {
    const auto dir = testing::scratch_dir("ext");
    fs::create_directories(dir / "m");
    std::vector<ImageGrid> refs;
    for (int i = 0; i < 2; ++i) {
        ImageGrid g = testing::random_grid(8, 8, 60 + i);
        g.set_id("r" + std::to_string(i));
        refs.push_back(g);
    }
    save_image(refs[0], dir / "m" / "r0.nacg", ImageFormat::raw);
    const MetricReport rep = score(refs, refs);
    const ExperimentResult r = tabulate_methods(rep, rep, refs, {{"partial", dir / "m"}});
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[1].value == "partial");
    CHECK(r.rows[1].status == "incomplete");
    CHECK_THAT(r.rows[1].note, ContainsSubstring("r1"));
}

TEST_CASE("report emission is deterministic and refuses empty results") {
    ExperimentResult r;
    r.experiment = "rep";
    r.axis = "module_count";
    for (int t = 1; t <= 3; ++t) {
        RunResult row;
        row.value = std::to_string(t);
        row.psnr = 20 + t;
        row.ssim = 0.5;
        row.baseline_psnr = 20;
        row.baseline_ssim = 0.4;
        r.rows.push_back(row);
    }
    r.reference = published_reference("module_count");
    const auto dir = testing::scratch_dir("report");
    const auto a = emit_report(r, dir / "a");
    const auto b = emit_report(r, dir / "b");
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(slurp(a[i]) == slurp(b[i]));
    CHECK(a[0].filename() == "module_count_table.csv");
    const auto j = table_json(r);
    CHECK(j["rows"].size() == 3);
    CHECK(j["axis"] == "module_count");

    ExperimentResult empty;
    empty.experiment = "none";
    CHECK_THROWS_AS(emit_report(empty, dir / "c"), Error);
}

TEST_CASE("reference numbers are labelled") {
    const auto j = published_reference("backbone");
    CHECK(j.dump().find("not reproduced") != std::string::npos);
    CHECK(published_reference("method").dump().find("27.294") != std::string::npos);
}
