// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nacn2n/cli.hpp"
#include "nacn2n/image.hpp"
#include "support.hpp"

using namespace nacn2n;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "nacn2n");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("dry run prints the resolved config") {
    const Run r = cli({"train", "--dry-run", "--train.epochs=3", "--model.T=2"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["train"]["epochs"] == 3);
    CHECK(j["model"]["T"] == 2);
    CHECK(j["train"]["base_lr"] == 1e-4);
    CHECK_THAT(r.err, ContainsSubstring("resolved config"));
}

TEST_CASE("configuration errors exit with code 1") {
    CHECK(cli({"train", "--dry-run", "--train.nope=1"}).code == 1);
    CHECK(cli({"train", "--dry-run", "--model.name=foo"}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
}

TEST_CASE("empty input directory is reported") {
    const auto dir = testing::scratch_dir("cli_empty");
    const Run r = cli({"corrupt", "--in", dir.string(), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("no images found"));
}

TEST_CASE("missing checkpoint is reported") {
    const auto dir = testing::scratch_dir("cli_ckpt");
    const Run r = cli({"eval", "--checkpoint", (dir / "nothing").string()});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("checkpoint not found"));
}

TEST_CASE("phantoms writes images and a manifest") {
    const auto dir = testing::scratch_dir("cli_ph");
    const Run r = cli({"phantoms", "10", "--out", dir.string(), "--experiment.phantom_size=32"});
    REQUIRE(r.code == 0);
    const auto man = read_json(dir / "manifest.json");
    REQUIRE(man["files"].size() == 10);
    int images = 0;
    for (const auto& e : fs::directory_iterator(dir)) images += e.path().extension() == ".nacg";
    CHECK(images == 10);
    const ImageGrid g = load_image(dir / man["files"][0]["file"].get<std::string>());
    CHECK(g.height() == 32);
}

TEST_CASE("corrupt writes copies deterministically") {
    const auto dir = testing::scratch_dir("cli_corrupt");
    fs::create_directories(dir / "in");
    for (int i = 0; i < 3; ++i) {
        ImageGrid g = testing::random_grid(8, 8, 30 + i);
        save_image(g, dir / "in" / ("im" + std::to_string(i) + ".nacg"), ImageFormat::raw);
    }
    const auto a = cli({"corrupt", "--in", (dir / "in").string(), "--out", (dir / "a").string()});
    const auto b = cli({"corrupt", "--in", (dir / "in").string(), "--out", (dir / "b").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto man = read_json(dir / "a" / "manifest.json");
    REQUIRE(man["files"].size() == 6);
    CHECK(man["spec"]["gaussian_variance"] == 15.0);
    for (const auto& f : man["files"]) {
        const std::string name = f["file"];
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    }
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
    const auto c = cli({"corrupt", "--in", (dir / "in").string(), "--out", (dir / "c").string(),
                        "--noise.seed=9"});
    REQUIRE(c.code == 0);
    const std::string first = man["files"][0]["file"];
    CHECK(slurp(dir / "a" / first) != slurp(dir / "c" / first));
}

TEST_CASE("train then eval end to end") {
    const auto dir = testing::scratch_dir("cli_e2e");
    REQUIRE(cli({"phantoms", "6", "--out", (dir / "ph").string(), "--experiment.phantom_size=16"}).code == 0);
    const std::vector<std::string> common{"--data.input_dir=" + (dir / "ph").string(),
                                          "--data.reference_dir=" + (dir / "ph").string(),
                                          "--model.base_channels=2", "--model.depth=1", "--model.T=2",
                                          "--train.epochs=2"};
    std::vector<std::string> t{"train", "--out", (dir / "run").string()};
    t.insert(t.end(), common.begin(), common.end());
    const Run tr = cli(t);
    INFO(tr.err);
    REQUIRE(tr.code == 0);
    CHECK(fs::exists(dir / "run" / "checkpoint" / "manifest.json"));
    CHECK(fs::exists(dir / "run" / "train_log.csv"));

    std::vector<std::string> e{"eval", "--checkpoint", (dir / "run" / "checkpoint").string(), "--out",
                               (dir / "ev").string(), "--all"};
    e.insert(e.end(), common.begin(), common.end());
    const Run ev = cli(e);
    INFO(ev.err);
    REQUIRE(ev.code == 0);
    const auto j = read_json(dir / "ev" / "metrics.json");
    CHECK(j["model"]["per_image"].size() == 6);
    CHECK_THAT(ev.out, ContainsSubstring("PSNR"));

    std::vector<std::string> rs{"train", "--out", (dir / "run2").string(), "--resume",
                                (dir / "run" / "checkpoint").string(), "--train.epochs=3"};
    rs.insert(rs.end(), common.begin(), common.end() - 1);
    const Run res = cli(rs);
    INFO(res.err);
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("resuming from epoch 2"));
}

TEST_CASE("build-dataset writes a pair manifest") {
    const auto dir = testing::scratch_dir("cli_build");
    REQUIRE(cli({"phantoms", "5", "--out", (dir / "ph").string(), "--experiment.phantom_size=16"}).code == 0);
    const Run r = cli({"build-dataset", "--in", (dir / "ph").string(), "--out", (dir / "pairs.json").string(),
                       "--data.copies=3"});
    REQUIRE(r.code == 0);
    const auto man = read_json(dir / "pairs.json");
    CHECK(man["copies"] == 3);
    CHECK(man["mode"] == "n2n_pair");
}
