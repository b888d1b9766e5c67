#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "noiselab/noise.hpp"
#include "noiselab/serialize.hpp"
#include "test_util.hpp"

#ifndef NOISELAB_CLI_PATH
#error "NOISELAB_CLI_PATH must point at the noiselab executable"
#endif

using namespace noiselab;

namespace {

struct Result {
    int status = 0;
    std::string err;
};

Result cli(const testutil::TempDir& dir, const std::string& args, const std::string& env = "") {
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = env + " \"" NOISELAB_CLI_PATH "\" " + args + " >\"" + (dir / "stdout.txt").string() +
                            "\" 2>\"" + err_path.string() + "\"";
    const int raw = std::system(cmd.c_str());
    Result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = testutil::slurp(err_path);
    return r;
}

std::string out(const testutil::TempDir& dir) { return testutil::slurp(dir / "stdout.txt"); }

std::string p(const testutil::TempDir& dir, const std::string& name) { return "\"" + (dir / name).string() + "\""; }

void write(const testutil::TempDir& dir, const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
}

const char* kSmallConfig =
    R"({"phase1_epochs": 3, "phase2_epochs": 2, "phase3_epochs": 3, "batch_size": 16, "phase2_batch_size": 8,
        "lr": 0.05, "model_spec": {"layer_sizes": [4, 6, 2], "activation": "relu", "init_seed": 0}})";

}  // namespace

TEST_CASE("cli end to end: synth, split, noise, estimator, estimate, run, eval") {
    testutil::TempDir dir;
    REQUIRE(cli(dir, "make-synth --n 120 --classes 2 --dim 4 --seed 3 --out " + p(dir, "all.json")).status == 0);
    const Dataset all = load_dataset(dir / "all.json");
    CHECK(all.size() == 120);

    REQUIRE(cli(dir, "split --in " + p(dir, "all.json") + " --fractions 0.6,0.2,0.2 --seed 1 --out-train " +
                         p(dir, "tr.json") + " --out-val " + p(dir, "va.json") + " --out-test " + p(dir, "te.json"))
                .status == 0);
    CHECK(load_dataset(dir / "tr.json").size() == 72);

    REQUIRE(cli(dir, "inject-noise --in " + p(dir, "tr.json") + " --rate 0.25 --seed 4 --out " + p(dir, "trn.json") +
                         " --record " + p(dir, "rec.json"))
                .status == 0);
    const auto rec = corruption_record_from_json(read_json_file(dir / "rec.json"));
    CHECK(rec.flipped_count() == 18);

    write(dir, "cfg.json", kSmallConfig);
    REQUIRE(cli(dir, "make-synth --n 60 --classes 2 --dim 4 --seed 10 --out " + p(dir, "aux1.json")).status == 0);
    REQUIRE(cli(dir, "make-synth --n 80 --classes 2 --dim 4 --seed 11 --out " + p(dir, "aux2.json")).status == 0);
    REQUIRE(cli(dir, "train-estimator --aux " + p(dir, "aux1.json") + " " + p(dir, "aux2.json") +
                         " --rates 0,0.2,0.4 --config " + p(dir, "cfg.json") + " --threads 2 --out " +
                         p(dir, "est.json"))
                .status == 0);
    const auto est = estimator_model_from_json(read_json_file(dir / "est.json"));
    CHECK(est.bins() == 1000);

    write(dir, "losses.csv", "loss\n0.1\n0.5\n2.0\n0.05\n");
    REQUIRE(cli(dir, "estimate --model " + p(dir, "est.json") + " --losses " + p(dir, "losses.csv") + " --classes 2")
                .status == 0);
    const Json e = Json::parse(out(dir));
    CHECK(e.contains("eta_hat"));
    CHECK(e.contains("eta_hat_raw"));
    CHECK(e["eta_hat"].get<double>() >= 0.0);
    CHECK(e["eta_hat"].get<double>() < 0.5);

    REQUIRE(cli(dir, "run --train " + p(dir, "trn.json") + " --val " + p(dir, "va.json") + " --test " +
                         p(dir, "te.json") + " --config " + p(dir, "cfg.json") + " --estimator " + p(dir, "est.json") +
                         " --corruption-record " + p(dir, "rec.json") + " --curves " + p(dir, "curves.csv") +
                         " --model-out " + p(dir, "model.json") + " --out " + p(dir, "report.json"))
                .status == 0);
    const Json report = read_json_file(dir / "report.json");
    CHECK(report["mode"] == "pipeline");
    CHECK(report["selection"].contains("precision"));
    CHECK(report["selection"].contains("recall"));
    CHECK(report["selection"].contains("removed_count"));
    CHECK(report["curves"].size() == 8);
    const std::string curves = testutil::slurp(dir / "curves.csv");
    CHECK(curves.rfind("epoch,phase,train_loss,val_acc\n", 0) == 0);
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 9);

    REQUIRE(cli(dir, "eval --model " + p(dir, "model.json") + " --data " + p(dir, "te.json") + " --tau 0.5").status ==
            0);
    const Json m = Json::parse(out(dir));
    CHECK(m["accuracy"] == report["metrics"]["accuracy"]);

    REQUIRE(cli(dir, "run --baseline --train " + p(dir, "trn.json") + " --val " + p(dir, "va.json") + " --test " +
                         p(dir, "te.json") + " --config " + p(dir, "cfg.json") + " --out " + p(dir, "base.json"))
                .status == 0);
    const Json base = read_json_file(dir / "base.json");
    CHECK(base["mode"] == "baseline");
    CHECK_FALSE(base.contains("selection"));

    REQUIRE(cli(dir, "ablate-forget-rate --train " + p(dir, "trn.json") + " --test " + p(dir, "te.json") +
                         " --config " + p(dir, "cfg.json") + " --estimator " + p(dir, "est.json") + " --out " +
                         p(dir, "abl.csv"))
                .status == 0);
    const std::string abl = testutil::slurp(dir / "abl.csv");
    CHECK(std::count(abl.begin(), abl.end(), '\n') == 7);
    CHECK(abl.find("estimated") != std::string::npos);
}

TEST_CASE("cli runs are byte identical and honour the seed precedence") {
    testutil::TempDir dir;
    REQUIRE(cli(dir, "make-synth --n 30 --classes 3 --dim 2 --out " + p(dir, "a.json"), "NOISELAB_SEED=5").status == 0);
    REQUIRE(cli(dir, "make-synth --n 30 --classes 3 --dim 2 --seed 5 --out " + p(dir, "b.json")).status == 0);
    REQUIRE(cli(dir, "make-synth --n 30 --classes 3 --dim 2 --seed 6 --out " + p(dir, "c.json"), "NOISELAB_SEED=5")
                .status == 0);
    CHECK(testutil::slurp(dir / "a.json") == testutil::slurp(dir / "b.json"));
    CHECK(testutil::slurp(dir / "a.json") != testutil::slurp(dir / "c.json"));
    CHECK(load_dataset(dir / "c.json").name.find("s6") != std::string::npos);
}

TEST_CASE("cli failures print one JSON line and exit nonzero") {
    testutil::TempDir dir;
    auto r = cli(dir, "make-synth --n 1 --classes 2 --dim 2 --out " + p(dir, "x.json"));
    CHECK(r.status == 1);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const Json j = Json::parse(r.err);
    CHECK(j["error"]["kind"] == "argument");
    CHECK(j["error"]["message"].is_string());

    r = cli(dir, "frobnicate");
    CHECK(r.status == 2);
    CHECK(Json::parse(r.err)["error"]["kind"] == "usage");

    r = cli(dir, "run --train " + p(dir, "missing.json") + " --val a --test b --out " + p(dir, "r.json"));
    CHECK(r.status == 1);
    CHECK(Json::parse(r.err)["error"]["kind"] == "io");

    write(dir, "bad.json", "{not json");
    r = cli(dir, "eval --model " + p(dir, "bad.json") + " --data " + p(dir, "bad.json"));
    CHECK(r.status == 1);
    CHECK(Json::parse(r.err)["error"]["kind"] == "format");

    REQUIRE(cli(dir, "make-synth --n 20 --classes 2 --dim 2 --split validation --out " + p(dir, "v.json")).status == 0);
    r = cli(dir, "inject-noise --in " + p(dir, "v.json") + " --rate 0.1 --out " + p(dir, "o.json") + " --record " +
                     p(dir, "r.json"));
    CHECK(r.status == 2);
    CHECK(Json::parse(r.err)["error"]["kind"] == "usage");

    REQUIRE(cli(dir, "make-synth --n 20 --classes 2 --dim 2 --out " + p(dir, "t.json")).status == 0);
    r = cli(dir, "inject-noise --in " + p(dir, "t.json") + " --rate 0.5 --out " + p(dir, "o.json") + " --record " +
                     p(dir, "r.json"));
    CHECK(r.status == 1);
    CHECK(Json::parse(r.err)["error"]["kind"] == "argument");
}

TEST_CASE("cli import-idx") {
    testutil::TempDir dir;
    std::vector<std::uint8_t> px(3 * 2 * 2, 255);
    px[0] = 0;
    write_idx_images(dir / "img.idx", px, 3, {2, 2});
    write_idx_labels(dir / "lbl.idx", {0, 1, 1});
    REQUIRE(cli(dir, "import-idx --images " + p(dir, "img.idx") + " --labels " + p(dir, "lbl.idx") +
                         " --classes 2 --name digits --out " + p(dir, "d.json"))
                .status == 0);
    const Dataset d = load_dataset(dir / "d.json");
    CHECK(d.name == "digits");
    CHECK(d.size() == 3);
    CHECK(d.samples[0].features[0] == 0.0);
    CHECK(d.samples[0].features[1] == 1.0);

    write_idx_labels(dir / "lbl3.idx", {0, 1, 2});
    const auto r = cli(dir, "import-idx --images " + p(dir, "img.idx") + " --labels " + p(dir, "lbl3.idx") +
                                " --classes 2 --out " + p(dir, "d.json"));
    CHECK(r.status == 1);
    CHECK(Json::parse(r.err)["error"]["kind"] == "range");
}
