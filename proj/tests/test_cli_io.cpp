#include <doctest.h>

#include "msalnet/config.hpp"
#include "msalnet/error.hpp"
#include "msalnet/io.hpp"
#include "msalnet/synth.hpp"

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace msalnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("msalnet_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("MSALNET_CLI_PATH");
    if (cli == nullptr) cli = MSALNET_CLI_PATH;
    const std::string cmd = std::string(cli) + " -q " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SynthConfig tiny_synth() {
    SynthConfig cfg;
    cfg.r = 8;
    cfg.class_rois = {1, 5};
    cfg.t_points = 40;
    cfg.seed = 3;
    cfg.sites = {{"a", 10, 0.3, 1}, {"b", 10, 0.3, 2}};
    return cfg;
}

json tiny_run(const std::string& backbone) {
    return {{"profile", "custom"},
            {"backbone", backbone},
            {"train", {{"max_epochs", 2}, {"lr_main", 1e-3}}},
            {"nia", {{"c1", 2}, {"c2", 3}, {"n_pre", 4}}},
            {"mlp", {{"hidden", {6, 4}}}},
            {"ae", {{"enabled", true}, {"d", 4}, {"epochs", 2}, {"lr", 1e-3}}},
            {"selection", {{"enabled", false}}},
            {"probe", {{"epochs", 5}}},
            {"validation_folds", 3},
            {"cv", {{"k", 5}, {"seed", 1}}}};
}

}  // namespace

TEST_CASE("canonical json") {
    const json doc = {{"b", 0.1}, {"a", {1, 2}}, {"c", std::nan("")}};
    const std::string text = canonical_dump(doc);
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("null") != std::string::npos);
    CHECK(canonical_dump(json::parse(text)) == text);
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(parse_double(format_double(1.0 / 3.0), "x") == 1.0 / 3.0);
    CHECK_THROWS_AS(parse_double("1.5abc", "x"), InputError);
}

TEST_CASE("git blob hash") {
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("manifest round trip is byte stable") {
    const fs::path dir = scratch("manifest");
    DatasetManifest m;
    m.r = 4;
    ManifestEntry e;
    e.subject_id = "s1";
    e.site_id = "x";
    e.label = 1;
    e.fc_path = "fc/s1.csv";
    e.scales[ScaleVariable::age] = 12.5;
    e.scales[ScaleVariable::gender] = 0;
    m.subjects.push_back(e);
    e.subject_id = "s2";
    e.label.reset();
    e.scales = {};
    m.subjects.push_back(e);

    save_manifest(dir / "m.json", m);
    const std::string first = read_text_file(dir / "m.json");
    const DatasetManifest back = load_manifest(dir / "m.json");
    CHECK(back.subjects.size() == 2);
    CHECK(back.subjects[0].scales[ScaleVariable::age] == 12.5);
    CHECK(!back.subjects[1].label.has_value());
    save_manifest(dir / "m2.json", back);
    CHECK(read_text_file(dir / "m2.json") == first);

    json broken = manifest_to_json(m);
    broken["subjects"][0]["label"] = 3;
    CHECK_THROWS_AS(manifest_from_json(broken), InputError);
    broken = manifest_to_json(m);
    broken["subjects"][0].erase("site_id");
    CHECK_THROWS_AS(manifest_from_json(broken), InputError);
    fs::remove_all(dir);
}

TEST_CASE("run config") {
    const RunConfig abide = profile_config("abide-like");
    CHECK(abide.pipeline.train.alpha == 0.006);
    CHECK(abide.pipeline.ae.d == 512);
    CHECK(abide.pipeline.selection.enabled);
    const RunConfig adhd = profile_config("adhd-like");
    CHECK(adhd.pipeline.train.alpha == 0.008);
    CHECK(adhd.pipeline.ae.d == 256);
    CHECK(!adhd.pipeline.selection.enabled);
    CHECK_THROWS_AS(profile_config("nope"), InputError);

    const RunConfig custom = run_config_from_json(tiny_run("mlp"));
    CHECK(canonical_dump(to_json(run_config_from_json(to_json(custom)))) == canonical_dump(to_json(custom)));

    json doc = tiny_run("nia");
    doc["train"]["learning_rate"] = 1;
    CHECK_THROWS_WITH_AS(run_config_from_json(doc), doctest::Contains("train.learning_rate"), InputError);
    doc = tiny_run("nia");
    doc["train"]["alpha"] = -0.5;
    CHECK_THROWS_WITH_AS(run_config_from_json(doc), doctest::Contains("alpha"), InputError);
    doc = tiny_run("nia");
    doc["train"]["max_epochs"] = "ten";
    CHECK_THROWS_AS(run_config_from_json(doc), InputError);
    doc = tiny_run("resnet");
    CHECK_THROWS_WITH_AS(run_config_from_json(doc), doctest::Contains("backbone"), InputError);
}

TEST_CASE("cli end to end and exit codes") {
    const fs::path dir = scratch("e2e");
    write_text_file(dir / "synth.json", canonical_dump(to_json(tiny_synth())));
    write_text_file(dir / "run_mlp.json", canonical_dump(tiny_run("mlp")));
    write_text_file(dir / "run_nia.json", canonical_dump(tiny_run("nia")));

    CHECK(run_cli("generate -c " + (dir / "synth.json").string() + " -o " + (dir / "data").string()) == 0);
    const fs::path manifest = dir / "data" / "manifest.json";
    REQUIRE(fs::exists(manifest));
    CHECK(run_cli("generate -c " + (dir / "synth.json").string() + " -o " + (dir / "again").string()) == 0);
    CHECK(read_text_file(dir / "again" / "manifest.json") == read_text_file(manifest));
    CHECK(read_text_file(dir / "again" / "fc" / "b_s3.csv") == read_text_file(dir / "data" / "fc" / "b_s3.csv"));

    CHECK(run_cli("fc -i " + (dir / "data" / "timeseries" / "a_s0.csv").string() + " -o " + (dir / "fc.csv").string()) == 0);
    CHECK(fs::exists(dir / "fc.csv"));

    CHECK(run_cli("train -m " + manifest.string() + " -c " + (dir / "run_nia.json").string() + " -o " +
                  (dir / "nia").string()) == 0);
    REQUIRE(fs::exists(dir / "nia" / "report.json"));
    const json report = json::parse(read_text_file(dir / "nia" / "report.json"));
    CHECK(report.contains("metrics"));
    CHECK(report.contains("input_hash"));
    CHECK(report.contains("config"));
    CHECK(fs::exists(dir / "nia" / "model.json"));
    CHECK(fs::exists(dir / "nia" / "train_log.jsonl"));

    CHECK(run_cli("interpret --checkpoint " + (dir / "nia" / "model.json").string() + " -m " + manifest.string() +
                  " -o " + (dir / "interp").string()) == 0);
    CHECK(fs::exists(dir / "interp" / "importance.csv"));
    CHECK(fs::exists(dir / "interp" / "edges.csv"));
    CHECK(run_cli("evaluate --checkpoint " + (dir / "nia" / "model.json").string() + " -m " + manifest.string()) == 0);

    // Importance needs the NIA backbone.
    CHECK(run_cli("train -m " + manifest.string() + " -c " + (dir / "run_mlp.json").string() + " -o " +
                  (dir / "mlp").string()) == 0);
    CHECK(run_cli("interpret --checkpoint " + (dir / "mlp" / "model.json").string() + " -m " + manifest.string() +
                  " -o " + (dir / "interp2").string()) == 2);

    // Missing labels are rejected for training.
    DatasetManifest m = load_manifest(manifest);
    for (auto& s : m.subjects) {
        s.label.reset();
        if (s.fc_path) s.fc_path = (dir / "data" / *s.fc_path).string();
        if (s.timeseries_path) s.timeseries_path = (dir / "data" / *s.timeseries_path).string();
    }
    save_manifest(dir / "unlabelled.json", m);
    CHECK(run_cli("train -m " + (dir / "unlabelled.json").string() + " -c " + (dir / "run_nia.json").string() +
                  " -o " + (dir / "x").string()) == 2);

    CHECK(run_cli("train -m " + (dir / "missing.json").string() + " -o " + (dir / "x").string()) == 2);
    CHECK(run_cli("bogus") == 2);
    CHECK(run_cli("interpret --checkpoint x.json -m y.json -o z --threshold 3") == 2);

    // Covariance entries overflow: generation fails numerically.
    SynthConfig huge = tiny_synth();
    huge.noise_sd = 1e308;
    huge.class_effect = 1e308;
    write_text_file(dir / "huge.json", canonical_dump(to_json(huge)));
    CHECK(run_cli("generate -c " + (dir / "huge.json").string() + " -o " + (dir / "huge").string()) == 3);
    fs::remove_all(dir);
}
