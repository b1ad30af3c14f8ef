#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sunncast/bundle.hpp"
#include "sunncast/dates.hpp"
#include "sunncast/features.hpp"
#include "test_util.hpp"

using namespace sunncast;
using testutil::run_cli;

namespace {

// One shared corpus + bundle for the whole suite; generated once.
struct CliWorld {
  std::filesystem::path dir;
  std::string climate;
  std::string labels;
  std::string bundle;

  CliWorld() {
    dir = testutil::scratch_dir("cli_world");
    const auto corpus = dir / "corpus";
    auto r = run_cli("synth --out-dir " + corpus.string() + " --years 2 --stations 1");
    REQUIRE(r.code == 0);
    climate = (corpus / "climate.csv").string();
    labels = (corpus / "labels.csv").string();
    bundle = (dir / "model.json").string();
    r = run_cli("train --climate " + climate + " --labels " + labels + " --model m3 --seed 5 --out " +
                bundle);
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("wrote") != std::string::npos);
  }
};

CliWorld& world() {
  static CliWorld w;
  return w;
}

}  // namespace

TEST_CASE("cli rejects missing and malformed invocations") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("definitely-not-a-command").code == 1);
  CHECK(run_cli("train --climate nope.csv --labels nope.csv").code == 1);  // --out required
  const auto r = run_cli("train --climate /does/not/exist.csv --labels also-no.csv --out x.json");
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("train --help").code == 0);
}

TEST_CASE("synth then train produces a loadable spec-correct bundle") {
  CliWorld& w = world();
  const ModelBundle b = load_bundle(w.bundle);
  CHECK(b.spec.id == ModelId::M3AccumulatedReduced);
  CHECK(b.spec.size() == 6);
  CHECK(b.params.rng_seed == 5);
  CHECK(b.meta.n_instances > 600);
  CHECK(b.meta.n_regression > 100);
}

TEST_CASE("training is deterministic at the byte level") {
  CliWorld& w = world();
  const auto again = (w.dir / "model_again.json").string();
  const auto r = run_cli("train --climate " + w.climate + " --labels " + w.labels +
                         " --model m3 --seed 5 --out " + again);
  REQUIRE(r.code == 0);
  CHECK(testutil::read_file(w.bundle) == testutil::read_file(again));

  const auto other_seed = (w.dir / "model_seed6.json").string();
  REQUIRE(run_cli("train --climate " + w.climate + " --labels " + w.labels +
                  " --model m3 --seed 6 --out " + other_seed)
              .code == 0);
  CHECK(testutil::read_file(w.bundle) != testutil::read_file(other_seed));
}

TEST_CASE("train surfaces the no-regression-instances error") {
  CliWorld& w = world();
  // Strip every count column from the labels.
  std::istringstream in(testutil::read_file(w.labels));
  std::string line;
  std::string stripped;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      stripped += line + "\n";
      header = false;
      continue;
    }
    std::string cut = line;
    int commas = 0;
    for (std::size_t i = 0; i < cut.size(); ++i) {
      if (cut[i] == ',') ++commas;
      if (commas == 3) {
        cut = cut.substr(0, i) + ",,,,,";
        break;
      }
    }
    stripped += cut + "\n";
  }
  const auto path = w.dir / "labels_no_counts.csv";
  testutil::write_file(path, stripped);
  const auto r = run_cli("train --climate " + w.climate + " --labels " + path.string() +
                         " --out " + (w.dir / "never.json").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("no regression instances") != std::string::npos);
}

TEST_CASE("evaluate prints a pooled report and honours n < k") {
  CliWorld& w = world();
  const auto r = run_cli("evaluate --climate " + w.climate + " --labels " + w.labels +
                         " --model m3 --seed 5 --folds 10");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("accuracy") != std::string::npos);
  CHECK(r.out.find("folds 10") != std::string::npos);

  const auto json_path = (w.dir / "report.json").string();
  const auto rr = run_cli("evaluate --climate " + w.climate + " --labels " + w.labels +
                          " --model m3 --seed 5 --report-format records --out " + json_path);
  REQUIRE(rr.code == 0);
  const nlohmann::json report = nlohmann::json::parse(rr.out);
  CHECK(report.at("classification").at("confusion").at("counts").size() == 3);
  CHECK(report.at("classification").at("accuracy").get<double>() >= 0.9);
  CHECK(report.at("regression").at("stages").size() == 5);
  CHECK(report.at("confidence_level") == 0.99);
  CHECK(nlohmann::json::parse(testutil::read_file(json_path)) == report);

  // Nine labelled days cannot fill ten folds.
  std::istringstream in(testutil::read_file(w.labels));
  std::string line;
  std::string nine;
  for (int i = 0; i < 10 && std::getline(in, line); ++i) nine += line + "\n";
  const auto path = w.dir / "labels_nine.csv";
  testutil::write_file(path, nine);
  const auto bad = run_cli("evaluate --climate " + w.climate + " --labels " + path.string() +
                           " --folds 10");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("n < k") != std::string::npos);
}

TEST_CASE("predict emits deterministic per-day records") {
  CliWorld& w = world();
  const std::string base = "predict --bundle " + w.bundle + " --climate " + w.climate +
                           " --from 2015-05-01 --to 2015-05-10";
  const auto table = run_cli(base);
  REQUIRE(table.code == 0);
  CHECK(table.out.find("station") != std::string::npos);

  const auto records = run_cli(base + " --report-format records");
  REQUIRE(records.code == 0);
  const auto again = run_cli(base + " --report-format records");
  CHECK(records.out == again.out);

  std::istringstream lines(records.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("station") == "ST01");
    CHECK(j.at("phase").get<int>() >= 1);
    CHECK(j.at("phase").get<int>() <= 3);
    CHECK(j.at("ratios").size() == 5);
    CHECK(j.at("rule").at("threshold") == 0.55);
    const std::string warning = j.at("warning");
    CHECK((warning == "no_action" || warning == "watch" || warning == "spray_window"));
    ++n;
  }
  CHECK(n == 10);

  const auto out_path = (w.dir / "forecast.ndjson").string();
  REQUIRE(run_cli(base + " --out " + out_path).code == 0);
  CHECK(testutil::read_file(out_path) == records.out);
}

TEST_CASE("predict validates dates and range") {
  CliWorld& w = world();
  CHECK(run_cli("predict --bundle " + w.bundle + " --climate " + w.climate +
                " --from nonsense --to 2015-05-10")
            .code == 1);
  const auto r = run_cli("predict --bundle " + w.bundle + " --climate " + w.climate +
                         " --from 2010-01-01 --to 2010-01-05");
  CHECK(r.code == 1);
  CHECK(r.err.find("2015-01-01") != std::string::npos);
}

TEST_CASE("predict refuses a corrupt bundle") {
  CliWorld& w = world();
  const auto path = w.dir / "broken.json";
  testutil::write_file(path, testutil::read_file(w.bundle).substr(0, 200));
  const auto r = run_cli("predict --bundle " + path.string() + " --climate " + w.climate +
                         " --from 2015-05-01 --to 2015-05-02");
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("export-dot writes graphs for the phase tree and each forest") {
  CliWorld& w = world();
  const auto dot_path = (w.dir / "phase.dot").string();
  const auto r = run_cli("export-dot --bundle " + w.bundle + " --which phase --out " + dot_path);
  REQUIRE(r.code == 0);
  const std::string dot = testutil::read_file(dot_path);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("≤") != std::string::npos);

  const auto stage = run_cli("export-dot --bundle " + w.bundle + " --which stage2");
  REQUIRE(stage.code == 0);
  CHECK(stage.out.find("cluster_t0") != std::string::npos);

  CHECK(run_cli("export-dot --bundle " + w.bundle + " --which stage9").code == 1);
}

TEST_CASE("unknown model names fail fast") {
  CliWorld& w = world();
  const auto r = run_cli("train --climate " + w.climate + " --labels " + w.labels +
                         " --model m9 --out " + (w.dir / "x.json").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("m9") != std::string::npos);
}
