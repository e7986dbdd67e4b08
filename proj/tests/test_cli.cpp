#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "slmg/cli.hpp"
#include "slmg/io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "slmg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = slmg::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("aggregate") {
  auto dir = slmg::test::temp_dir("cli_aggregate");
  write(dir / "ann.jsonl",
        "{\"item_id\": \"a\", \"annotator_id\": \"r1\", \"label\": 0}\n"
        "{\"item_id\": \"a\", \"annotator_id\": \"r2\", \"label\": 1}\n"
        "{\"item_id\": \"b\", \"annotator_id\": \"r1\", \"label\": 2}\n");
  auto before = slurp(dir / "ann.jsonl");
  auto r = run({"aggregate", "--annotations", (dir / "ann.jsonl").string(), "--classes", "3", "--out",
                (dir / "soft.jsonl").string()});
  CHECK(r.code == 0);
  auto soft = slurp(dir / "soft.jsonl");
  CHECK(lines(soft) == 2);
  CHECK(soft.find("\"a\"") != std::string::npos);
  CHECK(slurp(dir / "ann.jsonl") == before);
  auto manifest = slmg::io::read_json_file(dir / "soft.jsonl.manifest.json");
  CHECK(manifest.at("command") == "aggregate");
  CHECK(manifest.at("alpha") == 0.0);

  // Re-running gives identical bytes.
  run({"aggregate", "--annotations", (dir / "ann.jsonl").string(), "--classes", "3", "--out",
       (dir / "soft2.jsonl").string()});
  CHECK(slurp(dir / "soft2.jsonl") == soft);

  write(dir / "bad.jsonl", "{\"item_id\": \"a\", \"annotator_id\": \"r1\", \"label\": 0}\n{oops\n");
  auto bad = run({"aggregate", "--annotations", (dir / "bad.jsonl").string(), "--classes", "3", "--out",
                  (dir / "x.jsonl").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("bad.jsonl:2") != std::string::npos);

  CHECK(run({"aggregate", "--annotations", (dir / "ann.jsonl").string(), "--classes", "3", "--out",
             (dir / "x.jsonl").string(), "--bogus"})
            .code == 2);
  CHECK(run({"aggregate", "--annotations", (dir / "missing.jsonl").string(), "--classes", "3", "--out",
             (dir / "x.jsonl").string()})
            .code == 2);
  CHECK(run({"nonsense"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("agreement, budget curve, subsample and report") {
  auto dir = slmg::test::temp_dir("cli_crowd");
  write(dir / "cfg.json", R"({"n_items": 20, "n_annotators": 30, "seed": 4})");
  REQUIRE(run({"synth", "--config", (dir / "cfg.json").string(), "--out", (dir / "pop").string()}).code == 0);
  const auto ann = (dir / "pop" / "annotations.jsonl").string();

  auto k = run({"agreement", "--annotations", ann});
  CHECK(k.code == 0);
  auto kj = slmg::io::Json::parse(k.out);
  CHECK(kj.at("raters_per_item") == 30);

  auto b = run({"budget-curve", "--annotations", ann, "--runs", "2", "--out", (dir / "curve.csv").string()});
  CHECK(b.code == 0);
  auto csv = slurp(dir / "curve.csv");
  CHECK(lines(csv) == 1 + 2 * 30);
  CHECK(csv.find("\n30,1,0\n") != std::string::npos);
  CHECK(run({"budget-curve", "--annotations", ann, "--alpha", "0", "--out", (dir / "c.csv").string()}).code == 2);
  CHECK(run({"budget-curve", "--annotations", ann, "--max-n", "31", "--out", (dir / "c.csv").string()}).code == 2);

  auto s = run({"subsample", "--annotations", ann, "--n", "5", "--seed", "2", "--out", (dir / "sub.jsonl").string()});
  CHECK(s.code == 0);
  CHECK(lines(slurp(dir / "sub.jsonl")) == 20 * 5);

  auto rep = run({"report", "--soft", (dir / "pop" / "true_soft.jsonl").string(), "--gold",
                  (dir / "pop" / "items.jsonl").string(), "--out", (dir / "hist.csv").string()});
  CHECK(rep.code == 0);
  CHECK(lines(slurp(dir / "hist.csv")) == 11);
}

TEST_CASE("report on unanimous data puts everything in one bin") {
  auto dir = slmg::test::temp_dir("cli_report");
  write(dir / "soft.jsonl", "{\"item_id\": \"a\", \"probs\": [1, 0, 0]}\n{\"item_id\": \"b\", \"probs\": [0, 0, 1]}\n");
  write(dir / "gold.jsonl", "{\"item_id\": \"a\", \"label\": 0}\n{\"item_id\": \"b\", \"label\": 2}\n");
  auto r = run({"report", "--soft", (dir / "soft.jsonl").string(), "--gold", (dir / "gold.jsonl").string(),
                "--out", (dir / "h.csv").string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "h.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "bin_start,relative_frequency");
  int nonzero = 0;
  while (std::getline(csv, line)) {
    const auto value = std::stod(line.substr(line.find(',') + 1));
    if (value > 0) {
      ++nonzero;
      CHECK(value == 1.0);
      CHECK(line.rfind("0.9", 0) == 0);
    }
  }
  CHECK(nonzero == 1);

  write(dir / "gold_missing.jsonl", "{\"item_id\": \"a\", \"label\": 0}\n");
  CHECK(run({"report", "--soft", (dir / "soft.jsonl").string(), "--gold", (dir / "gold_missing.jsonl").string(),
             "--out", (dir / "h2.csv").string()})
            .code == 2);
}

TEST_CASE("synth, aggregate, train and eval pipeline") {
  auto dir = slmg::test::temp_dir("cli_pipeline");
  write(dir / "cfg.json",
        R"({"n_items": 400, "n_annotators": 50, "seed": 8, "layout": {"soft": 40, "dev": 40, "test": 100}})");
  REQUIRE(run({"synth", "--config", (dir / "cfg.json").string(), "--out", (dir / "data").string()}).code == 0);
  REQUIRE(run({"aggregate", "--annotations", (dir / "data" / "annotations.jsonl").string(), "--classes", "3",
               "--out", (dir / "data" / "soft.jsonl").string(), "--with-counts"})
              .code == 0);
  for (std::string schedule : {"B1", "SLMG-S"}) {
    const std::string out = "run_" + schedule;
    slmg::io::Json manifest{{"schedule", schedule},
                            {"data",
                             {{"train", "data/train.jsonl"},
                              {"soft_items", "data/soft_items.jsonl"},
                              {"soft_labels", "data/soft.jsonl"},
                              {"dev", "data/dev.jsonl"},
                              {"test", "data/test.jsonl"},
                              {"reference", "data/true_soft.jsonl"}}},
                            {"train", {{"epochs", 3}, {"meta_epochs", 2}, {"dev_selection", true}}},
                            {"binary_positive", 0},
                            {"output_dir", out}};
    write(dir / (schedule + ".json"), manifest.dump(2));
    auto t = run({"train", "--manifest", (dir / (schedule + ".json")).string()});
    REQUIRE(t.code == 0);
    auto e = run({"eval", "--checkpoint", (dir / out / "checkpoint.json").string(), "--test",
                  (dir / "data" / "test.jsonl").string(), "--binary-positive", "0", "--reference",
                  (dir / "data" / "true_soft.jsonl").string()});
    REQUIRE(e.code == 0);
    CHECK(e.out == slurp(dir / out / "eval.json"));
    auto written = slmg::io::read_json_file(dir / out / "manifest.json");
    CHECK(written.at("train").at("batch_size") == 32);
    CHECK(written.contains("created_utc"));
  }
  write(dir / "bad_manifest.json", R"({"schedule": "B9", "data": {"train": "a", "test": "b"}, "output_dir": "x"})");
  CHECK(run({"train", "--manifest", (dir / "bad_manifest.json").string()}).code == 2);
}

#ifdef SLMG_CLI_PATH
TEST_CASE("installed binary exit codes") {
  auto dir = slmg::test::temp_dir("cli_binary");
  write(dir / "bad.jsonl", "not json\n");
  const std::string exe = SLMG_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " --help") == 0);
  CHECK(status(exe + " aggregate --annotations " + (dir / "bad.jsonl").string() + " --classes 3 --out " +
               (dir / "o.jsonl").string()) == 2);
  CHECK(status(exe + " frobnicate") == 2);
}
#endif
