/*
 * Copyright 2026 The toxens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/cli.h"
#include "toxens/manifest.h"
#include "toxens/predictions.h"
#include "toxens/synthetic.h"

namespace toxens {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Workspace {
 public:
  Workspace() : root_(fs::temp_directory_path() / "toxens_cli_test") {
    fs::remove_all(root_);
    const Corpus c = MakeComplementarityCorpus(600, 11);
    WriteStringToFile((root_ / "data" / "comments.csv").string(), ToJigsawCsv(c));
    WriteStringToFile((root_ / "data" / "schema.json").string(), SerializeSchema(c.schema()));
    config_ = (root_ / "toy.ini").string();
    WriteStringToFile(config_, R"([dataset]
name = complementarity
path = )" + (root_ / "data" / "comments.csv").string() + R"(
schema_path = )" + (root_ / "data" / "schema.json").string() + R"(
test_fraction = 0.3
folds = 5
seed = 5

[embeddings]
dimension = 8
epochs = 1
buckets = 1024
min_n = 3
max_n = 4

[model.word_alpha]
family = lr_word
token_filter = alphabetic

[model.char_nonalpha]
family = lr_char
token_filter = non_alphabetic

[model.cnn_sub]
family = cnn
embedding_source = trained_subword
conv_widths = 2, 3
conv_maps = 4
epochs = 1
max_len = 16

[ensemble]
models = word_alpha, char_nonalpha
meta_features = false

[metrics]
pairs = word_alpha:char_nonalpha
focus_class = toxic

[triage]
focal_class = toxic
kind = FN
sample_size = 20
)");
  }
  ~Workspace() { fs::remove_all(root_); }

  const std::string& config() const { return config_; }
  std::string Out(const std::string& name) const { return (root_ / name).string(); }
  std::string Path(const std::string& rel) const { return (root_ / rel).string(); }

  Run Step(const std::string& out, std::vector<std::string> args) const {
    args.insert(args.begin(), {"--config", config_, "--out-dir", Out(out), "--deterministic"});
    return Cli(args);
  }

 private:
  fs::path root_;
  std::string config_;
};

double MacroF1(const std::string& path) {
  return json::parse(ReadFileToString(path))["macro"]["f1"].get<double>();
}

TEST_CASE("argument and configuration errors exit 1") {
  Workspace w;
  const Run unknown = Cli({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK(Cli({"--jobs", "0", "ingest"}).code == 1);
  CHECK(Cli({"ingest"}).code == 1);

  std::string text = ReadFileToString(w.config());
  text.replace(text.find("epochs = 1\nmax_len"), 10, "epochz = 1");
  const std::string bad = w.Path("bad.ini");
  WriteStringToFile(bad, text);
  const Run r = Cli({"--config", bad, "--out-dir", w.Out("bad"), "ingest"});
  CHECK(r.code == 1);
  CHECK(r.err.find("epochz") != std::string::npos);
  CHECK(r.err.find("bad.ini:") != std::string::npos);

  CHECK(Cli({"--help"}).code == 0);
}

TEST_CASE("toy pipeline end to end") {
  Workspace w;
  const std::vector<std::vector<std::string>> steps{
      {"ingest"},
      {"oof"},
      {"stack"},
      {"thresholds"},
      {"evaluate"},
      {"correlate"},
      {"triage", "sample"},
  };
  for (const std::string out : {"a", "b"}) {
    for (const auto& s : steps) {
      const Run r = w.Step(out, s);
      INFO(s[0], ": ", r.err);
      REQUIRE(r.code == 0);
    }
  }

  SUBCASE("the stacked ensemble beats each base model") {
    const double ens = MacroF1(w.Path("a/reports/ensemble.metrics.json"));
    CHECK(ens > MacroF1(w.Path("a/reports/word_alpha.metrics.json")));
    CHECK(ens > MacroF1(w.Path("a/reports/char_nonalpha.metrics.json")));
  }

  SUBCASE("deterministic runs produce byte-identical reports") {
    for (const auto& entry : fs::directory_iterator(w.Path("a/reports"))) {
      const std::string name = entry.path().filename().string();
      INFO(name);
      CHECK(ReadFileToString(entry.path().string()) == ReadFileToString(w.Path("b/reports/" + name)));
    }
    CHECK(ReadFileToString(w.Path("a/corpus/folds.csv")) == ReadFileToString(w.Path("b/corpus/folds.csv")));
    CHECK(ReadFileToString(w.Path("a/oof/ensemble.test.csv")) ==
          ReadFileToString(w.Path("b/oof/ensemble.test.csv")));
  }

  SUBCASE("every artifact is indexed to a manifest") {
    const auto index = LoadArtifactIndex(w.Out("a"));
    size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(w.Out("a"))) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), w.Out("a")).generic_string();
      if (rel == "artifacts.tsv" || rel.rfind("manifests/", 0) == 0) continue;
      ++files;
      INFO(rel);
      REQUIRE(index.count(rel) == 1);
      const json m = json::parse(ReadFileToString(w.Path("a/" + index.at(rel))));
      bool listed = false;
      for (const auto& a : m["artifacts"]) listed = listed || a["path"] == rel;
      CHECK(listed);
    }
    CHECK(files > 20);
  }

  SUBCASE("evaluate an explicit predictions file") {
    const Run r = w.Step("a", {"evaluate", "--predictions", w.Path("a/oof/word_alpha.test.csv"),
                               "--thresholds", w.Path("a/thresholds/word_alpha.json")});
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(r.out.find("word_alpha") != std::string::npos);
  }

  SUBCASE("an unannotated session cannot be reported") {
    const Run r = w.Step("a", {"triage", "report"});
    CHECK(r.code == 1);
    CHECK(r.err.find("report error") != std::string::npos);
  }

  SUBCASE("subword embeddings feed a neural model") {
    for (const std::vector<std::string>& s :
         {std::vector<std::string>{"embed-train"}, {"fit", "--model", "cnn_sub"},
          {"predict", "--model", "cnn_sub", "--split", "test"}}) {
      const Run r = w.Step("a", s);
      INFO(s[0], ": ", r.err);
      REQUIRE(r.code == 0);
    }
    const auto p = PredictionMatrix::LoadCsv(w.Path("a/predictions/cnn_sub.test.csv"));
    CHECK(p.rows() == 180);
  }
}

}  // namespace
}  // namespace toxens
