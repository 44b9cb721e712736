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

#include "toxens/config.h"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>

#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

namespace {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void BadValue(const std::string& source, const std::string& section,
                           const IniEntry& e, const std::string& expected) {
  Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(e.line) + ": key '" + e.key +
                                      "' in [" + section + "] expects " + expected + ", got '" +
                                      e.value + "'");
}

// Dispatches the entries of one section to typed setters.
class SectionReader {
 public:
  SectionReader(const std::string& source, const IniSection& section)
      : source_(source), section_(section) {}

  void Str(const std::string& key, std::string* out) {
    setters_[key] = [out](const IniEntry& e) { *out = e.value; };
  }
  void Bool(const std::string& key, bool* out) {
    setters_[key] = [this, out](const IniEntry& e) {
      const std::string v = e.value;
      if (v == "true" || v == "yes" || v == "on" || v == "1") *out = true;
      else if (v == "false" || v == "no" || v == "off" || v == "0") *out = false;
      else BadValue(source_, section_.name, e, "a boolean");
    };
  }
  template <typename T>
  void Int(const std::string& key, T* out, long long lo = 0) {
    setters_[key] = [this, out, lo](const IniEntry& e) {
      char* end = nullptr;
      errno = 0;
      const long long v = std::strtoll(e.value.c_str(), &end, 10);
      if (e.value.empty() || *end != '\0' || errno != 0 || v < lo) {
        BadValue(source_, section_.name, e, "an integer >= " + std::to_string(lo));
      }
      *out = static_cast<T>(v);
    };
  }
  void Double(const std::string& key, double* out) {
    setters_[key] = [this, out](const IniEntry& e) {
      char* end = nullptr;
      const double v = std::strtod(e.value.c_str(), &end);
      if (e.value.empty() || *end != '\0' || !std::isfinite(v)) {
        BadValue(source_, section_.name, e, "a number");
      }
      *out = v;
    };
  }
  void List(const std::string& key, std::vector<std::string>* out) {
    setters_[key] = [out](const IniEntry& e) {
      out->clear();
      size_t start = 0;
      while (start <= e.value.size()) {
        size_t comma = e.value.find(',', start);
        if (comma == std::string::npos) comma = e.value.size();
        const std::string item = Trim(std::string_view(e.value).substr(start, comma - start));
        if (!item.empty()) out->push_back(item);
        start = comma + 1;
      }
    };
  }
  void Custom(const std::string& key, std::function<void(const IniEntry&)> fn) {
    setters_[key] = std::move(fn);
  }

  // Applies every entry; an entry without a setter is an error.
  void Apply() {
    for (const auto& e : section_.entries) {
      const auto it = setters_.find(e.key);
      if (it == setters_.end()) {
        Fail(ErrorKind::kConfiguration, source_ + ":" + std::to_string(e.line) +
                                            ": unknown key '" + e.key + "' in [" +
                                            section_.name + "]");
      }
      it->second(e);
    }
  }

  const std::string& source() const { return source_; }
  const std::string& name() const { return section_.name; }

 private:
  const std::string& source_;
  const IniSection& section_;
  std::map<std::string, std::function<void(const IniEntry&)>> setters_;
};

void TokenizerKeys(SectionReader* r, Tokenizer* t) {
  r->Bool("lowercase", &t->lowercase);
  r->Bool("nfc", &t->nfc);
  r->Bool("fold_urls", &t->fold_urls);
  r->Bool("fold_mentions", &t->fold_mentions);
  r->Bool("split_punctuation", &t->split_punctuation);
}

void TokenFilterKey(SectionReader* r, const std::string& key, TokenFilter* f) {
  r->Custom(key, [r, f](const IniEntry& e) {
    try {
      *f = ParseTokenFilter(e.value);
    } catch (const Error&) {
      BadValue(r->source(), r->name(), e, "all, alphabetic or non_alphabetic");
    }
  });
}

}  // namespace

IniDocument IniDocument::Parse(std::string_view text, const std::string& source) {
  IniDocument doc;
  int line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string line = Trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(line_no) + ": malformed section header");
      }
      const std::string name = Trim(std::string_view(line).substr(1, line.size() - 2));
      for (const auto& s : doc.sections) {
        if (s.name == name) {
          Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(line_no) +
                                              ": duplicate section [" + name + "]");
        }
      }
      doc.sections.push_back({name, line_no, {}});
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    if (doc.sections.empty()) {
      Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(line_no) + ": key '" +
                                          Trim(std::string_view(line).substr(0, eq)) +
                                          "' outside a section");
    }
    std::string value = Trim(std::string_view(line).substr(eq + 1));
    // Trailing comments need a preceding space.
    for (const char* marker : {" #", " ;"}) {
      const size_t c = value.find(marker);
      if (c != std::string::npos) value = Trim(std::string_view(value).substr(0, c));
    }
    IniEntry e{Trim(std::string_view(line).substr(0, eq)), value, line_no};
    auto& section = doc.sections.back();
    for (const auto& prev : section.entries) {
      if (prev.key == e.key) {
        Fail(ErrorKind::kConfiguration, source + ":" + std::to_string(line_no) + ": duplicate key '" +
                                            e.key + "' in [" + section.name + "]");
      }
    }
    section.entries.push_back(std::move(e));
  }
  return doc;
}

LabelSchema PipelineConfig::Schema() const {
  if (dataset.name == "wikipedia") return LabelSchema::Wikipedia();
  if (dataset.name == "twitter") return LabelSchema::Twitter();
  if (dataset.schema_path.empty()) {
    Fail(ErrorKind::kConfiguration, "dataset '" + dataset.name + "' needs schema_path");
  }
  return ParseSchema(ReadFileToString(ResolveDataPath(dataset.schema_path)));
}

const ClassifierSpec& PipelineConfig::Model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  Fail(ErrorKind::kConfiguration, "no [model." + name + "] section in the configuration");
}

std::vector<ClassifierSpec> PipelineConfig::EnsembleModels() const {
  if (ensemble.models.empty()) return models;
  std::vector<ClassifierSpec> out;
  for (const auto& n : ensemble.models) out.push_back(Model(n));
  return out;
}

void PipelineConfig::ApplySeed(uint64_t seed) {
  dataset.seed = seed;
  embeddings.skipgram.seed = seed;
  for (auto& m : models) m.seed = seed;
  ensemble.gbdt.seed = seed;
  triage.seed = seed;
}

PipelineConfig ParseConfig(std::string_view text, const std::string& source) {
  const IniDocument doc = IniDocument::Parse(text, source);
  PipelineConfig cfg;
  std::string canonical;
  for (const auto& s : doc.sections) {
    canonical += "[" + s.name + "]\n";
    for (const auto& e : s.entries) canonical += e.key + "=" + e.value + "\n";
  }
  cfg.hash = Fnv1a64(canonical);

  auto find = [&](const std::string& name) -> const IniSection* {
    for (const auto& s : doc.sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };
  for (const auto& s : doc.sections) {
    static const char* known[] = {"dataset", "features", "embeddings", "ensemble", "metrics", "triage"};
    bool ok = s.name.rfind("model.", 0) == 0 && s.name.size() > 6;
    for (const char* k : known) ok = ok || s.name == k;
    if (!ok) {
      Fail(ErrorKind::kConfiguration,
           source + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }

  if (const auto* s = find("dataset")) {
    SectionReader r(source, *s);
    auto& d = cfg.dataset;
    r.Str("name", &d.name);
    r.Str("format", &d.format);
    r.Str("path", &d.path);
    r.Str("test_path", &d.test_path);
    r.Str("test_labels_path", &d.test_labels_path);
    r.Str("schema_path", &d.schema_path);
    r.Double("test_fraction", &d.test_fraction);
    r.Int("folds", &d.folds, 2);
    r.Int("seed", &d.seed);
    bool format_given = false;
    for (const auto& e : s->entries) format_given = format_given || e.key == "format";
    r.Apply();
    if (!format_given && d.name == "twitter") d.format = "davidson_csv";
    if (d.format != "jigsaw_csv" && d.format != "davidson_csv") {
      Fail(ErrorKind::kConfiguration, source + ": [dataset] format '" + d.format +
                                          "' is not jigsaw_csv or davidson_csv");
    }
    if (!(d.test_fraction > 0 && d.test_fraction < 1)) {
      Fail(ErrorKind::kConfiguration, source + ": [dataset] test_fraction must lie in (0,1)");
    }
  }
  if (const auto* s = find("features")) {
    SectionReader r(source, *s);
    TokenizerKeys(&r, &cfg.tokenizer);
    r.Int("word_ngram_min", &cfg.word_tfidf.n_min, 1);
    r.Int("word_ngram_max", &cfg.word_tfidf.n_max, 1);
    r.Int("word_max_features", &cfg.word_tfidf.max_features, 1);
    r.Int("char_ngram_min", &cfg.char_tfidf.n_min, 1);
    r.Int("char_ngram_max", &cfg.char_tfidf.n_max, 1);
    r.Int("char_max_features", &cfg.char_tfidf.max_features, 1);
    size_t min_df = 1;
    bool sublinear = true;
    r.Int("min_df", &min_df, 1);
    r.Bool("sublinear_tf", &sublinear);
    r.Apply();
    for (auto* t : {&cfg.word_tfidf, &cfg.char_tfidf}) {
      t->min_df = min_df;
      t->sublinear_tf = sublinear;
    }
  }
  cfg.word_tfidf.tokenizer = cfg.tokenizer;
  cfg.char_tfidf.tokenizer = cfg.tokenizer;
  for (const auto* t : {&cfg.word_tfidf, &cfg.char_tfidf}) {
    if (t->n_min > t->n_max) Fail(ErrorKind::kConfiguration, source + ": n-gram min exceeds max");
  }

  if (const auto* s = find("embeddings")) {
    SectionReader r(source, *s);
    auto& k = cfg.embeddings.skipgram;
    r.Int("dimension", &k.dimension, 1);
    r.Int("window", &k.window, 1);
    r.Int("epochs", &k.epochs, 1);
    r.Int("negatives", &k.negatives, 1);
    r.Double("learning_rate", &k.learning_rate);
    r.Int("min_n", &k.min_n, 1);
    r.Int("max_n", &k.max_n, 1);
    r.Int("buckets", &k.buckets, 0);
    r.Int("min_count", &k.min_count, 1);
    r.Int("seed", &k.seed);
    r.Int("threads", &k.threads, 1);
    r.Str("output", &cfg.embeddings.output);
    r.Bool("write_text", &cfg.embeddings.write_text);
    r.Apply();
    try {
      k.Validate();
    } catch (const Error& e) {
      Fail(ErrorKind::kConfiguration, source + ": [embeddings] " + e.what());
    }
  }

  const SchemaKind kind = cfg.dataset.name == "twitter" ? SchemaKind::kMultiClass
                          : cfg.dataset.name == "wikipedia" ? SchemaKind::kMultiLabel
                                                            : cfg.Schema().kind;
  for (const auto& s : doc.sections) {
    if (s.name.rfind("model.", 0) != 0) continue;
    const std::string name = s.name.substr(6);
    std::string family;
    for (const auto& e : s.entries) {
      if (e.key == "family") family = e.value;
    }
    if (family.empty()) {
      Fail(ErrorKind::kConfiguration,
           source + ":" + std::to_string(s.line) + ": [" + s.name + "] needs a 'family' key");
    }
    ClassifierSpec m;
    try {
      m = ClassifierSpec::Defaults(ParseFamily(family), kind, name);
    } catch (const Error& e) {
      Fail(ErrorKind::kConfiguration, source + ": [" + s.name + "] " + e.what());
    }
    m.tfidf = m.family == Family::kLrChar ? cfg.char_tfidf : cfg.word_tfidf;
    m.tokenizer = cfg.tokenizer;
    SectionReader r(source, s);
    r.Custom("family", [](const IniEntry&) {});
    r.Custom("embedding_source", [&](const IniEntry& e) {
      try {
        m.embedding_source = ParseEmbeddingSource(e.value);
      } catch (const Error&) {
        BadValue(source, s.name, e, "trained_subword, pretrained_file or learned_from_scratch");
      }
    });
    r.Str("embedding_path", &m.embedding_path);
    r.Custom("head", [&](const IniEntry& e) {
      if (e.value == "softmax") m.head = Head::kSoftmax;
      else if (e.value == "sigmoid_per_class") m.head = Head::kSigmoidPerClass;
      else BadValue(source, s.name, e, "softmax or sigmoid_per_class");
    });
    r.Int("units", &m.units, 1);
    r.Int("attention_units", &m.attention_units, 0);
    r.Custom("conv_widths", [&](const IniEntry& e) {
      m.conv_widths.clear();
      size_t start = 0;
      while (start <= e.value.size()) {
        size_t comma = e.value.find(',', start);
        if (comma == std::string::npos) comma = e.value.size();
        const std::string item = Trim(std::string_view(e.value).substr(start, comma - start));
        char* end = nullptr;
        const long v = std::strtol(item.c_str(), &end, 10);
        if (item.empty() || *end != '\0' || v < 1) BadValue(source, s.name, e, "a list of widths");
        m.conv_widths.push_back(static_cast<size_t>(v));
        start = comma + 1;
      }
    });
    r.Int("conv_maps", &m.conv_maps, 1);
    r.Int("embed_dim", &m.embed_dim, 1);
    r.Double("spatial_dropout", &m.spatial_dropout);
    r.Double("dropout", &m.dropout);
    r.Double("learning_rate", &m.learning_rate);
    r.Int("batch_size", &m.batch_size, 1);
    r.Int("epochs", &m.epochs, 1);
    r.Int("patience", &m.patience, 1);
    r.Int("max_len", &m.max_len, 1);
    r.Int("vocab_size", &m.vocab_size, 3);
    r.Int("min_frequency", &m.min_frequency, 1);
    r.Double("l2", &m.l2);
    r.Double("tolerance", &m.tolerance);
    TokenFilterKey(&r, "token_filter", &m.tfidf.token_filter);
    r.Int("ngram_min", &m.tfidf.n_min, 1);
    r.Int("ngram_max", &m.tfidf.n_max, 1);
    r.Int("max_features", &m.tfidf.max_features, 1);
    r.Int("seed", &m.seed);
    r.Apply();
    for (const auto& prev : cfg.models) {
      if (prev.name == m.name) Fail(ErrorKind::kConfiguration, "duplicate model '" + m.name + "'");
    }
    cfg.models.push_back(std::move(m));
  }

  if (const auto* s = find("ensemble")) {
    SectionReader r(source, *s);
    auto& e = cfg.ensemble;
    r.List("models", &e.models);
    r.Int("rounds", &e.gbdt.rounds, 0);
    r.Int("max_depth", &e.gbdt.max_depth, 1);
    r.Double("learning_rate", &e.gbdt.learning_rate);
    r.Int("min_leaf", &e.gbdt.min_leaf, 1);
    r.Double("lambda", &e.gbdt.lambda);
    r.Int("seed", &e.gbdt.seed);
    r.Bool("meta_features", &e.meta_features);
    r.Str("swear_lexicon", &e.swear_lexicon);
    r.Apply();
    for (const auto& n : e.models) cfg.Model(n);
  }
  if (const auto* s = find("metrics")) {
    SectionReader r(source, *s);
    auto& m = cfg.metrics;
    r.Custom("thresholds", [&](const IniEntry& e) {
      if (e.value != "search" && e.value != "fixed") BadValue(source, s->name, e, "search or fixed");
      m.thresholds = e.value;
    });
    r.Double("fixed_threshold", &m.fixed_threshold);
    r.Custom("pairs", [&](const IniEntry& e) {
      std::vector<std::string> items;
      SectionReader tmp(source, *s);
      size_t start = 0;
      m.pairs.clear();
      while (start <= e.value.size()) {
        size_t comma = e.value.find(',', start);
        if (comma == std::string::npos) comma = e.value.size();
        const std::string item = Trim(std::string_view(e.value).substr(start, comma - start));
        const size_t colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
          BadValue(source, s->name, e, "a list of model_a:model_b pairs");
        }
        m.pairs.emplace_back(Trim(item.substr(0, colon)), Trim(item.substr(colon + 1)));
        start = comma + 1;
      }
    });
    r.Str("focus_class", &m.focus_class);
    r.Apply();
    if (!(m.fixed_threshold > 0 && m.fixed_threshold < 1)) {
      Fail(ErrorKind::kConfiguration, source + ": [metrics] fixed_threshold must lie in (0,1)");
    }
  }
  if (const auto* s = find("triage")) {
    SectionReader r(source, *s);
    auto& t = cfg.triage;
    r.Str("focal_class", &t.focal_class);
    r.Custom("kind", [&](const IniEntry& e) {
      if (e.value == "FN") t.kind = TriageKind::kFalseNegative;
      else if (e.value == "FP") t.kind = TriageKind::kFalsePositive;
      else BadValue(source, s->name, e, "FN or FP");
    });
    r.Int("sample_size", &t.sample_size, 0);
    r.Int("seed", &t.seed);
    r.Str("model", &t.model);
    r.Str("host", &t.host);
    r.Int("port", &t.port, 0);
    r.Str("token", &t.token);
    r.Str("ui_dir", &t.ui_dir);
    r.Apply();
  }
  return cfg;
}

PipelineConfig LoadConfig(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kConfiguration, "config file not found: " + path);
  }
  return ParseConfig(ReadFileToString(path), path);
}

std::string ResolveDataPath(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* root = std::getenv("TOXENS_DATA_DIR"); root && *root) {
    const fs::path candidate = fs::path(root) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

}  // namespace toxens
