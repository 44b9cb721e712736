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

#include "toxens/models.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"
#include "toxens/embeddings.h"
#include "toxens/metrics.h"

namespace toxens {

using nlohmann::json;

namespace {

constexpr const char* kFamilyNames[] = {"lr_word", "lr_char",  "cnn",
                                        "lstm",    "bilstm",   "bigru",
                                        "bigru_attention"};
constexpr const char* kSourceNames[] = {"trained_subword", "pretrained_file",
                                        "learned_from_scratch"};
// Sub-batches per step; fixed so that summation order does not depend on the
// thread count.
constexpr size_t kChunks = 4;

Encoder EncoderOf(Family f) {
  switch (f) {
    case Family::kCnn: return Encoder::kCnn;
    case Family::kLstm: return Encoder::kLstm;
    case Family::kBiLstm: return Encoder::kBiLstm;
    case Family::kBiGru: return Encoder::kBiGru;
    case Family::kBiGruAttention: return Encoder::kBiGruAttention;
    default: Fail(ErrorKind::kInternal, "linear family has no encoder");
  }
}

json TokenizerJson(const Tokenizer& t) {
  return {{"lowercase", t.lowercase},
          {"nfc", t.nfc},
          {"fold_urls", t.fold_urls},
          {"fold_mentions", t.fold_mentions},
          {"split_punctuation", t.split_punctuation}};
}

Tokenizer TokenizerFrom(const json& j) {
  Tokenizer t;
  t.lowercase = j.at("lowercase");
  t.nfc = j.at("nfc");
  t.fold_urls = j.at("fold_urls");
  t.fold_mentions = j.at("fold_mentions");
  t.split_punctuation = j.at("split_punctuation");
  return t;
}

// Mean AUC over classes with both labels present; NaN when none qualifies.
double MeanAuc(const PredictionMatrix& p, const CorpusView& view) {
  const auto gold = GoldMatrix(view);
  double sum = 0;
  size_t n = 0;
  for (size_t c = 0; c < p.cols(); ++c) {
    try {
      sum += RocAuc(p.Column(c), ColumnOf(gold, c));
      ++n;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric) throw;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

const char* FamilyName(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family ParseFamily(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kFamilyNames[i]) return static_cast<Family>(i);
  }
  Fail(ErrorKind::kConfiguration, "unknown classifier family '" + name + "'");
}

const char* EmbeddingSourceName(EmbeddingSource s) { return kSourceNames[static_cast<int>(s)]; }

EmbeddingSource ParseEmbeddingSource(const std::string& name) {
  for (int i = 0; i < 3; ++i) {
    if (name == kSourceNames[i]) return static_cast<EmbeddingSource>(i);
  }
  Fail(ErrorKind::kConfiguration, "unknown embedding source '" + name + "'");
}

bool IsLinear(Family f) { return f == Family::kLrWord || f == Family::kLrChar; }

ClassifierSpec ClassifierSpec::Defaults(Family family, SchemaKind kind, std::string name) {
  ClassifierSpec s;
  s.family = family;
  s.name = name.empty() ? FamilyName(family) : std::move(name);
  s.head = kind == SchemaKind::kMultiClass ? Head::kSoftmax : Head::kSigmoidPerClass;
  s.tfidf = family == Family::kLrChar ? TfidfConfig::CharDefaults() : TfidfConfig::WordDefaults();
  switch (family) {
    case Family::kBiLstm:
    case Family::kBiGru:
    case Family::kBiGruAttention:
      s.units = 64;
      break;
    default:
      s.units = 128;
  }
  return s;
}

void ClassifierSpec::Validate(const LabelSchema& schema) const {
  const bool softmax = head == Head::kSoftmax;
  if (softmax == schema.multi_label()) {
    Fail(ErrorKind::kConfiguration,
         std::string("head '") + (softmax ? "softmax" : "sigmoid_per_class") +
             "' does not match a " + SchemaKindName(schema.kind) + " schema");
  }
  if (name.empty()) Fail(ErrorKind::kConfiguration, "classifier spec needs a name");
  if (IsLinear(family)) {
    if (!(l2 >= 0)) Fail(ErrorKind::kConfiguration, "l2 must be non-negative");
    return;
  }
  if (units == 0 || batch_size == 0 || max_len == 0 || epochs < 1 || patience < 1) {
    Fail(ErrorKind::kConfiguration, "units, batch size, max_len, epochs and patience must be positive");
  }
  if (!(spatial_dropout >= 0 && spatial_dropout < 1) || !(dropout >= 0 && dropout < 1)) {
    Fail(ErrorKind::kConfiguration, "dropout rates must lie in [0,1)");
  }
  if (!(learning_rate > 0)) Fail(ErrorKind::kConfiguration, "learning rate must be positive");
  if (family == Family::kCnn && (conv_widths.empty() || conv_maps == 0)) {
    Fail(ErrorKind::kConfiguration, "cnn needs at least one filter width and map");
  }
  if (embedding_source != EmbeddingSource::kLearnedFromScratch && embedding_path.empty()) {
    Fail(ErrorKind::kConfiguration, "embedding source '" +
                                        std::string(EmbeddingSourceName(embedding_source)) +
                                        "' needs an embedding path");
  }
}

std::string SpecToJson(const ClassifierSpec& s) {
  json j;
  j["name"] = s.name;
  j["family"] = FamilyName(s.family);
  j["head"] = s.head == Head::kSoftmax ? "softmax" : "sigmoid_per_class";
  j["tfidf"] = {{"analyzer", s.tfidf.analyzer == Analyzer::kChar ? "char" : "word"},
                {"n_min", s.tfidf.n_min},
                {"n_max", s.tfidf.n_max},
                {"max_features", s.tfidf.max_features},
                {"min_df", s.tfidf.min_df},
                {"sublinear_tf", s.tfidf.sublinear_tf},
                {"token_filter", TokenFilterName(s.tfidf.token_filter)},
                {"tokenizer", TokenizerJson(s.tfidf.tokenizer)}};
  j["l2"] = s.l2;
  j["tolerance"] = s.tolerance;
  j["embedding_source"] = EmbeddingSourceName(s.embedding_source);
  j["embedding_path"] = s.embedding_path;
  j["embed_dim"] = s.embed_dim;
  j["units"] = s.units;
  j["attention_units"] = s.attention_units;
  j["conv_widths"] = s.conv_widths;
  j["conv_maps"] = s.conv_maps;
  j["spatial_dropout"] = s.spatial_dropout;
  j["dropout"] = s.dropout;
  j["learning_rate"] = s.learning_rate;
  j["batch_size"] = s.batch_size;
  j["epochs"] = s.epochs;
  j["patience"] = s.patience;
  j["max_len"] = s.max_len;
  j["vocab_size"] = s.vocab_size;
  j["min_frequency"] = s.min_frequency;
  j["tokenizer"] = TokenizerJson(s.tokenizer);
  j["seed"] = s.seed;
  return j.dump();
}

ClassifierSpec SpecFromJson(const std::string& text) {
  ClassifierSpec s;
  try {
    const json j = json::parse(text);
    s.name = j.at("name");
    s.family = ParseFamily(j.at("family"));
    s.head = j.at("head") == "softmax" ? Head::kSoftmax : Head::kSigmoidPerClass;
    const auto& t = j.at("tfidf");
    s.tfidf.analyzer = t.at("analyzer") == "char" ? Analyzer::kChar : Analyzer::kWord;
    s.tfidf.n_min = t.at("n_min");
    s.tfidf.n_max = t.at("n_max");
    s.tfidf.max_features = t.at("max_features");
    s.tfidf.min_df = t.at("min_df");
    s.tfidf.sublinear_tf = t.at("sublinear_tf");
    s.tfidf.token_filter = ParseTokenFilter(t.at("token_filter"));
    s.tfidf.tokenizer = TokenizerFrom(t.at("tokenizer"));
    s.l2 = j.at("l2");
    s.tolerance = j.at("tolerance");
    s.embedding_source = ParseEmbeddingSource(j.at("embedding_source"));
    s.embedding_path = j.at("embedding_path");
    s.embed_dim = j.at("embed_dim");
    s.units = j.at("units");
    s.attention_units = j.at("attention_units");
    s.conv_widths = j.at("conv_widths").get<std::vector<size_t>>();
    s.conv_maps = j.at("conv_maps");
    s.spatial_dropout = j.at("spatial_dropout");
    s.dropout = j.at("dropout");
    s.learning_rate = j.at("learning_rate");
    s.batch_size = j.at("batch_size");
    s.epochs = j.at("epochs");
    s.patience = j.at("patience");
    s.max_len = j.at("max_len");
    s.vocab_size = j.at("vocab_size");
    s.min_frequency = j.at("min_frequency");
    s.tokenizer = TokenizerFrom(j.at("tokenizer"));
    s.seed = j.at("seed");
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("classifier spec: ") + e.what());
  }
  return s;
}

// Thread count is excluded: it never changes results.
uint64_t ClassifierSpec::Hash() const { return Fnv1a64(SpecToJson(*this)); }

// ---------------------------------------------------------------------------
// Linear families.

namespace {

CsrMatrix Design(const TfidfModel& tfidf, const CorpusView& view) {
  CsrMatrix x;
  x.cols = tfidf.dim();
  for (size_t i = 0; i < view.size(); ++i) x.AppendRow(tfidf.Transform(view[i].text));
  return x;
}

void FitLinear(const ClassifierSpec& spec, const CorpusView& train, TfidfModel* tfidf,
               LogisticModel* model, double* mean_loss) {
  *tfidf = TfidfFit(train, spec.tfidf);
  const CsrMatrix x = Design(*tfidf, train);
  std::vector<std::vector<uint8_t>> labels;
  for (size_t i = 0; i < train.size(); ++i) labels.push_back(train[i].labels);
  LbfgsOptions options;
  options.relative_tolerance = spec.tolerance;
  *model = FitLogistic(x, labels, spec.head == Head::kSoftmax, spec.l2, options);
  double loss = 0;
  for (const auto& f : model->fits) loss += f.loss;
  *mean_loss = loss / static_cast<double>(train.size());
}

// ---------------------------------------------------------------------------
// Neural families.

struct EncodedView {
  std::vector<std::vector<int32_t>> ids;
  std::vector<std::vector<uint8_t>> gold;
};

EncodedView Encode(const Vocabulary& vocab, const ClassifierSpec& spec, const CorpusView& view) {
  EncodedView e;
  e.ids.resize(view.size());
  e.gold.resize(view.size());
  ParallelFor(view.size(), spec.threads, [&](size_t i) {
    e.ids[i] = EncodeSequence(vocab, spec.tokenizer.Tokenize(view[i].text), spec.max_len);
    e.gold[i] = view[i].labels;
  });
  return e;
}

// Pretrained rows for words the table knows are frozen. Other rows start from
// the subword composition when the table has buckets and stay trainable.
size_t SeedEmbeddings(const EmbeddingTable& table, const Vocabulary& vocab,
                      SequenceNet<float>* net) {
  const auto& slot = net->Slot("embedding");
  const size_t dim = slot.cols;
  size_t frozen = 0;
  for (size_t id = 2; id < vocab.size(); ++id) {
    const std::string& word = vocab.Token(static_cast<int32_t>(id));
    const bool known = table.Contains(word);
    if (!known && !table.has_subwords()) continue;
    const auto v = table.Lookup(word);
    std::copy(v.begin(), v.end(), net->params().begin() + static_cast<long>(slot.offset + id * dim));
    if (known) {
      net->trainable_rows()[id] = 0;
      ++frozen;
    }
  }
  return frozen;
}

EmbeddingTable LoadEmbeddingSource(const ClassifierSpec& spec) {
  if (!std::filesystem::exists(spec.embedding_path)) {
    Fail(ErrorKind::kConfiguration, "embedding file not found: " + spec.embedding_path);
  }
  if (spec.embedding_source == EmbeddingSource::kTrainedSubword) {
    return EmbeddingTable::Load(spec.embedding_path);
  }
  return LoadPretrained(spec.embedding_path);
}

}  // namespace

TrainedModel Fit(const ClassifierSpec& spec, const CorpusView& train,
                 const CorpusView& validation) {
  if (train.empty()) Fail(ErrorKind::kConfiguration, "fit on an empty training view");
  if (validation.empty()) Fail(ErrorKind::kConfiguration, "fit with an empty validation view");
  spec.Validate(train.schema());
  TrainedModel model;
  model.spec_ = spec;
  model.classes_ = train.schema().classes;

  if (IsLinear(spec.family)) {
    TfidfModel tfidf;
    LogisticModel lr;
    double loss = 0;
    FitLinear(spec, train, &tfidf, &lr, &loss);
    model.tfidf_ = std::move(tfidf);
    model.linear_ = std::move(lr);
    for (double w : model.linear_->params) {
      if (!std::isfinite(w)) Fail(ErrorKind::kTraining, "non-finite weight after L-BFGS");
    }
    model.log_.push_back({1, loss, MeanAuc(model.Predict(validation), validation)});
    return model;
  }

  // Vocabulary from training text only.
  std::vector<std::vector<std::string>> docs(train.size());
  ParallelFor(train.size(), spec.threads,
              [&](size_t i) { docs[i] = spec.tokenizer.Tokenize(train[i].text); });
  model.vocab_ = Vocabulary::Build(docs, spec.vocab_size, spec.min_frequency);
  docs.clear();

  std::optional<EmbeddingTable> table;
  if (spec.embedding_source != EmbeddingSource::kLearnedFromScratch) {
    table = LoadEmbeddingSource(spec);
  }
  NetConfig cfg;
  cfg.encoder = EncoderOf(spec.family);
  cfg.vocab = model.vocab_.size();
  cfg.embed = table ? static_cast<size_t>(table->dimension()) : spec.embed_dim;
  cfg.hidden = spec.units;
  cfg.attention = spec.attention_units;
  cfg.conv_widths = spec.conv_widths;
  cfg.conv_maps = spec.conv_maps;
  cfg.classes = model.classes_.size();
  cfg.softmax = spec.head == Head::kSoftmax;
  cfg.spatial_dropout = spec.spatial_dropout;
  cfg.dropout = spec.dropout;
  auto net = std::make_shared<SequenceNet<float>>(cfg);
  CounterRng init_rng(spec.seed, 0x1417);
  net->Initialize(init_rng);
  if (table) SeedEmbeddings(*table, model.vocab_, net.get());
  model.net_ = net;

  const EncodedView data = Encode(model.vocab_, spec, train);
  const auto& emb = net->Slot("embedding");
  const size_t dense_begin = emb.offset + emb.size();
  std::vector<Gradients<float>> grads(kChunks);
  for (auto& g : grads) g.Reset(net->num_params(), cfg.vocab);
  Gradients<float> total;
  total.Reset(net->num_params(), cfg.vocab);
  AdamOptimizer<float> adam(net->num_params(), spec.learning_rate);

  std::vector<size_t> order(train.size());
  double best_metric = -std::numeric_limits<double>::infinity();
  std::vector<float> best_params = net->params();
  int since_best = 0;
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    CounterRng shuffle_rng(spec.seed, 0x5100 + static_cast<uint64_t>(epoch));
    Shuffle(order, shuffle_rng);
    double epoch_loss = 0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += spec.batch_size, ++batch_index) {
      const size_t end = std::min(order.size(), start + spec.batch_size);
      const size_t n = end - start;
      std::vector<double> chunk_loss(kChunks, 0.0);
      ParallelFor(kChunks, spec.threads, [&](size_t c) {
        Gradients<float>& g = grads[c];
        for (size_t k = start + c; k < end; k += kChunks) {
          const size_t s = order[k];
          CounterRng rng(spec.seed, (static_cast<uint64_t>(epoch) << 40) ^ (k + 1));
          chunk_loss[c] += static_cast<double>(
              net->LossAndGradient(data.ids[s], data.gold[s], true, &rng, &g));
        }
      });
      double loss = 0;
      for (double l : chunk_loss) loss += l;
      if (!std::isfinite(loss)) {
        Fail(ErrorKind::kTraining, "loss is NaN at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index));
      }
      epoch_loss += loss;
      // Reduce chunk gradients in fixed order.
      for (size_t c = 0; c < kChunks; ++c) {
        auto& g = grads[c];
        for (size_t i = dense_begin; i < g.values.size(); ++i) total.values[i] += g.values[i];
        for (int32_t r : g.touched_rows) {
          const size_t ur = static_cast<size_t>(r);
          if (!total.row_touched[ur]) {
            total.row_touched[ur] = 1;
            total.touched_rows.push_back(r);
          }
          float* dst = total.values.data() + emb.offset + ur * emb.cols;
          const float* src = g.values.data() + emb.offset + ur * emb.cols;
          for (size_t d = 0; d < emb.cols; ++d) dst[d] += src[d];
        }
        g.Clear(emb.offset, emb.cols);
      }
      std::sort(total.touched_rows.begin(), total.touched_rows.end());
      const double scale = 1.0 / static_cast<double>(n);
      adam.NextStep();
      adam.StepDense(net->params(), total.values, dense_begin, net->num_params(), scale);
      adam.StepRows(net->params(), total.values, emb.offset, emb.cols, total.touched_rows,
                    net->trainable_rows(), scale);
      total.Clear(emb.offset, emb.cols);
    }
    for (float w : net->params()) {
      if (!std::isfinite(w)) {
        Fail(ErrorKind::kTraining, "non-finite parameter after epoch " + std::to_string(epoch));
      }
    }
    const auto val = model.Predict(validation);
    const double auc = MeanAuc(val, validation);
    double metric = auc;
    if (std::isnan(auc)) {
      // No class has both labels in the validation view: fall back to loss.
      const auto vdata = Encode(model.vocab_, spec, validation);
      double vloss = 0;
      for (size_t i = 0; i < vdata.ids.size(); ++i) {
        vloss += static_cast<double>(net->Loss(vdata.ids[i], vdata.gold[i]));
      }
      metric = -vloss;
    }
    model.log_.push_back({epoch, epoch_loss / static_cast<double>(order.size()), auc});
    if (metric > best_metric) {
      best_metric = metric;
      best_params = net->params();
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  net->params() = std::move(best_params);
  return model;
}

PredictionMatrix TrainedModel::Predict(const CorpusView& view) const {
  PredictionMatrix m;
  m.classes = classes_;
  m.producer = spec_.name;
  m.ids.resize(view.size());
  m.scores.assign(view.size() * classes_.size(), 0.0);
  ParallelFor(view.size(), spec_.threads, [&](size_t i) {
    m.ids[i] = view[i].id;
    const auto p = PredictText(view[i].text);
    std::copy(p.begin(), p.end(), m.scores.begin() + static_cast<long>(i * classes_.size()));
  });
  return m;
}

std::vector<double> TrainedModel::PredictText(const std::string& text) const {
  if (linear_) return linear_->Predict(tfidf_->Transform(text));
  if (!net_) Fail(ErrorKind::kInternal, "predict on an untrained model");
  const auto ids = EncodeSequence(vocab_, spec_.tokenizer.Tokenize(text), spec_.max_len);
  const auto p = net_->Predict(ids);
  std::vector<double> out(p.begin(), p.end());
  if (spec_.head == Head::kSoftmax) {
    // Renormalize in double so rows sum to 1 well within tolerance.
    double s = 0;
    for (double v : out) s += v;
    for (double& v : out) v /= s;
  }
  return out;
}

PredictionMatrix Predict(const TrainedModel& model, const CorpusView& view) {
  return model.Predict(view);
}

void TrainedModel::Save(const std::string& path) const {
  BinaryWriter w("TXMD", 1, spec_.Hash());
  w.PutString(SpecToJson(spec_));
  w.Put<uint64_t>(classes_.size());
  for (const auto& c : classes_) w.PutString(c);
  w.Put<uint64_t>(log_.size());
  for (const auto& e : log_) {
    w.Put<int32_t>(e.epoch);
    w.Put<double>(e.train_loss);
    w.Put<double>(e.validation_auc);
  }
  w.Put<uint8_t>(linear_ ? 1 : 0);
  if (linear_) {
    w.PutString(tfidf_->ToBytes());
    w.Put<uint8_t>(linear_->multinomial ? 1 : 0);
    w.Put<uint64_t>(linear_->classes);
    w.Put<uint64_t>(linear_->cols);
    w.PutVector(linear_->params);
  } else {
    w.Put<uint64_t>(vocab_.size() - 2);
    for (size_t i = 2; i < vocab_.size(); ++i) w.PutString(vocab_.Token(static_cast<int32_t>(i)));
    const auto& c = net_->config();
    w.Put<uint64_t>(c.embed);
    w.PutVector(net_->trainable_rows());
    w.PutVector(net_->params());
  }
  w.WriteFile(path);
}

TrainedModel TrainedModel::Load(const std::string& path, uint64_t expected_spec_hash) {
  auto r = BinaryReader::FromFile(path, "TXMD", 1, expected_spec_hash);
  TrainedModel m;
  m.spec_ = SpecFromJson(r.GetString());
  if (m.spec_.Hash() != r.config_hash()) Fail(ErrorKind::kParse, "model spec hash mismatch");
  const auto nc = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nc; ++i) m.classes_.push_back(r.GetString());
  const auto nl = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nl; ++i) {
    EpochLog e;
    e.epoch = r.Get<int32_t>();
    e.train_loss = r.Get<double>();
    e.validation_auc = r.Get<double>();
    m.log_.push_back(e);
  }
  if (r.Get<uint8_t>()) {
    m.tfidf_ = TfidfModel::FromBytes(r.GetString(), m.spec_.tfidf);
    LogisticModel lr;
    lr.multinomial = r.Get<uint8_t>() != 0;
    lr.classes = r.Get<uint64_t>();
    lr.cols = r.Get<uint64_t>();
    lr.params = r.GetVector<double>();
    if (lr.params.size() != lr.classes * (lr.cols + 1)) {
      Fail(ErrorKind::kParse, "model file has inconsistent linear weights");
    }
    m.linear_ = std::move(lr);
  } else {
    const auto nv = r.Get<uint64_t>();
    std::vector<std::string> tokens;
    for (uint64_t i = 0; i < nv; ++i) tokens.push_back(r.GetString());
    m.vocab_ = Vocabulary::FromTokens(tokens);
    NetConfig cfg;
    cfg.encoder = EncoderOf(m.spec_.family);
    cfg.vocab = m.vocab_.size();
    cfg.embed = r.Get<uint64_t>();
    cfg.hidden = m.spec_.units;
    cfg.attention = m.spec_.attention_units;
    cfg.conv_widths = m.spec_.conv_widths;
    cfg.conv_maps = m.spec_.conv_maps;
    cfg.classes = m.classes_.size();
    cfg.softmax = m.spec_.head == Head::kSoftmax;
    cfg.spatial_dropout = m.spec_.spatial_dropout;
    cfg.dropout = m.spec_.dropout;
    auto net = std::make_shared<SequenceNet<float>>(cfg);
    net->trainable_rows() = r.GetVector<uint8_t>();
    auto params = r.GetVector<float>();
    if (params.size() != net->num_params() || net->trainable_rows().size() != cfg.vocab) {
      Fail(ErrorKind::kParse, "model file has inconsistent network weights");
    }
    net->params() = std::move(params);
    m.net_ = net;
  }
  if (!r.AtEnd()) Fail(ErrorKind::kParse, "trailing bytes in model file");
  return m;
}

// ---------------------------------------------------------------------------
// Gradient check.

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

constexpr double kStep = 1e-5;

void Track(GradientCheckResult* res, double err, const std::string& tensor) {
  ++res->parameters_checked;
  if (err > res->max_relative_error) {
    res->max_relative_error = err;
    res->worst_tensor = tensor;
  }
}

GradientCheckResult CheckLinear(const ClassifierSpec& spec, uint64_t seed) {
  CounterRng rng(seed, 0x6C72);
  const size_t rows = 4, cols = 6, classes = 3;
  CsrMatrix x;
  x.cols = cols;
  for (size_t r = 0; r < rows; ++r) {
    SparseVector v;
    for (uint32_t c = 0; c < cols; ++c) {
      if (rng.Bernoulli(0.6)) v.entries.push_back({c, rng.Uniform(0.1, 1.0)});
    }
    x.AppendRow(v);
  }
  GradientCheckResult res;
  const double l2 = spec.l2 > 0 ? spec.l2 : 0.5;
  auto check = [&](auto objective, std::vector<double> params) {
    std::vector<double> g, scratch;
    objective(params, &g);
    for (size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + kStep;
      const double up = objective(params, &scratch);
      params[i] = keep - kStep;
      const double down = objective(params, &scratch);
      params[i] = keep;
      Track(&res, RelativeError(g[i], (up - down) / (2 * kStep)), i < cols * classes ? "w" : "b");
    }
  };
  if (spec.head == Head::kSoftmax) {
    std::vector<int> y(rows);
    for (auto& v : y) v = static_cast<int>(rng.NextBelow(classes));
    std::vector<double> p(classes * (cols + 1));
    for (auto& v : p) v = rng.Uniform(-0.5, 0.5);
    check([&](const std::vector<double>& q, std::vector<double>* g) {
      return MultinomialLogisticObjective(x, y, classes, l2, q, g);
    }, p);
  } else {
    for (size_t c = 0; c < classes; ++c) {
      std::vector<uint8_t> y(rows);
      for (auto& v : y) v = rng.Bernoulli(0.5) ? 1 : 0;
      std::vector<double> p(cols + 1);
      for (auto& v : p) v = rng.Uniform(-0.5, 0.5);
      check([&](const std::vector<double>& q, std::vector<double>* g) {
        return BinaryLogisticObjective(x, y, l2, q, g);
      }, p);
    }
  }
  return res;
}

// True when every conv filter has a unique, clearly non-zero maximum window
// on every sample, so max-pool and ReLU are differentiable with margin.
bool ConvTieFree(const SequenceNet<double>& net, const std::vector<std::vector<int32_t>>& batch,
                 double margin) {
  const auto& cfg = net.config();
  const auto& p = net.params();
  const auto& emb = net.Slot("embedding");
  const size_t wmax = *std::max_element(cfg.conv_widths.begin(), cfg.conv_widths.end());
  for (const auto& ids : batch) {
    size_t len = 0;
    while (len < ids.size() && ids[len] != kPadId) ++len;
    if (len == 0) len = 1;
    const size_t padded = std::max(len, wmax);
    for (size_t w : cfg.conv_widths) {
      const auto& ws = net.Slot("conv" + std::to_string(w) + ".w");
      const auto& bs = net.Slot("conv" + std::to_string(w) + ".b");
      for (size_t m = 0; m < cfg.conv_maps; ++m) {
        std::vector<double> acts;
        for (size_t t = 0; t + w <= padded; ++t) {
          double s = p[bs.offset + m];
          for (size_t k = 0; k < w; ++k) {
            if (t + k >= len) continue;
            const int32_t id = ids[t + k] == kPadId ? kUnknownId : ids[t + k];
            for (size_t e = 0; e < cfg.embed; ++e) {
              s += p[ws.offset + m * ws.cols + k * cfg.embed + e] *
                   p[emb.offset + static_cast<size_t>(id) * cfg.embed + e];
            }
          }
          if (std::abs(s) < margin) return false;
          acts.push_back(std::max(s, 0.0));
        }
        std::sort(acts.rbegin(), acts.rend());
        if (acts.size() > 1 && acts[0] > 0 && acts[0] - acts[1] < margin) return false;
      }
    }
  }
  return true;
}

GradientCheckResult CheckNet(const ClassifierSpec& spec, uint64_t seed) {
  NetConfig cfg;
  cfg.encoder = EncoderOf(spec.family);
  cfg.vocab = 10;
  cfg.embed = 4;
  cfg.hidden = 3;
  cfg.attention = 3;
  cfg.conv_widths = {2, 3};
  cfg.conv_maps = 2;
  cfg.classes = 3;
  cfg.softmax = spec.head == Head::kSoftmax;
  cfg.spatial_dropout = 0;
  cfg.dropout = 0;
  SequenceNet<double> net(cfg);
  const std::vector<size_t> lengths{6, 4, 2};
  std::vector<std::vector<int32_t>> batch;
  std::vector<std::vector<uint8_t>> gold;
  for (uint64_t attempt = 0;; ++attempt) {
    CounterRng rng(seed + attempt, 0x6763);
    net.Initialize(rng);
    // Scale weights up so activations leave the near-linear regime.
    for (auto& v : net.params()) v *= 2.0;
    batch.clear();
    gold.clear();
    for (size_t len : lengths) {
      std::vector<int32_t> ids(6, kPadId);
      for (size_t t = 0; t < len; ++t) ids[t] = static_cast<int32_t>(1 + rng.NextBelow(9));
      batch.push_back(ids);
      std::vector<uint8_t> g(cfg.classes, 0);
      if (cfg.softmax) {
        g[rng.NextBelow(cfg.classes)] = 1;
      } else {
        for (auto& v : g) v = rng.Bernoulli(0.5) ? 1 : 0;
      }
      gold.push_back(g);
    }
    if (cfg.encoder != Encoder::kCnn || ConvTieFree(net, batch, 1e-3)) break;
    if (attempt > 1000) Fail(ErrorKind::kInternal, "no tie-free conv instance found");
  }
  Gradients<double> g;
  g.Reset(net.num_params(), cfg.vocab);
  for (size_t i = 0; i < batch.size(); ++i) {
    net.LossAndGradient(batch[i], gold[i], false, nullptr, &g);
  }
  auto total_loss = [&]() {
    double l = 0;
    for (size_t i = 0; i < batch.size(); ++i) l += net.Loss(batch[i], gold[i]);
    return l;
  };
  GradientCheckResult res;
  auto& p = net.params();
  for (const auto& slot : net.slots()) {
    for (size_t i = slot.offset; i < slot.offset + slot.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + kStep;
      const double up = total_loss();
      p[i] = keep - kStep;
      const double down = total_loss();
      p[i] = keep;
      Track(&res, RelativeError(g.values[i], (up - down) / (2 * kStep)), slot.name);
    }
  }
  return res;
}

}  // namespace

GradientCheckResult GradientCheck(const ClassifierSpec& spec, uint64_t seed) {
  return IsLinear(spec.family) ? CheckLinear(spec, seed) : CheckNet(spec, seed);
}

}  // namespace toxens
