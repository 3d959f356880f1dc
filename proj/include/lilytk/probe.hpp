#pragma once

// Linear probing of frozen embeddings: ingestion, pooling, stratified CV,
// standardization, softmax regression, and report formatting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lilytk/error.hpp"
#include "lilytk/tokenizer.hpp"
#include "lilytk/util.hpp"

namespace lilytk::probe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EmbeddingRecord {
  std::string file_id;
  int layer = 0;
  std::size_t chunk_index = 0;
  std::size_t token_count = 0;
  std::vector<double> vector;
};

inline std::string to_jsonl(const EmbeddingRecord& r) {
  nlohmann::ordered_json j;
  j["file_id"] = r.file_id;
  j["layer"] = r.layer;
  j["chunk_index"] = r.chunk_index;
  j["token_count"] = r.token_count;
  j["vector"] = r.vector;
  return j.dump();
}

/// One JSON object per line; blank lines are ignored. Every record must have the
/// same dimension and chunk indices per (file_id, layer) must be 0..n-1.
inline std::vector<EmbeddingRecord> parse_embeddings(std::string_view text) {
  std::vector<EmbeddingRecord> out;
  std::optional<std::size_t> dim;
  std::size_t lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto bad = [&](const std::string& why) { return Error(Errc::MalformedRecord, "line " + std::to_string(lineno) + ": " + why, lineno); };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw bad("not valid JSON");
    }
    if (!j.is_object()) throw bad("not an object");
    for (const char* k : {"file_id", "layer", "chunk_index", "token_count", "vector"})
      if (!j.contains(k)) throw bad(std::string("missing '") + k + "'");
    if (!j["file_id"].is_string() || j["file_id"].get<std::string>().empty()) throw bad("file_id must be a non-empty string");
    if (!j["layer"].is_number_integer() || j["layer"].get<long long>() < 0) throw bad("layer must be a non-negative integer");
    if (!j["chunk_index"].is_number_integer() || j["chunk_index"].get<long long>() < 0)
      throw bad("chunk_index must be a non-negative integer");
    if (!j["token_count"].is_number_integer() || j["token_count"].get<long long>() < 0)
      throw bad("token_count must be a non-negative integer");
    if (!j["vector"].is_array() || j["vector"].empty()) throw bad("vector must be a non-empty array");
    EmbeddingRecord r;
    r.file_id = j["file_id"];
    r.layer = j["layer"];
    r.chunk_index = j["chunk_index"];
    r.token_count = j["token_count"];
    r.vector.reserve(j["vector"].size());
    for (const auto& v : j["vector"]) {
      if (!v.is_number()) throw bad("vector entries must be numbers");
      double x = v.get<double>();
      if (!std::isfinite(x)) throw bad("non-finite vector entry");
      r.vector.push_back(x);
    }
    if (dim && *dim != r.vector.size())
      throw Error(Errc::DimensionMismatch,
                  "line " + std::to_string(lineno) + ": dimension " + std::to_string(r.vector.size()) + ", expected " +
                      std::to_string(*dim),
                  lineno);
    dim = r.vector.size();
    out.push_back(std::move(r));
  }
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> chunks;
  for (const auto& r : out) chunks[{r.file_id, r.layer}].push_back(r.chunk_index);
  for (auto& [key, idx] : chunks) {
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] != i)
        throw Error(Errc::MalformedRecord, "chunk indices of " + key.first + " layer " + std::to_string(key.second) +
                                               " are not contiguous from 0");
  }
  return out;
}

inline std::vector<EmbeddingRecord> load_embeddings(const fs::path& path) { return parse_embeddings(read_file(path)); }

/// Token-count-weighted mean of chunk vectors (plain mean if every count is zero).
inline VectorXd pool_file_embedding(const std::vector<const EmbeddingRecord*>& records) {
  if (records.empty()) throw Error(Errc::NoRecords, "no chunk records to pool");
  const auto d = records.front()->vector.size();
  VectorXd sum = VectorXd::Zero(static_cast<Eigen::Index>(d));
  double weight = 0;
  for (const auto* r : records) {
    if (r->vector.size() != d) throw Error(Errc::DimensionMismatch, "chunk vectors differ in dimension");
    sum += static_cast<double>(r->token_count) * Eigen::Map<const VectorXd>(r->vector.data(), static_cast<Eigen::Index>(d));
    weight += static_cast<double>(r->token_count);
  }
  if (weight > 0) return sum / weight;
  sum.setZero();
  for (const auto* r : records) sum += Eigen::Map<const VectorXd>(r->vector.data(), static_cast<Eigen::Index>(d));
  return sum / static_cast<double>(records.size());
}

inline VectorXd pool_file_embedding(const std::vector<EmbeddingRecord>& records) {
  std::vector<const EmbeddingRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  return pool_file_embedding(ptrs);
}

// --- labels and datasets --------------------------------------------------

struct LabelRow {
  std::string file_id;
  std::string task;
  std::string label;
};

/// CSV `file_id,task,label`; a leading header row with those names is skipped.
inline std::vector<LabelRow> parse_labels(std::string_view text) {
  std::vector<LabelRow> out;
  std::size_t lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      f.emplace_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
      throw Error(Errc::MalformedRecord, "labels line " + std::to_string(lineno) + ": expected file_id,task,label", lineno);
    if (out.empty() && lineno == 1 && f[0] == "file_id" && f[1] == "task" && f[2] == "label") continue;
    out.push_back(LabelRow{f[0], f[1], f[2]});
  }
  return out;
}

inline std::vector<LabelRow> load_labels(const fs::path& path) { return parse_labels(read_file(path)); }

struct ClassFilter {
  std::vector<std::string> classes;  // retained, sorted
  std::vector<std::size_t> kept;     // indices into the input, in input order
};

inline ClassFilter filter_classes(const std::vector<std::string>& labels, std::size_t min_count = 10) {
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  ClassFilter f;
  for (const auto& [c, n] : counts)
    if (n >= min_count) f.classes.push_back(c);
  if (f.classes.empty()) throw Error(Errc::NoClassesRemain, "no class has at least " + std::to_string(min_count) + " samples");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (counts[labels[i]] >= min_count) f.kept.push_back(i);
  return f;
}

struct ProbeDataset {
  MatrixXd X;  // n x d
  std::vector<int> y;
  std::vector<std::string> class_names;
  std::vector<std::string> file_ids;
};

/// Fold index per sample. Each class is shuffled and dealt round-robin, continuing
/// from where the previous class stopped, so per-class fold counts differ by at most 1.
inline std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidArgument, "k must be at least 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<int> fold(y.size(), -1);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& [c, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(k))
      throw Error(Errc::ClassSmallerThanK, "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                               " samples, fewer than k=" + std::to_string(k));
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    offset = (offset + idx.size()) % static_cast<std::size_t>(k);
  }
  return fold;
}

struct Standardizer {
  VectorXd mean;
  VectorXd std;

  static Standardizer fit(const MatrixXd& X) {
    if (X.rows() < 2) throw Error(Errc::TooFewSamples, "standardizer needs at least 2 samples");
    Standardizer s;
    s.mean = X.colwise().mean().transpose();
    MatrixXd centered = X.rowwise() - s.mean.transpose();
    s.std = (centered.array().square().colwise().sum() / static_cast<double>(X.rows())).sqrt().transpose();
    for (Eigen::Index j = 0; j < s.std.size(); ++j)
      if (!(s.std(j) > 1e-12)) s.std(j) = 1.0;
    return s;
  }

  MatrixXd apply(const MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
  }
};

// --- softmax regression ---------------------------------------------------

struct TrainConfig {
  int epochs = 200;
  double step_size = 0.1;
  double l2_penalty = 1e-4;
  std::uint64_t seed = 0;
};

struct LinearProbe {
  MatrixXd W;  // C x d
  VectorXd b;  // C
  bool trained = false;
  TrainConfig config;
  std::vector<double> loss_history;  // loss before each epoch, then the final loss

  int predict(const VectorXd& x) const {
    VectorXd s = W * x + b;
    Eigen::Index arg;
    s.maxCoeff(&arg);
    return static_cast<int>(arg);
  }

  std::vector<int> predict(const MatrixXd& X) const {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(VectorXd(X.row(i).transpose()));
    return out;
  }
};

namespace detail {

inline MatrixXd softmax_rows(const MatrixXd& S) {
  MatrixXd P = S.colwise() - S.rowwise().maxCoeff();
  P = P.array().exp();
  P.array().colwise() /= P.rowwise().sum().array();
  return P;
}

}  // namespace detail

/// Mean softmax cross-entropy plus (l2/2)·||W||².
inline double probe_loss(const MatrixXd& W, const VectorXd& b, const MatrixXd& X, const std::vector<int>& y, double l2) {
  MatrixXd S = (X * W.transpose()).rowwise() + b.transpose();
  VectorXd mx = S.rowwise().maxCoeff();
  double loss = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double lse = mx(i) + std::log((S.row(i).array() - mx(i)).exp().sum());
    loss += lse - S(i, y[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(X.rows()) + 0.5 * l2 * W.squaredNorm();
}

inline std::pair<MatrixXd, VectorXd> probe_gradient(const MatrixXd& W, const VectorXd& b, const MatrixXd& X,
                                                    const std::vector<int>& y, double l2) {
  MatrixXd P = detail::softmax_rows((X * W.transpose()).rowwise() + b.transpose());
  for (Eigen::Index i = 0; i < X.rows(); ++i) P(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  const double n = static_cast<double>(X.rows());
  MatrixXd gW = P.transpose() * X / n + l2 * W;
  VectorXd gb = P.colwise().sum().transpose() / n;
  return {gW, gb};
}

/// Full-batch gradient descent from zero weights. A step that would raise the
/// loss is halved until it does not, so the loss history never increases.
inline LinearProbe train_linear_probe(const MatrixXd& X, const std::vector<int>& y, int n_classes,
                                      const TrainConfig& cfg = {}) {
  if (X.rows() == 0 || static_cast<std::size_t>(X.rows()) != y.size())
    throw Error(Errc::InvalidArgument, "X and y must be non-empty and the same length");
  if (std::set<int>(y.begin(), y.end()).size() < 2) throw Error(Errc::SingleClass, "training data has a single class");
  for (int c : y)
    if (c < 0 || c >= n_classes) throw Error(Errc::InvalidArgument, "label out of range");
  LinearProbe p;
  p.config = cfg;
  p.W = MatrixXd::Zero(n_classes, X.cols());
  p.b = VectorXd::Zero(n_classes);
  double loss = probe_loss(p.W, p.b, X, y, cfg.l2_penalty);
  for (int e = 0; e < cfg.epochs; ++e) {
    if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(e));
    p.loss_history.push_back(loss);
    auto [gW, gb] = probe_gradient(p.W, p.b, X, y, cfg.l2_penalty);
    double eta = cfg.step_size;
    for (int tries = 0; tries < 40; ++tries, eta *= 0.5) {
      MatrixXd W2 = p.W - eta * gW;
      VectorXd b2 = p.b - eta * gb;
      double l2 = probe_loss(W2, b2, X, y, cfg.l2_penalty);
      if (std::isfinite(l2) && l2 <= loss) {
        p.W = std::move(W2);
        p.b = std::move(b2);
        loss = l2;
        break;
      }
    }
  }
  if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "final loss is non-finite");
  p.loss_history.push_back(loss);
  p.trained = true;
  return p;
}

struct Metrics {
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Macro averages run over classes that occur as a true or predicted label;
/// a class never predicted has precision 0.
inline Metrics metrics_from_predictions(const std::vector<int>& y, const std::vector<int>& pred, int n_classes) {
  if (y.empty()) throw Error(Errc::EmptyTestSet, "no test samples");
  Metrics m;
  m.confusion.assign(static_cast<std::size_t>(n_classes), std::vector<std::size_t>(static_cast<std::size_t>(n_classes), 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++m.confusion[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(pred[i])];
    correct += y[i] == pred[i];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  std::size_t n_present = 0;
  for (int c = 0; c < n_classes; ++c) {
    std::size_t tp = m.confusion[c][c], true_c = 0, pred_c = 0;
    for (int k = 0; k < n_classes; ++k) {
      true_c += m.confusion[c][k];
      pred_c += m.confusion[k][c];
    }
    if (true_c == 0 && pred_c == 0) continue;
    ++n_present;
    if (pred_c) m.macro_precision += static_cast<double>(tp) / static_cast<double>(pred_c);
    if (true_c) m.macro_recall += static_cast<double>(tp) / static_cast<double>(true_c);
  }
  m.macro_precision /= static_cast<double>(n_present);
  m.macro_recall /= static_cast<double>(n_present);
  return m;
}

inline Metrics evaluate(const LinearProbe& p, const MatrixXd& X, const std::vector<int>& y) {
  if (X.rows() == 0) throw Error(Errc::EmptyTestSet, "no test samples");
  return metrics_from_predictions(y, p.predict(X), static_cast<int>(p.W.rows()));
}

struct FoldOutcome {
  Metrics metrics;
  Standardizer standardizer;
  LinearProbe probe;
};

/// Fits standardizer and probe on the training fold only, then scores the test fold.
inline FoldOutcome run_fold(const ProbeDataset& ds, const std::vector<int>& folds, int test_fold, const TrainConfig& cfg) {
  std::vector<Eigen::Index> train, test;
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == test_fold ? test : train).push_back(static_cast<Eigen::Index>(i));
  MatrixXd Xtr = ds.X(train, Eigen::all), Xte = ds.X(test, Eigen::all);
  std::vector<int> ytr, yte;
  for (auto i : train) ytr.push_back(ds.y[static_cast<std::size_t>(i)]);
  for (auto i : test) yte.push_back(ds.y[static_cast<std::size_t>(i)]);
  FoldOutcome o;
  o.standardizer = Standardizer::fit(Xtr);
  o.probe = train_linear_probe(o.standardizer.apply(Xtr), ytr, static_cast<int>(ds.class_names.size()), cfg);
  o.metrics = evaluate(o.probe, o.standardizer.apply(Xte), yte);
  return o;
}

struct MeanStd {
  double mean = 0;
  double std = 0;  // population
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

struct CvResult {
  MeanStd accuracy, macro_precision, macro_recall;
  std::vector<Metrics> folds;
  std::vector<std::vector<std::size_t>> confusion;  // summed over folds
};

inline CvResult cross_validate(const ProbeDataset& ds, int k, std::uint64_t seed, const TrainConfig& cfg = {}) {
  auto folds = stratified_folds(ds.y, k, seed);
  CvResult r;
  std::vector<double> acc, prec, rec;
  const auto C = ds.class_names.size();
  r.confusion.assign(C, std::vector<std::size_t>(C, 0));
  for (int f = 0; f < k; ++f) {
    auto o = run_fold(ds, folds, f, cfg);
    acc.push_back(o.metrics.accuracy);
    prec.push_back(o.metrics.macro_precision);
    rec.push_back(o.metrics.macro_recall);
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = 0; b < C; ++b) r.confusion[a][b] += o.metrics.confusion[a][b];
    r.folds.push_back(std::move(o.metrics));
  }
  r.accuracy = mean_std(acc);
  r.macro_precision = mean_std(prec);
  r.macro_recall = mean_std(rec);
  return r;
}

// --- end-to-end harness ---------------------------------------------------

struct ProbeCell {
  std::string task;
  int layer = 0;
  std::string model;
  std::size_t n_samples = 0;
  std::vector<std::string> class_names;
  CvResult cv;
};

struct ProbeReport {
  std::vector<ProbeCell> cells;  // sorted by (task, layer)
  std::vector<int> layers;
  std::vector<std::string> tasks;
  std::vector<std::string> warnings;
};

struct ProbeOptions {
  std::vector<int> layers;  // empty: every layer present
  int k = 5;
  std::uint64_t seed = 0;
  std::size_t min_count = 10;
  std::string model = "model";
  TrainConfig train;
};

/// Builds the pooled dataset of one (task, layer) pair.
inline ProbeDataset build_dataset(const std::vector<EmbeddingRecord>& records, const std::vector<LabelRow>& labels,
                                  const std::string& task, int layer, std::size_t min_count,
                                  std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, std::vector<const EmbeddingRecord*>> by_file;
  for (const auto& r : records)
    if (r.layer == layer) by_file[r.file_id].push_back(&r);
  std::map<std::string, std::string> label_of;
  for (const auto& l : labels) {
    if (l.task != task) continue;
    auto [it, fresh] = label_of.emplace(l.file_id, l.label);
    if (!fresh && it->second != l.label)
      throw Error(Errc::MalformedRecord, "conflicting labels for " + l.file_id + " in task " + task);
  }
  std::vector<std::string> ids, y_names;
  for (const auto& [file, lab] : label_of) {
    if (!by_file.count(file)) {
      if (warnings) warnings->push_back(task + ": no layer-" + std::to_string(layer) + " embedding for " + file);
      continue;
    }
    ids.push_back(file);
    y_names.push_back(lab);
  }
  auto filt = filter_classes(y_names, min_count);
  ProbeDataset ds;
  ds.class_names = filt.classes;
  std::map<std::string, int> class_idx;
  for (std::size_t c = 0; c < filt.classes.size(); ++c) class_idx[filt.classes[c]] = static_cast<int>(c);
  const auto d = static_cast<Eigen::Index>(records.front().vector.size());
  ds.X.resize(static_cast<Eigen::Index>(filt.kept.size()), d);
  for (std::size_t r = 0; r < filt.kept.size(); ++r) {
    auto i = filt.kept[r];
    auto recs = by_file.at(ids[i]);
    std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->chunk_index < b->chunk_index; });
    ds.X.row(static_cast<Eigen::Index>(r)) = pool_file_embedding(recs).transpose();
    ds.y.push_back(class_idx.at(y_names[i]));
    ds.file_ids.push_back(ids[i]);
  }
  return ds;
}

inline ProbeReport run_probe(const std::vector<EmbeddingRecord>& records, const std::vector<LabelRow>& labels,
                             const ProbeOptions& opt) {
  if (opt.k < 2) throw Error(Errc::InvalidArgument, "k must be at least 2");
  if (records.empty()) throw Error(Errc::NoRecords, "no embedding records");
  if (labels.empty()) throw Error(Errc::NoRecords, "no labels");
  ProbeReport rep;
  std::set<int> present;
  for (const auto& r : records) present.insert(r.layer);
  if (opt.layers.empty()) {
    rep.layers.assign(present.begin(), present.end());
  } else {
    rep.layers = opt.layers;
    std::sort(rep.layers.begin(), rep.layers.end());
    rep.layers.erase(std::unique(rep.layers.begin(), rep.layers.end()), rep.layers.end());
    for (int l : rep.layers)
      if (!present.count(l)) throw Error(Errc::NoRecords, "no embeddings for layer " + std::to_string(l));
  }
  std::set<std::string> tasks;
  for (const auto& l : labels) tasks.insert(l.task);
  rep.tasks.assign(tasks.begin(), tasks.end());
  for (const auto& task : rep.tasks) {
    for (int layer : rep.layers) {
      ProbeCell cell;
      cell.task = task;
      cell.layer = layer;
      cell.model = opt.model;
      auto ds = build_dataset(records, labels, task, layer, opt.min_count, &rep.warnings);
      cell.n_samples = ds.y.size();
      cell.class_names = ds.class_names;
      if (ds.class_names.size() < 2) throw Error(Errc::SingleClass, "task " + task + " has a single class after filtering");
      cell.cv = cross_validate(ds, opt.k, opt.seed, opt.train);
      rep.cells.push_back(std::move(cell));
    }
  }
  return rep;
}

inline std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

inline std::string fixed6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline std::string report_csv(const ProbeReport& rep) {
  std::string out =
      "task,layer,model,n_samples,n_classes,accuracy_mean,accuracy_std,precision_mean,precision_std,recall_mean,recall_std\n";
  for (const auto& c : rep.cells) {
    out += c.task + "," + std::to_string(c.layer) + "," + c.model + "," + std::to_string(c.n_samples) + "," +
           std::to_string(c.class_names.size()) + "," + fixed6(c.cv.accuracy.mean) + "," + fixed6(c.cv.accuracy.std) + "," +
           fixed6(c.cv.macro_precision.mean) + "," + fixed6(c.cv.macro_precision.std) + "," +
           fixed6(c.cv.macro_recall.mean) + "," + fixed6(c.cv.macro_recall.std) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json report_json(const ProbeReport& rep, const ProbeOptions& opt) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["config"] = {{"k", opt.k},
                 {"seed", opt.seed},
                 {"min_count", opt.min_count},
                 {"epochs", opt.train.epochs},
                 {"step_size", opt.train.step_size},
                 {"l2_penalty", opt.train.l2_penalty},
                 {"pooling", "token_weighted_mean"},
                 {"macro_precision_absent_class", 0}};
  j["layers"] = rep.layers;
  j["tasks"] = rep.tasks;
  j["cells"] = oj::array();
  auto ms = [](const MeanStd& m) { return oj{{"mean", m.mean}, {"std", m.std}}; };
  for (const auto& c : rep.cells) {
    oj cj;
    cj["task"] = c.task;
    cj["layer"] = c.layer;
    cj["model"] = c.model;
    cj["n_samples"] = c.n_samples;
    cj["classes"] = c.class_names;
    cj["accuracy"] = ms(c.cv.accuracy);
    cj["macro_precision"] = ms(c.cv.macro_precision);
    cj["macro_recall"] = ms(c.cv.macro_recall);
    cj["fold_accuracy"] = oj::array();
    for (const auto& f : c.cv.folds) cj["fold_accuracy"].push_back(f.accuracy);
    cj["confusion"] = c.cv.confusion;
    j["cells"].push_back(std::move(cj));
  }
  j["warnings"] = rep.warnings;
  return j;
}

/// Per task at `layer`: Acc. / Prec. / Recall as mean ± std.
inline std::string report_table(const ProbeReport& rep, std::optional<int> layer = std::nullopt) {
  int shown = layer ? *layer : (rep.layers.empty() ? 0 : rep.layers.front());
  if (!layer && std::find(rep.layers.begin(), rep.layers.end(), 6) != rep.layers.end()) shown = 6;
  std::ostringstream out;
  out << "Linear probing, layer " << shown << "\n";
  out << "Task\tModel\tAcc.\tPrec.\tRecall\n";
  auto pm = [](const MeanStd& m) { return fixed3(m.mean) + " ± " + fixed3(m.std); };
  for (const auto& c : rep.cells) {
    if (c.layer != shown) continue;
    out << c.task << "\t" << c.model << "\t" << pm(c.cv.accuracy) << "\t" << pm(c.cv.macro_precision) << "\t"
        << pm(c.cv.macro_recall) << "\n";
  }
  return out.str();
}

/// Mean accuracy per task (rows) and layer (columns).
inline std::string layer_accuracy_table(const ProbeReport& rep) {
  std::ostringstream out;
  out << "task";
  for (int l : rep.layers) out << "\tlayer_" << l;
  out << "\n";
  for (const auto& t : rep.tasks) {
    out << t;
    for (int l : rep.layers) {
      auto it = std::find_if(rep.cells.begin(), rep.cells.end(), [&](const auto& c) { return c.task == t && c.layer == l; });
      out << "\t" << (it == rep.cells.end() ? std::string("-") : fixed3(it->cv.accuracy.mean));
    }
    out << "\n";
  }
  return out.str();
}

// --- baseline embedder ----------------------------------------------------

/// Per-chunk embedding without a neural model: the histogram of content token ids
/// projected by a seeded ±1 random matrix, then L2-normalized. Every requested
/// layer receives the same vector.
inline std::vector<EmbeddingRecord> baseline_embed(const std::string& file_id, const std::vector<tok::Chunk>& chunks,
                                                   const tok::SpecialIds& special, std::size_t dim, std::uint64_t seed,
                                                   const std::vector<int>& layers = {3, 6, 9, 12}) {
  if (dim == 0) throw Error(Errc::InvalidArgument, "dimension must be positive");
  std::vector<EmbeddingRecord> out;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    std::map<tok::TokenId, std::size_t> hist;
    std::size_t n = 0;
    for (auto id : chunks[c].ids) {
      if (special.is_special(id)) continue;
      ++hist[id];
      ++n;
    }
    std::vector<double> v(dim, 0.0);
    for (const auto& [id, count] : hist) {
      const std::uint64_t row = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id) + 0x51ed2701ULL));
      for (std::size_t j = 0; j < dim; ++j) {
        const bool positive = splitmix64(row + j) & 1ULL;
        v[j] += positive ? static_cast<double>(count) : -static_cast<double>(count);
      }
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& x : v) x /= norm;
    for (int layer : layers) out.push_back(EmbeddingRecord{file_id, layer, c, n, v});
  }
  return out;
}

}  // namespace lilytk::probe
