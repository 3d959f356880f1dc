#include <gtest/gtest.h>

#include <functional>

#include "lilytk/probe.hpp"
#include "probe_data.hpp"

using namespace lilytk;
using namespace lilytk::probe;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

std::string record(const std::string& id, int layer, int chunk, int tokens, const std::string& vec) {
  return "{\"file_id\":\"" + id + "\",\"layer\":" + std::to_string(layer) + ",\"chunk_index\":" + std::to_string(chunk) +
         ",\"token_count\":" + std::to_string(tokens) + ",\"vector\":" + vec + "}\n";
}

}  // namespace

TEST(Embeddings, LoadAndValidate) {
  auto recs = parse_embeddings(record("a", 6, 0, 510, "[1,2,3]") + record("a", 6, 1, 20, "[4,5,6]"));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].chunk_index, 0u);
  EXPECT_EQ(recs[1].chunk_index, 1u);
  EXPECT_EQ(recs[1].vector, (std::vector<double>{4, 5, 6}));
  EXPECT_TRUE(parse_embeddings("").empty());
  EXPECT_EQ(parse_embeddings(to_jsonl(recs[0]) + "\n").front().vector, recs[0].vector);
}

TEST(Embeddings, Errors) {
  std::string v768 = "[0", v767 = "[0";
  for (int i = 1; i < 768; ++i) v768 += ",0";
  for (int i = 1; i < 767; ++i) v767 += ",0";
  v768 += "]";
  v767 += "]";
  EXPECT_EQ(code_of([&] { parse_embeddings(record("a", 6, 0, 1, v768) + record("b", 6, 0, 1, v767)); }),
            Errc::DimensionMismatch);
  try {
    parse_embeddings(record("a", 6, 0, 1, "[1]") + "{not json\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRecord);
    EXPECT_EQ(e.offset(), 2u);
  }
  EXPECT_EQ(code_of([] { parse_embeddings(record("a", -1, 0, 1, "[1]")); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_embeddings(record("a", 6, 0, 1, "[]")); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_embeddings(record("a", 6, 0, 1, "[\"x\"]")); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_embeddings(record("a", 6, 1, 1, "[1]")); }), Errc::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_embeddings("{\"file_id\":\"a\"}\n"); }), Errc::MalformedRecord);
}

TEST(Pooling, Examples) {
  EmbeddingRecord a{"f", 6, 0, 2, {2, 2}}, b{"f", 6, 1, 2, {6, 6}};
  EXPECT_EQ(pool_file_embedding({a, b}), Eigen::Vector2d(4, 4));
  EXPECT_EQ(pool_file_embedding({a}), Eigen::Vector2d(2, 2));
  EmbeddingRecord c{"f", 6, 0, 1, {0, 0}}, d{"f", 6, 1, 3, {4, 0}};
  EXPECT_EQ(pool_file_embedding({c, d}), Eigen::Vector2d(3, 0));
  EmbeddingRecord z1{"f", 6, 0, 0, {1, 0}}, z2{"f", 6, 1, 0, {3, 0}};
  EXPECT_EQ(pool_file_embedding({z1, z2}), Eigen::Vector2d(2, 0));
  EXPECT_EQ(code_of([] { pool_file_embedding(std::vector<EmbeddingRecord>{}); }), Errc::NoRecords);
}

TEST(Pooling, Linearity) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    std::vector<EmbeddingRecord> recs, scaled;
    const double c = probe_data::gaussian(rng) * 3;
    for (std::size_t k = 0; k < 1 + rng.below(5); ++k) {
      EmbeddingRecord r{"f", 1, k, 1 + rng.below(510), {}};
      for (int j = 0; j < 6; ++j) r.vector.push_back(probe_data::gaussian(rng));
      recs.push_back(r);
      for (auto& x : r.vector) x *= c;
      scaled.push_back(r);
    }
    EXPECT_LT((pool_file_embedding(scaled) - c * pool_file_embedding(recs)).norm(), 1e-9);
  }
}

TEST(Labels, Parse) {
  auto l = parse_labels("file_id,task,label\na,composer,Vivaldi\nb,composer,Corelli\n");
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1].label, "Corelli");
  EXPECT_EQ(code_of([] { parse_labels("a,composer\n"); }), Errc::MalformedRecord);
}

TEST(Classes, FilterThreshold) {
  std::vector<std::string> labels;
  for (int i = 0; i < 12; ++i) labels.push_back("A");
  for (int i = 0; i < 9; ++i) labels.push_back("B");
  for (int i = 0; i < 10; ++i) labels.push_back("C");
  auto f = filter_classes(labels);
  EXPECT_EQ(f.classes, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(f.kept.size(), 22u);
  for (auto i : f.kept) EXPECT_NE(labels[i], "B");
  EXPECT_EQ(filter_classes(labels, 9).kept.size(), labels.size());
  EXPECT_EQ(code_of([&] { filter_classes(labels, 13); }), Errc::NoClassesRemain);
}

TEST(Folds, Stratification) {
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) y.push_back(i % 2);
  auto f = stratified_folds(y, 5, 1);
  for (int k = 0; k < 5; ++k)
    for (int c = 0; c < 2; ++c) {
      int n = 0;
      for (std::size_t i = 0; i < y.size(); ++i) n += f[i] == k && y[i] == c;
      EXPECT_EQ(n, 5);
    }
  std::vector<int> odd(11, 0);
  for (int i = 0; i < 7; ++i) odd.push_back(1);
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto g = stratified_folds(odd, 5, s);
    EXPECT_LE(probe_data::fold_imbalance(odd, g, 5), 1);
    EXPECT_EQ(g, stratified_folds(odd, 5, s));
    // fold sizes overall also differ by at most one
    std::vector<int> sizes(5);
    for (int x : g) ++sizes[static_cast<std::size_t>(x)];
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
  }
  EXPECT_NE(stratified_folds(odd, 5, 1), stratified_folds(odd, 5, 2));
  EXPECT_EQ(code_of([] { stratified_folds({0, 0, 0, 0, 1, 1, 1, 1, 1}, 5, 0); }), Errc::ClassSmallerThanK);
  EXPECT_EQ(code_of([] { stratified_folds({0, 1}, 1, 0); }), Errc::InvalidArgument);
}

TEST(Standardizer, Examples) {
  Eigen::MatrixXd X(2, 1);
  X << 0, 2;
  auto s = Standardizer::fit(X);
  EXPECT_DOUBLE_EQ(s.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(s.std(0), 1.0);
  EXPECT_EQ(s.apply(X), (Eigen::MatrixXd(2, 1) << -1, 1).finished());
  Eigen::MatrixXd K(3, 2);
  K << 5, 1, 5, 2, 5, 3;
  auto k = Standardizer::fit(K);
  EXPECT_EQ(k.std(0), 1.0);
  EXPECT_TRUE(k.apply(K).col(0).isZero());
  auto ds = probe_data::blobs(3, 20, 6, 3);
  auto t = Standardizer::fit(ds.X).apply(ds.X);
  EXPECT_LT(t.colwise().mean().cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(code_of([] { Standardizer::fit(Eigen::MatrixXd::Zero(1, 3)); }), Errc::TooFewSamples);
}

TEST(Training, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(probe_data::gradient_check(s), 1e-4);
}

TEST(Training, SeparableDataIsLearnt) {
  auto ds = probe_data::blobs(2, 30, 4, 8);
  auto X = Standardizer::fit(ds.X).apply(ds.X);
  auto p = train_linear_probe(X, ds.y, 2);
  EXPECT_EQ(evaluate(p, X, ds.y).accuracy, 1.0);
  for (std::size_t e = 1; e < p.loss_history.size(); ++e) EXPECT_LE(p.loss_history[e], p.loss_history[e - 1]);
  auto cv = cross_validate(probe_data::blobs(3, 20, 5, 9), 5, 1);
  EXPECT_EQ(cv.accuracy.mean, 1.0);
  EXPECT_EQ(cv.accuracy.std, 0.0);
}

TEST(Training, ShuffledLabelsAreNearChance) {
  auto ds = probe_data::noise_labels(3, 60, 8, 12);
  auto cv = cross_validate(ds, 5, 1);
  EXPECT_NEAR(cv.accuracy.mean, 1.0 / 3.0, 0.1);
}

TEST(Training, ConflictingIdenticalRows) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 3);
  std::vector<int> y = {0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
  auto p = train_linear_probe(X, y, 2);
  EXPECT_LE(evaluate(p, X, y).accuracy, 0.7);
  EXPECT_EQ(code_of([] { train_linear_probe(Eigen::MatrixXd::Ones(3, 2), {1, 1, 1}, 2); }), Errc::SingleClass);
  TrainConfig huge;
  huge.step_size = 1e308;
  // backtracking keeps an absurd step size finite
  auto h = train_linear_probe(Eigen::MatrixXd::Identity(4, 2), {0, 1, 0, 1}, 2, huge);
  EXPECT_TRUE(std::isfinite(h.loss_history.back()));
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(4, 2);
  bad(2, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { train_linear_probe(bad, {0, 1, 0, 1}, 2); }), Errc::NonFiniteLoss);
}

TEST(Metrics, Examples) {
  // TP=3 FP=1 FN=2 TN=4 for class 1
  std::vector<int> y = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  std::vector<int> pred = {1, 1, 1, 0, 0, 1, 0, 0, 0, 0};
  auto m = metrics_from_predictions(y, pred, 2);
  EXPECT_NEAR(m.macro_precision, 0.5 * (3.0 / 4.0 + 4.0 / 6.0), 1e-12);
  EXPECT_NEAR(m.macro_precision, 0.708, 1e-3);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
  auto perfect = metrics_from_predictions(y, y, 2);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.macro_precision, 1.0);
  EXPECT_EQ(perfect.macro_recall, 1.0);
  auto one = metrics_from_predictions(y, std::vector<int>(10, 0), 2);
  EXPECT_EQ(one.accuracy, 0.5);
  EXPECT_EQ(one.macro_precision, 0.25);  // never-predicted class counts as 0
  EXPECT_EQ(code_of([] { metrics_from_predictions({}, {}, 2); }), Errc::EmptyTestSet);
}

TEST(Metrics, BoundsAndAccuracyIsMicroRecall) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> y, p;
    for (int i = 0; i < 30; ++i) {
      y.push_back(static_cast<int>(rng.below(4)));
      p.push_back(static_cast<int>(rng.below(4)));
    }
    auto m = metrics_from_predictions(y, p, 4);
    for (double v : {m.accuracy, m.macro_precision, m.macro_recall}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    std::size_t diag = 0;
    for (int c = 0; c < 4; ++c) diag += m.confusion[c][c];
    EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(diag) / 30.0);
  }
}

TEST(CrossValidation, NoLeakage) {
  EXPECT_TRUE(probe_data::no_leakage(probe_data::blobs(3, 15, 4, 2), 5, 7));
  EXPECT_TRUE(probe_data::no_leakage(probe_data::noise_labels(2, 20, 3, 5), 4, 1));
}

TEST(CrossValidation, DeterministicAndMeanStd) {
  auto ds = probe_data::noise_labels(2, 20, 4, 3);
  auto a = cross_validate(ds, 5, 9), b = cross_validate(ds, 5, 9);
  EXPECT_EQ(a.accuracy.mean, b.accuracy.mean);
  EXPECT_EQ(a.confusion, b.confusion);
  auto ms = mean_std({1.0, 3.0});
  EXPECT_EQ(ms.mean, 2.0);
  EXPECT_EQ(ms.std, 1.0);
}

TEST(Harness, RunProbeReport) {
  std::vector<EmbeddingRecord> recs;
  std::vector<LabelRow> labels;
  auto ds = probe_data::blobs(3, 12, 4, 5);
  for (Eigen::Index r = 0; r < ds.X.rows(); ++r) {
    std::vector<double> v;
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) v.push_back(ds.X(r, j));
    for (int layer : {3, 6})
      recs.push_back(EmbeddingRecord{ds.file_ids[static_cast<std::size_t>(r)], layer, 0, 100, v});
    labels.push_back({ds.file_ids[static_cast<std::size_t>(r)], "composer", ds.class_names[static_cast<std::size_t>(ds.y[static_cast<std::size_t>(r)])]});
  }
  labels.push_back({"ghost", "composer", "class0"});
  ProbeOptions opt;
  auto rep = run_probe(recs, labels, opt);
  ASSERT_EQ(rep.cells.size(), 2u);
  EXPECT_EQ(rep.layers, (std::vector<int>{3, 6}));
  EXPECT_EQ(rep.warnings.size(), 2u);
  for (const auto& c : rep.cells) {
    EXPECT_EQ(c.n_samples, 36u);
    EXPECT_EQ(c.cv.accuracy.mean, 1.0);
  }
  EXPECT_NE(report_table(rep).find("Linear probing, layer 6"), std::string::npos);
  EXPECT_NE(report_table(rep).find("1.000 ± 0.000"), std::string::npos);
  EXPECT_NE(layer_accuracy_table(rep).find("layer_3\tlayer_6"), std::string::npos);
  EXPECT_EQ(report_json(rep, opt)["cells"].size(), 2u);
  EXPECT_EQ(report_csv(rep), report_csv(run_probe(recs, labels, opt)));
  opt.k = 1;
  EXPECT_EQ(code_of([&] { run_probe(recs, labels, opt); }), Errc::InvalidArgument);
  opt.k = 5;
  opt.layers = {9};
  EXPECT_EQ(code_of([&] { run_probe(recs, labels, opt); }), Errc::NoRecords);
}

TEST(Baseline, Properties) {
  tok::SpecialIds sp;
  std::vector<tok::Chunk> chunks = {{{sp.cls, 10, 11, 12, sp.sep}, 3}, {{sp.cls, 10, 11, 13, sp.sep}, 3},
                                    {{sp.cls, 10, 11, 12, sp.sep}, 3}};
  auto recs = baseline_embed("f", chunks, sp, 32, 7);
  ASSERT_EQ(recs.size(), 12u);
  EXPECT_EQ(recs[0].vector.size(), 32u);
  EXPECT_EQ(recs[0].token_count, 3u);
  EXPECT_EQ(recs[0].layer, 3);
  EXPECT_EQ(recs[3].layer, 12);
  EXPECT_EQ(recs[0].vector, recs[3].vector);  // identical across pseudo-layers
  EXPECT_EQ(recs[0].vector, recs[8].vector);  // same content
  EXPECT_NE(recs[0].vector, recs[4].vector);  // one token differs
  double norm = 0;
  for (double x : recs[0].vector) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NE(baseline_embed("f", chunks, sp, 32, 8)[0].vector, recs[0].vector);
  auto again = baseline_embed("f", chunks, sp, 32, 7);
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(again[i].vector, recs[i].vector);
  EXPECT_EQ(code_of([&] { baseline_embed("f", chunks, sp, 0, 7); }), Errc::InvalidArgument);
}
