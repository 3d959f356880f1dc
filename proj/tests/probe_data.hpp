#pragma once

// Synthetic datasets for probe tests.

#include <cmath>

#include "lilytk/probe.hpp"

namespace probe_data {

inline double gaussian(lilytk::Rng& rng) {
  double u = rng.uniform(), v = rng.uniform();
  if (u < 1e-300) u = 1e-300;
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

/// `per_class` points around C well-separated centers (one axis each, distance 10).
inline lilytk::probe::ProbeDataset blobs(int C, int per_class, int d, std::uint64_t seed, double noise = 0.5) {
  lilytk::Rng rng(seed);
  lilytk::probe::ProbeDataset ds;
  ds.X.resize(C * per_class, d);
  for (int c = 0; c < C; ++c) {
    ds.class_names.push_back("class" + std::to_string(c));
    for (int i = 0; i < per_class; ++i) {
      const int row = c * per_class + i;
      for (int j = 0; j < d; ++j) ds.X(row, j) = noise * gaussian(rng) + (j == c % d ? 10.0 : 0.0);
      ds.y.push_back(c);
      ds.file_ids.push_back("f" + std::to_string(row));
    }
  }
  return ds;
}

/// Gaussian features with labels assigned independently of them.
inline lilytk::probe::ProbeDataset noise_labels(int C, int per_class, int d, std::uint64_t seed) {
  auto ds = blobs(C, per_class, d, seed, 1.0);
  lilytk::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (Eigen::Index r = 0; r < ds.X.rows(); ++r)
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) ds.X(r, j) = gaussian(rng);
  rng.shuffle(ds.y);
  return ds;
}

/// Largest relative error between the analytic gradient and central differences.
inline double gradient_check(std::uint64_t seed, int n = 5, int C = 3, int d = 4) {
  lilytk::Rng rng(seed);
  Eigen::MatrixXd X(n, d), W(C, d);
  Eigen::VectorXd b(C);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = gaussian(rng);
  for (int c = 0; c < C; ++c) {
    b(c) = gaussian(rng);
    for (int j = 0; j < d; ++j) W(c, j) = gaussian(rng);
  }
  std::vector<int> y;
  for (int i = 0; i < n; ++i) y.push_back(i % C);
  const double l2 = 0.01, h = 1e-5;
  auto [gW, gb] = lilytk::probe::probe_gradient(W, b, X, y, l2);
  double worst = 0;
  auto rel = [](double a, double num) { return std::fabs(a - num) / std::max(1e-8, std::fabs(a) + std::fabs(num)); };
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < d; ++j) {
      auto Wp = W, Wm = W;
      Wp(c, j) += h;
      Wm(c, j) -= h;
      double num = (lilytk::probe::probe_loss(Wp, b, X, y, l2) - lilytk::probe::probe_loss(Wm, b, X, y, l2)) / (2 * h);
      worst = std::max(worst, rel(gW(c, j), num));
    }
    auto bp = b, bm = b;
    bp(c) += h;
    bm(c) -= h;
    double num = (lilytk::probe::probe_loss(W, bp, X, y, l2) - lilytk::probe::probe_loss(W, bm, X, y, l2)) / (2 * h);
    worst = std::max(worst, rel(gb(c), num));
  }
  return worst;
}

/// Trains on one fold twice, once with the test rows replaced, and reports whether
/// the standardizer and weights are identical.
inline bool no_leakage(const lilytk::probe::ProbeDataset& ds, int k, std::uint64_t seed) {
  using namespace lilytk::probe;
  auto folds = stratified_folds(ds.y, k, seed);
  auto a = run_fold(ds, folds, 0, {});
  // replace the test rows with scrambled, rescaled copies
  std::vector<Eigen::Index> test;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if (folds[i] == 0) test.push_back(static_cast<Eigen::Index>(i));
  auto ds2 = ds;
  for (std::size_t t = 0; t < test.size(); ++t) {
    auto src = test[(t + 1) % test.size()];
    ds2.X.row(test[t]) = ds.X.row(src) * 3.0 + Eigen::RowVectorXd::Constant(ds.X.cols(), 7.0);
    ds2.y[static_cast<std::size_t>(test[t])] = ds.y[static_cast<std::size_t>(src)];
  }
  auto b = run_fold(ds2, folds, 0, {});
  return a.probe.W == b.probe.W && a.probe.b == b.probe.b && a.standardizer.mean == b.standardizer.mean &&
         a.standardizer.std == b.standardizer.std;
}

/// Largest spread of any class's per-fold count.
inline int fold_imbalance(const std::vector<int>& y, const std::vector<int>& folds, int k) {
  std::map<int, std::vector<int>> per;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& v = per[y[i]];
    v.resize(static_cast<std::size_t>(k));
    ++v[static_cast<std::size_t>(folds[i])];
  }
  int worst = 0;
  for (const auto& [_, v] : per) worst = std::max(worst, *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()));
  return worst;
}

}  // namespace probe_data
