#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "textalpha/baselines.hpp"
#include "textalpha/features.hpp"
#include "textalpha/rng.hpp"

using namespace textalpha;

namespace {

// Feature k indicates class k; features 3 and 4 are noise.
std::vector<TrainingExample> toy(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int k = 0; k < kNumClasses; ++k) {
      SparseVector x{5, {{static_cast<std::size_t>(k), 1.0}}};
      if (rng.uniform() < 0.5) x.entries.emplace_back(3, rng.uniform());
      if (rng.uniform() < 0.5) x.entries.emplace_back(4, rng.uniform());
      out.push_back({x, class_from_index(k)});
    }
  }
  return out;
}

struct Candidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

// Enumerates every (feature, midpoint) pair on the dense matrix.
Candidate brute_force_root(const std::vector<TrainingExample>& ex, std::size_t dim, int cls, double lambda) {
  const std::size_t n = ex.size();
  std::vector<std::vector<double>> dense(n, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, v] : ex[i].features.entries) dense[i][j] = v;
  }
  std::vector<double> g(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = class_index(ex[i].label) == cls ? 1.0 : 0.0;
    g[i] = 1.0 / 3.0 - y;
    h[i] = (1.0 / 3.0) * (2.0 / 3.0);
  }
  double G = 0, H = 0;
  for (std::size_t i = 0; i < n; ++i) {
    G += g[i];
    H += h[i];
  }
  Candidate best;
  for (std::size_t j = 0; j < dim; ++j) {
    std::set<double> values;
    for (std::size_t i = 0; i < n; ++i) values.insert(dense[i][j]);
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t t = 1; t < sorted.size(); ++t) {
      const double thr = 0.5 * (sorted[t - 1] + sorted[t]);
      double GL = 0, HL = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (dense[i][j] < thr) {
          GL += g[i];
          HL += h[i];
        }
      }
      const double GR = G - GL, HR = H - HL;
      const double gain = 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) - G * G / (H + lambda));
      if (gain > best.gain + 1e-12) best = {j, thr, gain};
    }
  }
  return best;
}

}  // namespace

TEST(Boosted, RootSplitMatchesBruteForce) {
  const auto ex = toy(8, 3);
  BoostHyperparams hp;
  hp.rounds = 1;
  hp.max_depth = 1;
  const auto m = train_boosted(ex, 5, hp);
  ASSERT_EQ(m.rounds.size(), 1u);
  for (int k = 0; k < kNumClasses; ++k) {
    const auto want = brute_force_root(ex, 5, k, hp.lambda);
    const auto& root = m.rounds[0][static_cast<std::size_t>(k)].nodes[0];
    ASSERT_GE(root.feature, 0);
    EXPECT_EQ(m.features[static_cast<std::size_t>(root.feature)], want.feature) << "class " << k;
    EXPECT_NEAR(root.threshold, want.threshold, 1e-12);
    EXPECT_EQ(want.feature, static_cast<std::size_t>(k));
    EXPECT_DOUBLE_EQ(root.threshold, 0.5);
  }
}

TEST(Boosted, OneRoundHandTrace) {
  const auto ex = toy(2, 5);  // 6 examples, 2 per class
  BoostHyperparams hp;
  hp.rounds = 1;
  hp.max_depth = 1;
  const auto m = train_boosted(ex, 5, hp);
  // Class-k tree splits on indicator k: left (x < 0.5) holds the 4 others with
  // g = 1/3 each, right holds the 2 members with g = -2/3; h = 2/9 throughout.
  const double left = -(4.0 / 3.0) / (8.0 / 9.0 + 1.0) * hp.eta;
  const double right = (4.0 / 3.0) / (4.0 / 9.0 + 1.0) * hp.eta;
  for (int k = 0; k < kNumClasses; ++k) {
    const auto& tree = m.rounds[0][static_cast<std::size_t>(k)];
    const auto& root = tree.nodes[0];
    EXPECT_NEAR(tree.nodes[static_cast<std::size_t>(root.left)].value, left, 1e-12);
    EXPECT_NEAR(tree.nodes[static_cast<std::size_t>(root.right)].value, right, 1e-12);
  }
  // Walk: an input with only indicator 1 goes right in tree 1, left in trees 0 and 2.
  const auto p = predict_boosted(m, SparseVector{5, {{1, 1.0}}});
  const double s = 2 * std::exp(left) + std::exp(right);
  EXPECT_NEAR(p.probabilities[0], std::exp(left) / s, 1e-12);
  EXPECT_NEAR(p.probabilities[1], std::exp(right) / s, 1e-12);
  EXPECT_EQ(p.predicted, PerformanceClass::Average);
}

TEST(Boosted, ZeroRoundsIsUniform) {
  BoostHyperparams hp;
  hp.rounds = 0;
  const auto m = train_boosted(toy(3, 1), 5, hp);
  const auto p = predict_boosted(m, SparseVector{5, {{0, 1.0}}});
  for (double v : p.probabilities) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Boosted, SeparableToySetReachesFullAccuracy) {
  const auto ex = toy(20, 9);
  const auto m = train_boosted(ex, 5, {});
  for (const auto& e : ex) EXPECT_EQ(predict_boosted(m, e.features).predicted, e.label);
}

TEST(Boosted, LossNonIncreasingPerRound) {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (double signal : {1.0, 0.5, 0.0}) {
      const auto data = textalpha::testing::keyword_split(300, 0, signal, signal == 0.0, seed);
      const auto tfidf = TfidfModel::fit(data.train_docs, {50000, 2});
      std::vector<TrainingExample> ex;
      for (std::size_t i = 0; i < data.train_docs.size(); ++i) ex.push_back({tfidf.transform(data.train_docs[i]), data.train_labels[i]});
      BoostHyperparams hp;
      hp.rounds = 30;
      hp.seed = seed;
      const auto m = train_boosted(ex, tfidf.dim(), hp);
      ASSERT_GE(m.round_loss.size(), 2u);
      for (std::size_t r = 1; r < m.round_loss.size(); ++r) {
        EXPECT_LE(m.round_loss[r], m.round_loss[r - 1] + 1e-12) << "seed " << seed << " signal " << signal << " round " << r;
      }
    }
  }
}

TEST(Boosted, ProbabilitiesSumToOneAndArgmaxMonotoneInvariant) {
  const auto m = train_boosted(toy(10, 4), 5, {});
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    SparseVector x{5, {}};
    for (std::size_t j = 0; j < 5; ++j) {
      if (rng.uniform() < 0.5) x.entries.emplace_back(j, rng.uniform());
    }
    const auto p = predict_boosted(m, x);
    EXPECT_NEAR(p.probabilities[0] + p.probabilities[1] + p.probabilities[2], 1.0, 1e-9);
    const auto s = m.scores(x);
    // Sub-ulp score differences cannot survive a floating-point transform.
    const double gap = std::min({std::abs(s[0] - s[1]), std::abs(s[1] - s[2]), std::abs(s[0] - s[2])});
    if (gap < 1e-9) continue;
    const ClassProbabilities transformed{std::exp(3 * s[0]) + 1, std::exp(3 * s[1]) + 1, std::exp(3 * s[2]) + 1};
    EXPECT_EQ(argmax_class(transformed), p.predicted);
  }
}

TEST(Boosted, FeatureCapKeepsMostFrequentColumns) {
  BoostHyperparams hp;
  hp.feature_cap = 3;
  hp.rounds = 2;
  auto ex = toy(10, 2);
  const auto m = train_boosted(ex, 5, hp);
  EXPECT_EQ(m.features.size(), 3u);
  for (const auto& round : m.rounds) {
    for (const auto& tree : round) {
      for (const auto& node : tree.nodes) EXPECT_LT(node.feature, 3);
    }
  }
}

TEST(Boosted, DimensionMismatchAndMissingClass) {
  const auto m = train_boosted(toy(3, 1), 5, {});
  EXPECT_THROW(predict_boosted(m, SparseVector{4, {}}), UsageError);
  auto ex = toy(3, 1);
  std::erase_if(ex, [](const TrainingExample& e) { return e.label == PerformanceClass::Under; });
  EXPECT_THROW(train_boosted(ex, 5, {}), DataError);
}

TEST(Boosted, DeterministicAndSerializable) {
  const auto ex = toy(10, 7);
  const auto a = train_boosted(ex, 5, {});
  EXPECT_EQ(a.to_json(), train_boosted(ex, 5, {}).to_json());
  const auto b = BoostedModel::from_json(a.to_json());
  EXPECT_EQ(b.to_json(), a.to_json());
  const SparseVector x{5, {{2, 1.0}, {4, 0.3}}};
  EXPECT_EQ(predict_boosted(a, x).probabilities, predict_boosted(b, x).probabilities);
}
