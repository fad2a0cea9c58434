#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "guardfl/baselines.hpp"
#include "guardfl/errors.hpp"
#include "guardfl/rng.hpp"

using namespace guardfl;

namespace {

FlatModel vec_model(Vec values) {
  const std::size_t n = values.size();
  return FlatModel(std::move(values), {{"fc1.w", 0, n}});
}

ClientUpdateRecord make_record(int id, Vec w, const FlatModel& base, std::size_t n = 10) {
  ClientUpdateRecord r;
  r.client_id = id;
  r.weights = vec_model(std::move(w));
  r.update = subtract(r.weights, base);
  r.sample_count = n;
  return r;
}

// Test-only oracle: exhaustive Krum scoring straight from the definition.
std::size_t krum_brute_force(const std::vector<FlatModel>& models, int f) {
  const int n = static_cast<int>(models.size());
  const int neighbors = n - f - 2;
  double best_score = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (int i = 0; i < n; ++i) {
    Vec dists;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = l2_distance(models[i], models[j]);
      dists.push_back(d * d);
    }
    std::sort(dists.begin(), dists.end());
    double score = 0.0;
    for (int k = 0; k < neighbors; ++k) score += dists[k];
    if (score < best_score) {
      best_score = score;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("krum selection basics") {
  SUBCASE("identical models tie-break to index 0") {
    std::vector<FlatModel> models(5, vec_model({1.0, 2.0}));
    CHECK(krum_select(models, 0) == 0);
  }
  SUBCASE("far outlier is never selected") {
    std::vector<FlatModel> models{vec_model({0.0}), vec_model({0.1}), vec_model({0.2}),
                                  vec_model({0.1}), vec_model({100.0})};
    for (int f : {0, 1}) {
      if (5 > 2 * f + 2) CHECK(krum_select(models, f) != 4);
    }
  }
  SUBCASE("too few models is a configuration error") {
    std::vector<FlatModel> models(6, vec_model({0.0}));
    CHECK_THROWS_AS(krum_select(models, 2), ConfigError);
  }
}

TEST_CASE("krum matches the exhaustive oracle on 50 random instances") {
  RngStream rng(41, "krum-oracle");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FlatModel> models;
    for (int i = 0; i < 6; ++i) {
      Vec w(4);
      for (double& x : w) x = rng.normal(0.0, 2.0);
      models.push_back(vec_model(std::move(w)));
    }
    CHECK(krum_select(models, 1) == krum_brute_force(models, 1));
  }
}

TEST_CASE("multi-krum aggregation") {
  SUBCASE("f=0 is the plain mean") {
    std::vector<FlatModel> models{vec_model({0.0, 2.0}), vec_model({2.0, 0.0}),
                                  vec_model({4.0, 4.0}), vec_model({2.0, 2.0}),
                                  vec_model({2.0, 2.0})};
    const FlatModel avg = multi_krum_aggregate(models, 0);
    CHECK(avg.params()[0] == doctest::Approx(2.0));
    CHECK(avg.params()[1] == doctest::Approx(2.0));
  }
  SUBCASE("one far outlier with f=1 is excluded") {
    std::vector<FlatModel> models{vec_model({0.0}), vec_model({0.2}), vec_model({0.1}),
                                  vec_model({0.3}), vec_model({0.2}), vec_model({50.0})};
    const FlatModel avg = multi_krum_aggregate(models, 1);
    // Mean of the five clustered models only.
    CHECK(avg.params()[0] == doctest::Approx((0.0 + 0.2 + 0.1 + 0.3 + 0.2) / 5.0));
  }
  SUBCASE("identical models aggregate to themselves") {
    std::vector<FlatModel> models(7, vec_model({3.5, -1.0}));
    const FlatModel avg = multi_krum_aggregate(models, 2);
    CHECK(avg.params()[0] == doctest::Approx(3.5));
    CHECK(avg.params()[1] == doctest::Approx(-1.0));
  }
}

TEST_CASE("ndc clips updates before averaging") {
  const FlatModel base = vec_model({0.0, 0.0});

  SUBCASE("all norms below the threshold reduce to fedavg") {
    std::vector<ClientUpdateRecord> records;
    records.push_back(make_record(0, {0.3, 0.0}, base));
    records.push_back(make_record(1, {0.0, 0.4}, base));
    const FlatModel clipped = ndc_clip_aggregate(records, base, 2.0);
    const FlatModel plain = fedavg_aggregate(records);
    CHECK(clipped.params() == plain.params());
  }
  SUBCASE("single client clipped to the threshold exactly") {
    std::vector<ClientUpdateRecord> records;
    records.push_back(make_record(0, {4.0, 0.0}, base));  // norm 4, threshold 2
    const FlatModel clipped = ndc_clip_aggregate(records, base, 2.0);
    CHECK(l2_distance(clipped, base) == doctest::Approx(2.0));
  }
  SUBCASE("default threshold") {
    BaselineConfig cfg;
    CHECK(cfg.ndc_threshold == 2.0);
    CHECK(cfg.krum_f == 2);
    CHECK(cfg.weak_dp_sigma == 0.025);
  }
}

TEST_CASE("weak dp adds seeded gaussian noise after averaging") {
  const FlatModel base = vec_model(Vec(64, 0.0));
  std::vector<ClientUpdateRecord> records;
  records.push_back(make_record(0, Vec(64, 1.0), base));
  records.push_back(make_record(1, Vec(64, 3.0), base));

  SUBCASE("sigma 0 equals fedavg") {
    const FlatModel out = weak_dp_aggregate(records, 0.0, 9, 1);
    CHECK(out.params() == fedavg_aggregate(records).params());
  }
  SUBCASE("noise std matches sigma within 5 percent") {
    const double sigma = 0.025;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (int round = 1; round <= 160; ++round) {  // 160 * 64 > 10^4 draws
      const FlatModel out = weak_dp_aggregate(records, sigma, 9, round);
      for (double v : out.params()) {
        const double noise = v - 2.0;
        sum_sq += noise * noise;
        ++count;
      }
    }
    const double std_hat = std::sqrt(sum_sq / static_cast<double>(count));
    CHECK(std_hat == doctest::Approx(sigma).epsilon(0.05));
  }
  SUBCASE("same round and seed reproduce the noise") {
    const FlatModel a = weak_dp_aggregate(records, 0.025, 9, 3);
    const FlatModel b = weak_dp_aggregate(records, 0.025, 9, 3);
    CHECK(a.params() == b.params());
  }
}

TEST_CASE("neutral parameters reduce both defenses to fedavg") {
  RngStream rng(43, "neutral");
  for (int trial = 0; trial < 50; ++trial) {
    const FlatModel base = vec_model({0.0, 0.0, 0.0});
    std::vector<ClientUpdateRecord> records;
    for (int id = 0; id < 5; ++id) {
      Vec w(3);
      for (double& x : w) x = rng.normal(0.0, 2.0);
      records.push_back(make_record(id, std::move(w), base, 1 + rng.uniform_int(9)));
    }
    const FlatModel plain = fedavg_aggregate(records);
    const FlatModel ndc = ndc_clip_aggregate(records, base, 1e12);
    const FlatModel dp = weak_dp_aggregate(records, 0.0, trial, 1);
    for (std::size_t i = 0; i < plain.size(); ++i) {
      CHECK(ndc.params()[i] == doctest::Approx(plain.params()[i]).epsilon(1e-12));
      CHECK(dp.params()[i] == plain.params()[i]);
    }
  }
}
