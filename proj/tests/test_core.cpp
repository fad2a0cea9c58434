#include <set>

#include "doctest.h"
#include "guardfl/errors.hpp"
#include "guardfl/fl_core.hpp"
#include "guardfl/flat_model.hpp"
#include "guardfl/rng.hpp"

using namespace guardfl;

namespace {

FlatModel scalar_model(double v) {
  return FlatModel({v}, {{"fc1.w", 0, 1}});
}

FlatModel vec_model(Vec values) {
  const std::size_t n = values.size();
  return FlatModel(std::move(values), {{"fc1.w", 0, n}});
}

}  // namespace

TEST_CASE("rng streams are deterministic and purpose-disjoint") {
  RngStream a(42, "test", 3, 7);
  RngStream b(42, "test", 3, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, "test", 3, 8);
  RngStream d(42, "other", 3, 7);
  RngStream e(42, "test", 3, 7);
  CHECK(c.next_u64() != e.next_u64());
  CHECK(d.next_u64() != RngStream(42, "test", 3, 7).next_u64());
}

TEST_CASE("rng normal moments are sane") {
  RngStream rng(9, "moments");
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("flat model validates layer layout") {
  CHECK_NOTHROW(FlatModel({1.0, 2.0, 3.0}, {{"a.w", 0, 2}, {"a.b", 2, 1}}));
  CHECK_THROWS_AS(FlatModel({1.0, 2.0}, {{"a.w", 0, 1}}), ShapeError);
  CHECK_THROWS_AS(FlatModel({1.0, 2.0}, {{"a.w", 0, 1}, {"a.b", 0, 1}}), ShapeError);
}

TEST_CASE("flat model groups layers by name prefix") {
  FlatModel m({1, 2, 3, 4, 5, 6},
              {{"fc1.w", 0, 2}, {"fc1.b", 2, 1}, {"fc2.w", 3, 2}, {"fc2.b", 5, 1}});
  const auto groups = m.grouped_layers();
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].name == "fc1");
  CHECK(groups[0].offset == 0);
  CHECK(groups[0].length == 3);
  CHECK(groups[1].name == "fc2");
  CHECK(groups[1].offset == 3);
  CHECK(groups[1].length == 3);
}

TEST_CASE("select_clients draws m distinct ids, deterministic per round") {
  const auto picked = select_clients(7, 1, 10, 200);
  CHECK(picked.size() == 10);
  std::set<int> unique(picked.begin(), picked.end());
  CHECK(unique.size() == 10);
  for (int id : picked) {
    CHECK(id >= 0);
    CHECK(id < 200);
  }

  CHECK(select_clients(7, 1, 10, 200) == picked);
  CHECK(select_clients(7, 2, 10, 200) != picked);

  const auto everyone = select_clients(3, 1, 5, 5);
  CHECK(everyone == std::vector<int>{0, 1, 2, 3, 4});

  CHECK_THROWS_AS(select_clients(1, 1, 6, 5), ConfigError);
}

TEST_CASE("select_clients is uniform across the population") {
  std::vector<int> hits(20, 0);
  for (int round = 1; round <= 4000; ++round) {
    for (int id : select_clients(11, round, 4, 20)) ++hits[id];
  }
  // Expected 800 draws per id.
  for (int id = 0; id < 20; ++id) {
    CHECK(hits[id] > 650);
    CHECK(hits[id] < 950);
  }
}

TEST_CASE("compute_updates subtracts the broadcast model") {
  const FlatModel g = scalar_model(1.0);
  const FlatModel g_prev = scalar_model(1.0);

  SUBCASE("w equals broadcast -> zero update") {
    const auto record = compute_updates(scalar_model(1.0), g, std::nullopt, g_prev, 0, 5);
    CHECK(record.update.params()[0] == 0.0);
  }
  SUBCASE("arithmetic") {
    const auto record = compute_updates(scalar_model(3.0), g, std::nullopt, g_prev, 0, 5);
    CHECK(record.update.params()[0] == 2.0);
  }
  SUBCASE("absent client substitution") {
    const FlatModel g2 = scalar_model(2.0);
    const auto record = compute_updates(scalar_model(2.5), g2, std::nullopt, g_prev, 0, 5);
    CHECK(record.prev_update.params()[0] == 1.0);  // g2 - g_prev
  }
  SUBCASE("present client uses its previous weights") {
    const auto record =
        compute_updates(scalar_model(2.5), scalar_model(2.0), scalar_model(1.5), g_prev, 0, 5);
    CHECK(record.prev_update.params()[0] == 0.5);  // prev - g_prev
  }
  SUBCASE("shape mismatch") {
    const FlatModel other({1.0, 2.0}, {{"fc1.w", 0, 2}});
    CHECK_THROWS_AS(compute_updates(other, g, std::nullopt, g_prev, 0, 1), ShapeError);
  }
}

TEST_CASE("fedavg_aggregate weighted means") {
  auto make_record = [](int id, Vec w, std::size_t n) {
    ClientUpdateRecord r;
    r.client_id = id;
    r.weights = vec_model(std::move(w));
    r.sample_count = n;
    return r;
  };

  SUBCASE("equal weights") {
    std::vector<ClientUpdateRecord> records;
    records.push_back(make_record(0, {1.0, 1.0}, 3));
    records.push_back(make_record(1, {3.0, 3.0}, 3));
    const auto avg = fedavg_aggregate(records);
    CHECK(avg.params() == Vec{2.0, 2.0});
  }
  SUBCASE("weighted mean") {
    std::vector<ClientUpdateRecord> records;
    records.push_back(make_record(0, {0.0}, 1));
    records.push_back(make_record(1, {4.0}, 3));
    CHECK(fedavg_aggregate(records).params()[0] == doctest::Approx(3.0));
  }
  SUBCASE("single client identity") {
    std::vector<ClientUpdateRecord> records;
    records.push_back(make_record(4, {1.5, -2.0}, 9));
    CHECK(fedavg_aggregate(records).params() == Vec{1.5, -2.0});
  }
  SUBCASE("empty records error") {
    CHECK_THROWS_AS(fedavg_aggregate({}), AggregationError);
  }
}

TEST_CASE("fedavg conservation: identical models aggregate to themselves") {
  RngStream rng(5, "conservation");
  for (int trial = 0; trial < 200; ++trial) {
    Vec w(8);
    for (double& x : w) x = rng.normal(0.0, 2.0);
    std::vector<ClientUpdateRecord> records;
    for (int id = 0; id < 4; ++id) {
      ClientUpdateRecord r;
      r.client_id = id;
      r.weights = vec_model(w);
      r.sample_count = static_cast<std::size_t>(1 + rng.uniform_int(50));
      records.push_back(std::move(r));
    }
    const auto avg = fedavg_aggregate(records);
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(avg.params()[i] == doctest::Approx(w[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("fedavg is independent of record processing order") {
  RngStream rng(6, "permute");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClientUpdateRecord> records;
    for (int id = 0; id < 6; ++id) {
      Vec w(5);
      for (double& x : w) x = rng.normal();
      ClientUpdateRecord r;
      r.client_id = id;
      r.weights = vec_model(std::move(w));
      r.sample_count = static_cast<std::size_t>(1 + rng.uniform_int(20));
      records.push_back(std::move(r));
    }
    const auto reference = fedavg_aggregate(records);
    rng.shuffle(records);
    const auto shuffled = fedavg_aggregate(records);
    CHECK(reference.params() == shuffled.params());  // bitwise, fixed reduction order
  }
}

TEST_CASE("sim config invariants") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.num_malicious() == 50);  // 0.25 * 200

  cfg.pmr = 0.6;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.pmr = 0.25;
  cfg.clients_per_round = 300;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
