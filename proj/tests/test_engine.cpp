#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "esim/engine.hpp"
#include "esim/metrics.hpp"

using namespace esim;

namespace {

EsimConfig tiny_config() {
  EsimConfig c;
  c.problem = "DTLZ2";
  c.population = 8;
  c.islands = 2;
  c.generations = 25;
  c.migration_interval = 10;
  c.swaps = 2;
  c.activity_window = 5;
  c.seed = 42;
  c.children_per_species = 5;
  return c;
}

std::multiset<int> id_multiset(const PopulationState& state) {
  std::multiset<int> ids;
  for (const auto& island : state.islands)
    for (const Species& s : island) ids.insert(s.id);
  return ids;
}

bool same_context(const Context& a, const Context& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("validate: field diagnostics name the offending key") {
  EsimConfig c;
  validate(c);  // defaults are valid

  c.problem = "nope";
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("problem"), ConfigError);
  c = EsimConfig{};
  c.population = 10;  // not divisible by 4 islands
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "mu");
  }
  c = EsimConfig{};
  c.migration_interval = c.activity_window;  // must exceed tau
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "migration_interval");
  }
  c = EsimConfig{};
  c.swaps = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = EsimConfig{};
  c.islands = 1;  // swaps>0 impossible with one island
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = EsimConfig{};
  c.generations = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = EsimConfig{};
  c.sigma_fraction = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = EsimConfig{};
  c.children_per_species = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("init_state: defaults give four islands of sixteen") {
  EsimConfig c;
  Rng rng(c.seed);
  const Problem p = Problem::by_name(c.problem);
  const PopulationState s = init_state(p, c, rng);
  REQUIRE(s.islands.size() == 4);
  for (const auto& island : s.islands) CHECK(island.size() == 16);
  CHECK(s.generation == 0);
  CHECK(s.population() == 64);
  // Round-robin placement by id, phenotypes cached from evaluate.
  for (std::size_t i = 0; i < s.islands.size(); ++i)
    for (const Species& sp : s.islands[i]) {
      CHECK(static_cast<std::size_t>(sp.id % 4) == i);
      CHECK((sp.phenotype == evaluate(p, sp.genome)).all());
    }
  // Ids cover 0..63 exactly once.
  const auto ids = id_multiset(s);
  CHECK(ids.size() == 64);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 63);
  CHECK(std::set<int>(ids.begin(), ids.end()).size() == 64);
}

TEST_CASE("init_state: eight species over four islands") {
  EsimConfig c;
  c.population = 8;
  Rng rng(1u);
  const PopulationState s = init_state(Problem::by_name(c.problem), c, rng);
  REQUIRE(s.islands.size() == 4);
  for (const auto& island : s.islands) CHECK(island.size() == 2);
}

TEST_CASE("init_state: deterministic under the seed") {
  EsimConfig c = tiny_config();
  const Problem p = Problem::by_name(c.problem);
  Rng r1(c.seed), r2(c.seed);
  const PopulationState a = init_state(p, c, r1);
  const PopulationState b = init_state(p, c, r2);
  for (std::size_t i = 0; i < a.islands.size(); ++i)
    for (std::size_t j = 0; j < a.islands[i].size(); ++j)
      CHECK((a.islands[i][j].phenotype == b.islands[i][j].phenotype).all());
}

TEST_CASE("context_of: co-members in island order, excluding the slot") {
  std::vector<Species> island(3);
  for (int i = 0; i < 3; ++i) {
    island[static_cast<std::size_t>(i)].id = i;
    island[static_cast<std::size_t>(i)].phenotype = make_phenotype({double(i), double(-i)});
  }
  const Context ctx = context_of(island, 1);
  REQUIRE(ctx.cols() == 2);
  CHECK(ctx(0, 0) == 0.0);
  CHECK(ctx(0, 1) == 2.0);
  const Context solo = context_of({island[0]}, 0);
  CHECK(solo.cols() == 0);
}

TEST_CASE("step_generation: single-species islands never accept") {
  EsimConfig c = tiny_config();
  c.population = 2;
  c.islands = 2;
  const Problem p = Problem::by_name(c.problem);
  Rng rng(3u);
  PopulationState s = init_state(p, c, rng);
  const Phenotype ph0 = s.islands[0][0].phenotype;
  const Phenotype ph1 = s.islands[1][0].phenotype;
  for (int g = 0; g < 20; ++g) s = step_generation(std::move(s), p, c, rng);
  CHECK(s.generation == 20);
  CHECK((s.islands[0][0].phenotype == ph0).all());
  CHECK((s.islands[1][0].phenotype == ph1).all());
}

TEST_CASE("step_generation: population at a strict optimum never moves") {
  // Every one-or-more-bit flip from the all-ones MMDP genome scores lower,
  // so every child is dominated by its parent and every island is unchanged.
  EsimConfig c;
  c.problem = "MMDP";
  c.population = 8;
  c.islands = 2;
  const Problem p = Problem::by_name(c.problem);
  PopulationState s;
  s.islands.resize(2);
  for (int id = 0; id < 8; ++id) {
    Species sp;
    sp.id = id;
    BitGenome ones(120);
    ones.setConstant(1);
    sp.genome = ones;
    sp.phenotype = evaluate(p, sp.genome);
    s.islands[static_cast<std::size_t>(id % 2)].push_back(std::move(sp));
  }
  Rng rng(4u);
  for (int g = 0; g < 10; ++g) s = step_generation(std::move(s), p, c, rng);
  for (const auto& island : s.islands)
    for (const Species& sp : island) CHECK(sp.phenotype[0] == -20.0);
}

TEST_CASE("step_generation: deterministic given the rng state") {
  EsimConfig c = tiny_config();
  const Problem p = Problem::by_name(c.problem);
  Rng ra(7u), rb(7u);
  PopulationState a = init_state(p, c, ra);
  PopulationState b = init_state(p, c, rb);
  a = step_generation(std::move(a), p, c, ra);
  b = step_generation(std::move(b), p, c, rb);
  for (std::size_t i = 0; i < a.islands.size(); ++i)
    for (std::size_t j = 0; j < a.islands[i].size(); ++j)
      CHECK((a.islands[i][j].phenotype == b.islands[i][j].phenotype).all());
}

TEST_CASE("migrate: swaps=0 keeps the state and records equal contexts") {
  EsimConfig c = tiny_config();
  const Problem p = Problem::by_name(c.problem);
  Rng rng(8u);
  PopulationState s = init_state(p, c, rng);
  const auto ids_before = id_multiset(s);
  auto [after, record] = migrate(s, 0, rng);
  CHECK(id_multiset(after) == ids_before);
  for (std::size_t i = 0; i < after.islands.size(); ++i)
    for (std::size_t j = 0; j < after.islands[i].size(); ++j)
      CHECK(after.islands[i][j].id == s.islands[i][j].id);
  REQUIRE(record.old_contexts.size() == 8);
  for (int id = 0; id < 8; ++id)
    CHECK(same_context(record.old_contexts[static_cast<std::size_t>(id)],
                       record.new_contexts[static_cast<std::size_t>(id)]));
}

TEST_CASE("migrate: swaps=1 exchanges exactly two species") {
  EsimConfig c;
  const Problem p = Problem::by_name(c.problem);
  Rng rng(9u);
  PopulationState s = init_state(p, c, rng);
  auto island_of = [](const PopulationState& st) {
    std::vector<int> where(static_cast<std::size_t>(st.population()), -1);
    for (std::size_t i = 0; i < st.islands.size(); ++i)
      for (const Species& sp : st.islands[i]) where[static_cast<std::size_t>(sp.id)] = static_cast<int>(i);
    return where;
  };
  const auto before = island_of(s);
  auto [after, record] = migrate(s, 1, rng);
  (void)record;
  const auto now = island_of(after);
  int moved = 0;
  for (std::size_t i = 0; i < now.size(); ++i) moved += now[i] != before[i];
  CHECK(moved == 2);
  for (const auto& island : after.islands) CHECK(island.size() == 16);
  CHECK(id_multiset(after) == id_multiset(s));
}

TEST_CASE("migrate: heavy swapping preserves sizes and ids") {
  EsimConfig c;
  const Problem p = Problem::by_name(c.problem);
  Rng rng(10u);
  PopulationState s = init_state(p, c, rng);
  auto [after, record] = migrate(s, 100, rng);
  for (const auto& island : after.islands) CHECK(island.size() == 16);
  CHECK(id_multiset(after) == id_multiset(s));
  // Context sizes in the record equal island size minus one.
  for (const Context& ctx : record.new_contexts) CHECK(ctx.cols() == 15);
}

TEST_CASE("migrate: contract violations") {
  EsimConfig c = tiny_config();
  const Problem p = Problem::by_name(c.problem);
  Rng rng(11u);
  PopulationState s = init_state(p, c, rng);
  CHECK_THROWS_AS(migrate(s, -1, rng), std::invalid_argument);
  PopulationState one;
  one.islands.push_back(s.islands[0]);
  // Records are indexed by species id, so a standalone state must keep its
  // ids dense.
  for (std::size_t i = 0; i < one.islands[0].size(); ++i)
    one.islands[0][i].id = static_cast<int>(i);
  CHECK_THROWS_AS(migrate(one, 1, rng), std::invalid_argument);
  auto [same, rec] = migrate(one, 0, rng);  // zero swaps are fine either way
  (void)rec;
  CHECK(same.islands.size() == 1);
}

TEST_CASE("migration_generations: interval arithmetic") {
  EsimConfig c;
  c.generations = 1500;
  c.migration_interval = 300;
  CHECK(migration_generations(c) == std::vector<int>{300, 600, 900, 1200, 1500});
  c.generations = 10;
  c.migration_interval = 3;
  CHECK(migration_generations(c) == std::vector<int>{3, 6, 9});
  c.generations = 5;
  c.migration_interval = 300;
  CHECK(migration_generations(c).empty());
}

TEST_CASE("run: trace shape and event bookkeeping") {
  EsimConfig c = tiny_config();
  const RunTrace trace = run(c);
  CHECK(trace.config.seed == c.seed);
  REQUIRE(trace.events.size() == 2);  // generations 10 and 20
  CHECK(trace.events[0].generation == 10);
  CHECK(trace.events[1].generation == 20);
  REQUIRE(trace.sensitivity.size() == 2);
  CHECK(trace.sensitivity[0].generation == 10);
  CHECK(trace.sensitivity[0].per_species.size() == 8);
  for (const SensitivityEvent& ev : trace.sensitivity) {
    CHECK(ev.mean == ev.per_species.mean());
    CHECK((ev.per_species >= 0.0).all());
    CHECK((ev.per_species <= 1.0).all());
  }
  // History: one row per generation plus the initial population.
  CHECK(trace.phenotype_history.rows() == 26);
  CHECK(trace.phenotype_history.cols() == 16);  // 8 species x 2 objectives
  CHECK(trace.archive().rows() == 25);
  CHECK(trace.archive().row(0) == trace.phenotype_history.row(1));
  // Activity series covers tau..generations.
  CHECK(trace.activity.first_generation == 5);
  CHECK(trace.activity.values.size() == 21);
  CHECK(trace.activity.last_generation() == 25);
  CHECK((trace.activity.values >= 0.0).all());
}

TEST_CASE("run: activity equals an offline recomputation, bitwise") {
  EsimConfig c = tiny_config();
  const RunTrace trace = run(c);
  const int mu = c.population;
  const int m = 2;
  for (int t = c.activity_window; t <= c.generations; ++t) {
    double sum = 0.0;
    for (int i = 0; i < mu; ++i)
      for (int j = 0; j < m; ++j)
        sum += std::abs(trace.phenotype_history(t, i * m + j) -
                        trace.phenotype_history(t - c.activity_window, i * m + j));
    const double expected = sum / (static_cast<double>(mu) * static_cast<double>(m));
    CHECK(trace.activity.at_generation(t) == expected);
  }
}

TEST_CASE("run: bitwise replay under the same seed") {
  EsimConfig c = tiny_config();
  const RunTrace a = run(c);
  const RunTrace b = run(c);
  CHECK(a.phenotype_history == b.phenotype_history);
  CHECK((a.activity.values == b.activity.values).all());
  REQUIRE(a.sensitivity.size() == b.sensitivity.size());
  for (std::size_t e = 0; e < a.sensitivity.size(); ++e)
    CHECK((a.sensitivity[e].per_species == b.sensitivity[e].per_species).all());
}

TEST_CASE("run: swaps=0 records events with unchanged contexts and zero S") {
  EsimConfig c = tiny_config();
  c.swaps = 0;
  const RunTrace trace = run(c);
  REQUIRE(trace.events.size() == 2);
  for (const MigrationRecord& rec : trace.events)
    for (std::size_t id = 0; id < rec.old_contexts.size(); ++id)
      CHECK(same_context(rec.old_contexts[id], rec.new_contexts[id]));
  for (const SensitivityEvent& ev : trace.sensitivity) {
    CHECK(ev.mean == 0.0);
    CHECK((ev.per_species == 0.0).all());
  }
}

TEST_CASE("run: single-objective values never worsen without migration") {
  EsimConfig c;
  c.problem = "Griewangk";
  c.population = 16;
  c.islands = 4;
  c.generations = 60;
  c.migration_interval = 30;
  c.swaps = 0;
  c.activity_window = 5;
  c.seed = 11;
  c.children_per_species = 2;
  const RunTrace trace = run(c);
  for (int i = 0; i < c.population; ++i)
    for (int t = 1; t <= c.generations; ++t)
      CHECK(trace.phenotype_history(t, i) <= trace.phenotype_history(t - 1, i));
}

TEST_CASE("island sizes and ids stay constant through stepping and migration") {
  EsimConfig c = tiny_config();
  const Problem p = Problem::by_name(c.problem);
  Rng rng(12u);
  PopulationState s = init_state(p, c, rng);
  const auto ids = id_multiset(s);
  for (int g = 1; g <= c.generations; ++g) {
    s = step_generation(std::move(s), p, c, rng);
    if (g % c.migration_interval == 0) {
      auto [next, record] = migrate(std::move(s), c.swaps, rng);
      s = std::move(next);
    }
    for (const auto& island : s.islands) CHECK(island.size() == 4);
    CHECK(id_multiset(s) == ids);
    CHECK(s.generation == g);
  }
}
