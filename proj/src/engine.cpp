#include "esim/engine.hpp"

#include <algorithm>
#include <cassert>

#include "esim/dominance.hpp"

namespace esim {

PopulationState init_state(const Problem& problem, const EsimConfig& config, Rng& rng) {
  validate(config);
  if (problem.spec().name != config.problem && !Problem::is_known(config.problem))
    throw ConfigError("problem", "unknown problem '" + config.problem + "'");
  PopulationState state;
  state.islands.resize(static_cast<std::size_t>(config.islands));
  const std::size_t island_size =
      static_cast<std::size_t>(config.population / config.islands);
  for (auto& isl : state.islands) isl.reserve(island_size);
  for (int id = 0; id < config.population; ++id) {
    Species sp;
    sp.id = id;
    sp.genome = random_genome(problem, rng);
    sp.phenotype = evaluate(problem, sp.genome);
    state.islands[static_cast<std::size_t>(id % config.islands)].push_back(std::move(sp));
  }
  state.generation = 0;
  return state;
}

PopulationState step_generation(PopulationState state, const Problem& problem,
                                const EsimConfig& config, Rng& rng) {
  struct Candidate {
    Genome genome;
    Phenotype phenotype;
    bool accepted = false;
  };
  std::vector<std::vector<Candidate>> children(state.islands.size());

  // Children for every parent, judged against the pre-update islands.
  for (std::size_t k = 0; k < state.islands.size(); ++k) {
    const auto& island = state.islands[k];
    children[k].resize(island.size());
    for (std::size_t s = 0; s < island.size(); ++s) {
      Candidate& c = children[k][s];
      c.genome = mutate(problem, island[s].genome, config.sigma_fraction, rng);
      c.phenotype = evaluate(problem, c.genome);
      const Context ctx = context_of(island, s);
      c.accepted = accept_child(island[s].phenotype, c.phenotype, ctx);
    }
  }

  // Apply all replacements at once.
  for (std::size_t k = 0; k < state.islands.size(); ++k) {
    for (std::size_t s = 0; s < state.islands[k].size(); ++s) {
      Candidate& c = children[k][s];
      if (!c.accepted) continue;
      Species& sp = state.islands[k][s];
      assert(!dominates(sp.phenotype, c.phenotype));
      sp.genome = std::move(c.genome);
      sp.phenotype = std::move(c.phenotype);
    }
  }
  ++state.generation;
  return state;
}

std::pair<PopulationState, MigrationRecord> migrate(PopulationState state, int swaps, Rng& rng) {
  if (swaps < 0) throw std::invalid_argument("migrate: swaps must be non-negative");
  if (swaps > 0 && state.islands.size() < 2)
    throw std::invalid_argument("migrate: swaps need at least two islands");

  MigrationRecord record;
  record.generation = state.generation;
  const int mu = state.population();
  record.old_contexts.resize(static_cast<std::size_t>(mu));
  record.new_contexts.resize(static_cast<std::size_t>(mu));
  for (const auto& island : state.islands)
    for (std::size_t s = 0; s < island.size(); ++s)
      record.old_contexts[static_cast<std::size_t>(island[s].id)] = context_of(island, s);

  const int n_islands = static_cast<int>(state.islands.size());
  std::uniform_int_distribution<int> pick_island(0, n_islands - 1);
  for (int swap = 0; swap < swaps; ++swap) {
    const int a = pick_island(rng);
    int b = std::uniform_int_distribution<int>(0, n_islands - 2)(rng);
    if (b >= a) ++b;
    auto& island_a = state.islands[static_cast<std::size_t>(a)];
    auto& island_b = state.islands[static_cast<std::size_t>(b)];
    const auto sa = static_cast<std::size_t>(std::uniform_int_distribution<int>(
        0, static_cast<int>(island_a.size()) - 1)(rng));
    const auto sb = static_cast<std::size_t>(std::uniform_int_distribution<int>(
        0, static_cast<int>(island_b.size()) - 1)(rng));
    std::swap(island_a[sa], island_b[sb]);
  }

  for (const auto& island : state.islands)
    for (std::size_t s = 0; s < island.size(); ++s)
      record.new_contexts[static_cast<std::size_t>(island[s].id)] = context_of(island, s);
  return {std::move(state), std::move(record)};
}

std::vector<int> migration_generations(const EsimConfig& config) {
  std::vector<int> gens;
  for (int t = config.migration_interval; t <= config.generations;
       t += config.migration_interval)
    gens.push_back(t);
  return gens;
}

namespace {

void record_phenotypes(Eigen::MatrixXd& history, int row, const PopulationState& state) {
  const Eigen::Index m = state.objectives();
  for (const auto& island : state.islands)
    for (const Species& sp : island)
      history.row(row).segment(sp.id * m, m) = sp.phenotype.matrix().transpose();
}

}  // namespace

RunTrace run(const Problem& problem, const EsimConfig& config) {
  validate(config);
  Rng rng(config.seed);

  RunTrace trace;
  trace.config = config;

  PopulationState state = init_state(problem, config, rng);
  const Eigen::Index m = problem.spec().objectives;
  trace.phenotype_history.resize(config.generations + 1,
                                 static_cast<Eigen::Index>(config.population) * m);
  record_phenotypes(trace.phenotype_history, 0, state);

  trace.activity.first_generation = config.activity_window;
  trace.activity.values.resize(std::max(0, config.generations - config.activity_window + 1));

  for (int t = 1; t <= config.generations; ++t) {
    state = step_generation(std::move(state), problem, config, rng);
    record_phenotypes(trace.phenotype_history, t, state);
    if (t >= config.activity_window) {
      trace.activity.values[t - config.activity_window] =
          evolutionary_activity(trace.phenotype_history, t, config.activity_window,
                                config.population, static_cast<int>(m));
    }
    if (config.migration_interval > 0 && t % config.migration_interval == 0) {
      auto [migrated, record] = migrate(std::move(state), config.swaps, rng);
      state = std::move(migrated);
      trace.sensitivity.push_back(sensitivity_event(record, state, problem, config, rng));
      trace.events.push_back(std::move(record));
    }
  }
  return trace;
}

RunTrace run(const EsimConfig& config) {
  validate(config);
  return run(Problem::by_name(config.problem), config);
}

}  // namespace esim
