#pragma once

#include <utility>
#include <vector>

#include "esim/metrics.hpp"
#include "esim/problems.hpp"
#include "esim/state.hpp"

namespace esim {

/// Complete record of one run.
struct RunTrace {
  EsimConfig config;
  /// Row t = phenotypes after generation t (row 0 = initial population);
  /// generations + 1 rows. Column layout is species-major: species id i,
  /// objective j at column i*m + j. The per-generation archive proper is
  /// rows 1..generations.
  Eigen::MatrixXd phenotype_history;
  ActivitySeries activity;  // generations activity_window..generations
  std::vector<MigrationRecord> events;
  std::vector<SensitivityEvent> sensitivity;

  auto archive() const { return phenotype_history.bottomRows(phenotype_history.rows() - 1); }
};

/// Random population split round-robin into equally sized islands,
/// generation 0, species ids 0..population-1.
PopulationState init_state(const Problem& problem, const EsimConfig& config, Rng& rng);

/// One synchronous generation: every parent produces one mutant child, all
/// replacement decisions are taken against the pre-update islands, then the
/// accepted children are installed and the generation counter advances.
PopulationState step_generation(PopulationState state, const Problem& problem,
                                const EsimConfig& config, Rng& rng);

/// `swaps` sequential pair-wise exchanges, each between one uniformly chosen
/// occupant of each of two distinct uniformly chosen islands. The record
/// captures every species' ranking context before and after the whole event.
std::pair<PopulationState, MigrationRecord> migrate(PopulationState state, int swaps, Rng& rng);

/// Event generations of a config: every multiple of migration_interval in
/// [1, generations].
std::vector<int> migration_generations(const EsimConfig& config);

/// Full ESIM run: seeded from config.seed, one RNG stream consumed in a
/// fixed order (initialization, then per generation mutation children in
/// island order, then at event generations the swaps followed by the
/// sensitivity probes in species-id order).
RunTrace run(const Problem& problem, const EsimConfig& config);
RunTrace run(const EsimConfig& config);

}  // namespace esim
