#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "esim/types.hpp"

namespace esim {

/// Invalid run or experiment configuration; `key` names the offending field.
struct ConfigError : std::runtime_error {
  ConfigError(std::string key_, const std::string& what_)
      : std::runtime_error("config error: " + key_ + ": " + what_), key(std::move(key_)) {}
  std::string key;
};

struct EsimConfig {
  std::string problem = "DTLZ3";
  int population = 64;           // mu, split evenly across islands
  int islands = 4;
  int generations = 1500;
  int migration_interval = 300;  // generations between migration events
  int swaps = 100;               // pair-wise exchanges per event; 0 disables
  int activity_window = 10;      // tau
  double sigma_fraction = 0.1;   // mutation step scale, fraction of gene range
  std::uint64_t seed = 1;
  int children_per_species = 100;  // landscape samples per sensitivity probe
};

/// Throws ConfigError naming the first invalid field.
void validate(const EsimConfig& config);

/// One mutating lineage. The id is assigned at initialization and never
/// changes; the phenotype always caches evaluate(genome).
struct Species {
  int id = 0;
  Genome genome;
  Phenotype phenotype;
};

struct PopulationState {
  std::vector<std::vector<Species>> islands;
  int generation = 0;

  int population() const {
    int n = 0;
    for (const auto& isl : islands) n += static_cast<int>(isl.size());
    return n;
  }
  Eigen::Index objectives() const { return islands.at(0).at(0).phenotype.size(); }
  /// Island and slot of a species id, or {-1, -1}.
  std::pair<int, int> locate(int id) const;
  const Species& at(int island, int slot) const {
    return islands[static_cast<std::size_t>(island)][static_cast<std::size_t>(slot)];
  }
};

/// Ranking context of one island slot: co-member phenotypes in island order,
/// excluding the slot itself.
Context context_of(const std::vector<Species>& island, std::size_t excluded_slot);

/// Per-species ranking contexts captured around one migration event,
/// indexed by species id.
struct MigrationRecord {
  int generation = 0;
  std::vector<Context> old_contexts;
  std::vector<Context> new_contexts;
};

}  // namespace esim
