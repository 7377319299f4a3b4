#include "esim/state.hpp"

#include "esim/problems.hpp"

namespace esim {

void validate(const EsimConfig& config) {
  if (!Problem::is_known(config.problem))
    throw ConfigError("problem", "unknown problem '" + config.problem + "'");
  if (config.islands < 1) throw ConfigError("islands", "need at least one island");
  if (config.population < 1) throw ConfigError("mu", "population must be positive");
  if (config.population % config.islands != 0)
    throw ConfigError("mu", "population " + std::to_string(config.population) +
                                " not divisible by islands " + std::to_string(config.islands));
  if (config.generations < 1) throw ConfigError("generations", "must be at least 1");
  if (config.activity_window < 1) throw ConfigError("tau", "must be at least 1");
  if (config.migration_interval <= config.activity_window)
    throw ConfigError("migration_interval",
                      "must exceed tau (" + std::to_string(config.activity_window) + ")");
  if (config.swaps < 0) throw ConfigError("swaps", "must be non-negative");
  if (config.swaps > 0 && config.islands < 2)
    throw ConfigError("swaps", "swaps need at least two islands");
  if (!(config.sigma_fraction > 0.0))
    throw ConfigError("sigma_fraction", "must be positive");
  if (config.children_per_species < 1)
    throw ConfigError("children_per_species", "must be at least 1");
}

std::pair<int, int> PopulationState::locate(int id) const {
  for (std::size_t k = 0; k < islands.size(); ++k)
    for (std::size_t s = 0; s < islands[k].size(); ++s)
      if (islands[k][s].id == id) return {static_cast<int>(k), static_cast<int>(s)};
  return {-1, -1};
}

Context context_of(const std::vector<Species>& island, std::size_t excluded_slot) {
  const Eigen::Index m = island.at(excluded_slot).phenotype.size();
  Context ctx(m, static_cast<Eigen::Index>(island.size()) - 1);
  Eigen::Index col = 0;
  for (std::size_t s = 0; s < island.size(); ++s) {
    if (s == excluded_slot) continue;
    ctx.col(col++) = island[s].phenotype.matrix();
  }
  return ctx;
}

}  // namespace esim
