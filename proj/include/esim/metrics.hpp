#pragma once

#include <span>
#include <vector>

#include "esim/problems.hpp"
#include "esim/state.hpp"

namespace esim {

/// Mean per-objective phenotype displacement over a trailing window,
/// indexed by generation. values[k] belongs to generation
/// first_generation + k.
struct ActivitySeries {
  int first_generation = 0;
  Eigen::ArrayXd values;

  int last_generation() const {
    return first_generation + static_cast<int>(values.size()) - 1;
  }
  Scalar at_generation(int t) const { return values[t - first_generation]; }
};

/// Sensitivity probe of one migration event: per-species fractions of
/// mutant children whose replacement outcome differs between the old and
/// new contexts, plus their mean (the event-level S).
struct SensitivityEvent {
  int generation = 0;
  Eigen::ArrayXd per_species;  // indexed by species id
  double mean = 0.0;
};

/// Fraction of `children` fresh mutants of the species whose replacement
/// decision differs between the two contexts. Both decisions use the same
/// child against the species' current phenotype as parent.
double context_sensitivity(const Species& species, const Context& old_context,
                           const Context& new_context, int children, const Problem& problem,
                           double sigma_fraction, Rng& rng);

/// Event-level S: context_sensitivity averaged over every species in the
/// record, in species-id order.
SensitivityEvent sensitivity_event(const MigrationRecord& record, const PopulationState& state,
                                   const Problem& problem, const EsimConfig& config, Rng& rng);

/// Mean absolute per-objective displacement between generations t and
/// t - window. `history` holds one generation per row (row index =
/// generation, starting at generation 0) and one column per species
/// objective, species-major.
double evolutionary_activity(const Eigen::Ref<const Eigen::MatrixXd>& history, int t, int window,
                             int population, int objectives);

/// One-sided Mann-Whitney p-value for the alternative "b stochastically
/// greater than a". Exact permutation enumeration when the combined size is
/// at most kMannWhitneyExactLimit; tie-corrected normal approximation with
/// continuity correction above that.
double mann_whitney_one_sided(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kMannWhitneyExactLimit = 20;

/// Per-generation scan of across-run activity distributions.
struct SignificanceReport {
  int first_generation = 0;          // first tested generation (t vs t-1)
  std::vector<double> p_values;
  std::vector<char> flagged;             // p < alpha
  std::vector<char> migration_attributed;  // within an event's attribution window
  std::vector<int> flagged_migration;    // flagged generations inside windows
  std::vector<int> flagged_elsewhere;    // flagged generations outside windows

  bool attributed_at(int t) const {
    return migration_attributed[static_cast<std::size_t>(t - first_generation)] != 0;
  }
  bool flagged_at(int t) const {
    return flagged[static_cast<std::size_t>(t - first_generation)] != 0;
  }
  double p_at(int t) const { return p_values[static_cast<std::size_t>(t - first_generation)]; }
};

/// For each generation t, tests whether the across-run distribution of
/// activity at t sits above the one at t-1 (one-sided, flag at p < alpha).
/// A flag at t is attributed to a migration event at generation g when
/// g < t <= g + attribution_window, i.e. while the two compared activity
/// windows still straddle the event. `pool` > 1 widens each sample to that
/// many consecutive generations.
SignificanceReport significance_scan(const std::vector<ActivitySeries>& per_run,
                                     const std::vector<int>& event_generations,
                                     int attribution_window, double alpha = 0.01, int pool = 1);

}  // namespace esim
