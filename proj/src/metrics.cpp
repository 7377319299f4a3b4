#include "esim/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "esim/dominance.hpp"

namespace esim {

double context_sensitivity(const Species& species, const Context& old_context,
                           const Context& new_context, int children, const Problem& problem,
                           double sigma_fraction, Rng& rng) {
  if (children < 1) throw std::invalid_argument("context_sensitivity: children must be >= 1");
  int differing = 0;
  for (int c = 0; c < children; ++c) {
    const Genome child = mutate(problem, species.genome, sigma_fraction, rng);
    const Phenotype ph = evaluate(problem, child);
    const bool before = accept_child(species.phenotype, ph, old_context);
    const bool after = accept_child(species.phenotype, ph, new_context);
    if (before != after) ++differing;
  }
  return static_cast<double>(differing) / static_cast<double>(children);
}

SensitivityEvent sensitivity_event(const MigrationRecord& record, const PopulationState& state,
                                   const Problem& problem, const EsimConfig& config, Rng& rng) {
  const int mu = state.population();
  if (static_cast<int>(record.old_contexts.size()) != mu ||
      static_cast<int>(record.new_contexts.size()) != mu)
    throw std::invalid_argument("sensitivity_event: record incomplete");
  SensitivityEvent event;
  event.generation = record.generation;
  event.per_species.resize(mu);
  for (int id = 0; id < mu; ++id) {
    const auto [island, slot] = state.locate(id);
    if (island < 0) throw std::logic_error("sensitivity_event: species id missing");
    event.per_species[id] = context_sensitivity(
        state.at(island, slot), record.old_contexts[static_cast<std::size_t>(id)],
        record.new_contexts[static_cast<std::size_t>(id)], config.children_per_species, problem,
        config.sigma_fraction, rng);
  }
  event.mean = event.per_species.mean();
  return event;
}

double evolutionary_activity(const Eigen::Ref<const Eigen::MatrixXd>& history, int t, int window,
                             int population, int objectives) {
  if (window < 1 || t < window) throw std::invalid_argument("evolutionary_activity: need t >= window >= 1");
  if (t >= history.rows() || history.cols() != static_cast<Eigen::Index>(population) * objectives)
    throw std::invalid_argument("evolutionary_activity: history does not cover the request");
  double sum = 0.0;
  for (int i = 0; i < population; ++i)
    for (int j = 0; j < objectives; ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(i) * objectives + j;
      sum += std::abs(history(t, col) - history(t - window, col));
    }
  return sum / (static_cast<double>(population) * static_cast<double>(objectives));
}

namespace {

// U statistic for "b above a": one point per (a, b) pair with b > a, half a
// point per tie.
double u_statistic(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double vb : b)
    for (double va : a) {
      if (vb > va)
        u += 1.0;
      else if (vb == va)
        u += 0.5;
    }
  return u;
}

// Exact upper tail for tie-free samples by counting label arrangements with
// the classic recurrence: scanning pooled values largest-first, labeling the
// current value "b" adds one U point per remaining "a", labeling it "a" adds
// none, so c(m, n, u) = c(m, n-1, u-m) + c(m-1, n, u). Counts stay below 2^53,
// so doubles hold them exactly and the result matches full enumeration bit for
// bit.
double exact_tail_distinct(std::size_t na, std::size_t nb, double observed) {
  const std::size_t umax = na * nb;
  std::vector<std::vector<double>> counts(na + 1, std::vector<double>(umax + 1, 0.0));
  for (std::size_t m = 0; m <= na; ++m) counts[m][0] = 1.0;
  for (std::size_t n = 1; n <= nb; ++n) {
    std::vector<std::vector<double>> next(na + 1, std::vector<double>(umax + 1, 0.0));
    next[0][0] = 1.0;
    for (std::size_t m = 1; m <= na; ++m)
      for (std::size_t u = 0; u <= umax; ++u)
        next[m][u] = (u >= m ? counts[m][u - m] : 0.0) + next[m - 1][u];
    counts = std::move(next);
  }
  double total = 0.0, at_least = 0.0;
  for (std::size_t u = 0; u <= umax; ++u) {
    total += counts[na][u];
    if (static_cast<double>(u) >= observed) at_least += counts[na][u];
  }
  return at_least / total;
}

double exact_tail(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double observed = u_statistic(a, b);
  std::sort(pooled.begin(), pooled.end());

  // Runs of equal pooled values, as bitmasks over sorted positions.
  std::vector<std::uint64_t> group_bits;
  std::vector<double> group_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::uint64_t bits = 0;
    while (j < n && pooled[j] == pooled[i]) bits |= std::uint64_t{1} << j++;
    group_bits.push_back(bits);
    group_sizes.push_back(static_cast<double>(j - i));
    i = j;
  }
  if (group_bits.size() == n) return exact_tail_distinct(a.size(), b.size(), observed);

  // Ties present: enumerate every assignment of |b| pooled positions to the
  // "b" side (Gosper's hack over n-bit masks) and accumulate the upper tail.
  // Scanning value groups in ascending order keeps each mask's U at
  // O(groups): a "b" scores one point per lower "a" and half per tied "a".
  std::uint64_t mask = (std::uint64_t{1} << b.size()) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n;
  std::uint64_t total = 0, at_least = 0;
  while (mask < limit) {
    double u = 0.0, a_below = 0.0;
    for (std::size_t g = 0; g < group_bits.size(); ++g) {
      const double cb = static_cast<double>(std::popcount(mask & group_bits[g]));
      const double ca = group_sizes[g] - cb;
      u += cb * a_below + 0.5 * cb * ca;
      a_below += ca;
    }
    ++total;
    if (u >= observed) ++at_least;
    // next mask with the same popcount
    const std::uint64_t c = mask & (~mask + 1);
    const std::uint64_t r = mask + c;
    if (r >= limit || c == 0) break;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  return static_cast<double>(at_least) / static_cast<double>(total);
}

double normal_tail(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double u = u_statistic(a, b);

  // Tie correction from the pooled multiset.
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (variance <= 0.0) return 1.0;  // every pooled value identical
  const double z = (u - na * nb / 2.0 - 0.5) / std::sqrt(variance);
  const double p = 0.5 * std::erfc(z / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

double mann_whitney_one_sided(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("mann_whitney_one_sided: samples must be non-empty");
  if (a.size() + b.size() <= kMannWhitneyExactLimit) return exact_tail(a, b);
  return normal_tail(a, b);
}

SignificanceReport significance_scan(const std::vector<ActivitySeries>& per_run,
                                     const std::vector<int>& event_generations,
                                     int attribution_window, double alpha, int pool) {
  if (per_run.size() < 2)
    throw std::invalid_argument("significance_scan: need at least two runs");
  if (pool < 1) throw std::invalid_argument("significance_scan: pool must be >= 1");
  const int first = per_run.front().first_generation;
  const Eigen::Index len = per_run.front().values.size();
  for (const ActivitySeries& s : per_run)
    if (s.first_generation != first || s.values.size() != len)
      throw std::invalid_argument("significance_scan: misaligned activity series");

  SignificanceReport report;
  report.first_generation = first + pool;
  const int last = first + static_cast<int>(len) - 1;

  std::vector<double> sample_a, sample_b;
  sample_a.reserve(per_run.size() * static_cast<std::size_t>(pool));
  sample_b.reserve(per_run.size() * static_cast<std::size_t>(pool));
  for (int t = report.first_generation; t + pool - 1 <= last; ++t) {
    sample_a.clear();
    sample_b.clear();
    for (const ActivitySeries& s : per_run) {
      for (int k = 0; k < pool; ++k) {
        sample_a.push_back(s.at_generation(t - 1 - k));
        sample_b.push_back(s.at_generation(t + k));
      }
    }
    const double p = mann_whitney_one_sided(sample_a, sample_b);
    const bool flag = p < alpha;
    bool attributed = false;
    for (int g : event_generations)
      if (t > g && t <= g + attribution_window) attributed = true;
    report.p_values.push_back(p);
    report.flagged.push_back(flag ? 1 : 0);
    report.migration_attributed.push_back(attributed ? 1 : 0);
    if (flag) (attributed ? report.flagged_migration : report.flagged_elsewhere).push_back(t);
  }
  return report;
}

}  // namespace esim
