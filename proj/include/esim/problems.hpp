#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "esim/types.hpp"

namespace esim {

enum class Encoding { real_vector, bit_vector };
enum class Orientation { minimize, maximize };

struct ProblemSpec {
  std::string name;
  Eigen::Index genes = 0;       // n
  Eigen::Index objectives = 0;  // m
  Encoding encoding = Encoding::real_vector;
  Eigen::ArrayXd lower, upper;            // per-gene bounds, real encoding only
  std::vector<Orientation> orientation;   // raw orientation per objective
};

/// One scheduled task of the tardy-task benchmark.
struct MttpTask {
  long length = 0;
  long deadline = 0;
  long weight = 0;
};

/// A benchmark problem: static description plus a raw (native-orientation)
/// evaluation function. Immutable after construction, safe to share across
/// threads.
class Problem {
 public:
  using RawEval = std::function<Eigen::ArrayXd(const Genome&)>;

  Problem(ProblemSpec spec, RawEval raw_eval);

  /// Factory for the bundled benchmark suite (see suite() for the names).
  static Problem by_name(std::string_view name);
  static const std::vector<std::string>& suite();
  static bool is_known(std::string_view name);

  /// Tardy-task instance from a text file: one "length deadline weight" line
  /// per task, '#' lines ignored.
  static Problem mttp_from_file(const std::filesystem::path& file);
  static Problem mttp_from_text(std::string_view text, std::string_view name = "MTTP");
  static std::vector<MttpTask> parse_mttp(std::string_view text);

  const ProblemSpec& spec() const { return spec_; }
  /// +1 per minimized objective, -1 per maximized one.
  const Eigen::ArrayXd& sign() const { return sign_; }
  const RawEval& raw_eval() const { return raw_eval_; }

 private:
  ProblemSpec spec_;
  RawEval raw_eval_;
  Eigen::ArrayXd sign_;
};

/// True iff the genome matches the problem's encoding, length and bounds.
bool genome_valid(const Problem& problem, const Genome& genome);

/// Objective values in the problem's native orientation.
Eigen::ArrayXd evaluate_raw(const Problem& problem, const Genome& genome);

/// Internal minimization phenotype: maximized objectives are negated.
/// Deterministic and side-effect free; rejects invalid genomes.
Phenotype evaluate(const Problem& problem, const Genome& genome);

/// Copies the genome, mutating each gene independently with probability
/// 2/n. Real genes take a Normal(0, sigma_fraction*(upper-lower)) step and
/// are clamped to the bounds; bits flip. Passes that leave the genome
/// unchanged are resampled, so the result always differs in at least one
/// gene.
Genome mutate(const Problem& problem, const Genome& genome, double sigma_fraction, Rng& rng);

/// Uniform genome: per-gene uniform within bounds, or a fair coin per bit.
Genome random_genome(const Problem& problem, Rng& rng);

namespace detail {
/// One mutation pass without the forced-change retry; returns whether any
/// gene value changed.
bool mutate_pass(const Problem& problem, const Genome& in, Genome& out, double sigma_fraction,
                 Rng& rng);
}  // namespace detail

}  // namespace esim
