#include "esim/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "esim/mttp200_data.hpp"

namespace esim {
namespace {

const RealGenome& reals(const Genome& g) { return std::get<RealGenome>(g); }
const BitGenome& bits(const Genome& g) { return std::get<BitGenome>(g); }

ProblemSpec real_spec(std::string name, Eigen::Index n, Eigen::Index m, double lo, double hi,
                      std::vector<Orientation> orientation) {
  ProblemSpec s;
  s.name = std::move(name);
  s.genes = n;
  s.objectives = m;
  s.encoding = Encoding::real_vector;
  s.lower = Eigen::ArrayXd::Constant(n, lo);
  s.upper = Eigen::ArrayXd::Constant(n, hi);
  s.orientation = std::move(orientation);
  return s;
}

ProblemSpec bit_spec(std::string name, Eigen::Index n, std::vector<Orientation> orientation) {
  ProblemSpec s;
  s.name = std::move(name);
  s.genes = n;
  s.objectives = static_cast<Eigen::Index>(orientation.size());
  s.encoding = Encoding::bit_vector;
  s.orientation = std::move(orientation);
  return s;
}

constexpr double kPi = std::numbers::pi;

// DTLZ distance functions over the trailing k = n - m + 1 genes.
double dtlz_g_rastrigin(const RealGenome& x, Eigen::Index first) {
  const auto tail = x.tail(x.size() - first);
  const Eigen::ArrayXd z = tail - 0.5;
  return 100.0 * (static_cast<double>(z.size()) + (z.square() - (20.0 * kPi * z).cos()).sum());
}

double dtlz_g_sphere(const RealGenome& x, Eigen::Index first) {
  return (x.tail(x.size() - first) - 0.5).square().sum();
}

Eigen::ArrayXd dtlz1_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  const double gv = dtlz_g_rastrigin(x, 1);
  Eigen::ArrayXd f(2);
  f << 0.5 * x[0] * (1.0 + gv), 0.5 * (1.0 - x[0]) * (1.0 + gv);
  return f;
}

Eigen::ArrayXd dtlz_arc(double theta01, double gv) {
  Eigen::ArrayXd f(2);
  f << (1.0 + gv) * std::cos(theta01 * kPi / 2.0), (1.0 + gv) * std::sin(theta01 * kPi / 2.0);
  return f;
}

Eigen::ArrayXd dtlz2_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  return dtlz_arc(x[0], dtlz_g_sphere(x, 1));
}

Eigen::ArrayXd dtlz3_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  return dtlz_arc(x[0], dtlz_g_rastrigin(x, 1));
}

Eigen::ArrayXd dtlz4_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  return dtlz_arc(std::pow(x[0], 100.0), dtlz_g_sphere(x, 1));
}

Eigen::ArrayXd zdt3_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  const double f1 = x[0];
  const double gv = 1.0 + 9.0 * x.tail(x.size() - 1).sum() / static_cast<double>(x.size() - 1);
  const double r = f1 / gv;
  Eigen::ArrayXd f(2);
  f << f1, gv * (1.0 - std::sqrt(r) - r * std::sin(10.0 * kPi * f1));
  return f;
}

Eigen::ArrayXd zdt4_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  const double f1 = x[0];
  const auto tail = x.tail(x.size() - 1);
  const double gv = 1.0 + 10.0 * static_cast<double>(tail.size()) +
                    (tail.square() - 10.0 * (4.0 * kPi * tail).cos()).sum();
  Eigen::ArrayXd f(2);
  f << f1, gv * (1.0 - std::sqrt(f1 / gv));
  return f;
}

Eigen::ArrayXd griewangk_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  double prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  Eigen::ArrayXd f(1);
  f << x.square().sum() / 4000.0 - prod + 1.0;
  return f;
}

Eigen::ArrayXd hyper_ellipsoid_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += static_cast<double>(i + 1) * x[i] * x[i];
  Eigen::ArrayXd f(1);
  f << s;
  return f;
}

// Frequency-modulation sound matching: fit the six parameters of a nested
// sine wave to a fixed target signal, squared error over t = 0..100.
double fm_wave(double a1, double w1, double a2, double w2, double a3, double w3, double t) {
  constexpr double theta = 2.0 * kPi / 100.0;
  return a1 * std::sin(w1 * t * theta + a2 * std::sin(w2 * t * theta + a3 * std::sin(w3 * t * theta)));
}

Eigen::ArrayXd fm_eval(const Genome& g) {
  const RealGenome& x = reals(g);
  double err = 0.0;
  for (int t = 0; t <= 100; ++t) {
    const double y = fm_wave(x[0], x[1], x[2], x[3], x[4], x[5], t);
    const double y0 = fm_wave(1.0, 5.0, -1.5, 4.8, 2.0, 4.9, t);
    err += (y - y0) * (y - y0);
  }
  Eigen::ArrayXd f(1);
  f << err;
  return f;
}

// Error-correcting code design: 24 codewords of 12 bits; maximize
// 1 / sum_{i != j} d_ij^-2 (ordered pairs, Hamming distance d). Any duplicate
// codewords give the worst possible raw fitness, 0.
constexpr int kEccWords = 24;
constexpr int kEccBits = 12;

Eigen::ArrayXd ecc_eval(const Genome& g) {
  const BitGenome& b = bits(g);
  std::uint32_t words[kEccWords];
  for (int i = 0; i < kEccWords; ++i) {
    std::uint32_t w = 0;
    for (int j = 0; j < kEccBits; ++j) w = (w << 1) | b[i * kEccBits + j];
    words[i] = w;
  }
  double s = 0.0;
  bool duplicate = false;
  for (int i = 0; i < kEccWords && !duplicate; ++i) {
    for (int j = i + 1; j < kEccWords; ++j) {
      const int d = std::popcount(words[i] ^ words[j]);
      if (d == 0) {
        duplicate = true;
        break;
      }
      s += 2.0 / (static_cast<double>(d) * static_cast<double>(d));
    }
  }
  Eigen::ArrayXd f(1);
  f << (duplicate ? 0.0 : 1.0 / s);
  return f;
}

// Massively multimodal deceptive problem: 20 six-bit blocks scored by
// unitation, maximize the sum (peak value 20).
constexpr double kMmdpUnitation[7] = {1.0, 0.0, 0.360384, 0.640576, 0.360384, 0.0, 1.0};

Eigen::ArrayXd mmdp_eval(const Genome& g) {
  const BitGenome& b = bits(g);
  double s = 0.0;
  for (Eigen::Index block = 0; block < b.size() / 6; ++block) {
    int u = 0;
    for (Eigen::Index j = 0; j < 6; ++j) u += b[block * 6 + j];
    s += kMmdpUnitation[u];
  }
  Eigen::ArrayXd f(1);
  f << s;
  return f;
}

// Tardy-task decoding: selected tasks run in earliest-deadline-first order;
// a selected task that would finish late is dropped. The objective is the
// total weight of tardy tasks (dropped plus unselected), minimized.
struct MttpInstance {
  std::vector<MttpTask> tasks;      // file order, bit i selects tasks[i]
  std::vector<std::size_t> edd;     // task indices sorted by deadline
  double total_weight = 0;
};

MttpInstance make_mttp_instance(std::vector<MttpTask> tasks) {
  MttpInstance inst;
  inst.tasks = std::move(tasks);
  inst.edd.resize(inst.tasks.size());
  for (std::size_t i = 0; i < inst.edd.size(); ++i) inst.edd[i] = i;
  std::stable_sort(inst.edd.begin(), inst.edd.end(), [&](std::size_t a, std::size_t b) {
    return inst.tasks[a].deadline < inst.tasks[b].deadline;
  });
  for (const MttpTask& t : inst.tasks) inst.total_weight += static_cast<double>(t.weight);
  return inst;
}

Eigen::ArrayXd mttp_eval(const MttpInstance& inst, const Genome& g) {
  const BitGenome& b = bits(g);
  long now = 0;
  double scheduled_weight = 0.0;
  for (std::size_t idx : inst.edd) {
    if (!b[static_cast<Eigen::Index>(idx)]) continue;
    const MttpTask& t = inst.tasks[idx];
    if (now + t.length <= t.deadline) {
      now += t.length;
      scheduled_weight += static_cast<double>(t.weight);
    }
  }
  Eigen::ArrayXd f(1);
  f << inst.total_weight - scheduled_weight;
  return f;
}

}  // namespace

Problem::Problem(ProblemSpec spec, RawEval raw_eval)
    : spec_(std::move(spec)), raw_eval_(std::move(raw_eval)) {
  if (spec_.genes <= 0 || spec_.objectives <= 0)
    throw std::invalid_argument("Problem: genes and objectives must be positive");
  if (spec_.encoding == Encoding::real_vector) {
    if (spec_.lower.size() != spec_.genes || spec_.upper.size() != spec_.genes)
      throw std::invalid_argument("Problem: bounds must cover every gene");
    if (!(spec_.lower < spec_.upper).all() || !spec_.lower.isFinite().all() ||
        !spec_.upper.isFinite().all())
      throw std::invalid_argument("Problem: bounds must be finite with lower < upper");
  }
  if (static_cast<Eigen::Index>(spec_.orientation.size()) != spec_.objectives)
    throw std::invalid_argument("Problem: one orientation per objective required");
  sign_ = Eigen::ArrayXd::Ones(spec_.objectives);
  for (Eigen::Index j = 0; j < spec_.objectives; ++j)
    if (spec_.orientation[static_cast<std::size_t>(j)] == Orientation::maximize) sign_[j] = -1.0;
}

const std::vector<std::string>& Problem::suite() {
  static const std::vector<std::string> names = {
      "DTLZ1", "DTLZ2",     "DTLZ3", "DTLZ4",           "ZDT3", "ZDT4",
      "ECC",   "Griewangk", "FM",    "Hyper-ellipsoid", "MMDP", "MTTP"};
  return names;
}

bool Problem::is_known(std::string_view name) {
  for (const std::string& n : suite()) {
    if (n.size() != name.size()) continue;
    bool eq = true;
    for (std::size_t i = 0; i < n.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(n[i])) !=
          std::tolower(static_cast<unsigned char>(name[i])))
        eq = false;
    if (eq) return true;
  }
  return false;
}

Problem Problem::by_name(std::string_view name) {
  std::string key(name);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  const std::vector<Orientation> min2 = {Orientation::minimize, Orientation::minimize};
  const std::vector<Orientation> min1 = {Orientation::minimize};
  const std::vector<Orientation> max1 = {Orientation::maximize};

  if (key == "dtlz1") return Problem(real_spec("DTLZ1", 20, 2, 0.0, 1.0, min2), dtlz1_eval);
  if (key == "dtlz2") return Problem(real_spec("DTLZ2", 20, 2, 0.0, 1.0, min2), dtlz2_eval);
  if (key == "dtlz3") return Problem(real_spec("DTLZ3", 20, 2, 0.0, 1.0, min2), dtlz3_eval);
  if (key == "dtlz4") return Problem(real_spec("DTLZ4", 20, 2, 0.0, 1.0, min2), dtlz4_eval);
  if (key == "zdt3") return Problem(real_spec("ZDT3", 30, 2, 0.0, 1.0, min2), zdt3_eval);
  if (key == "zdt4") {
    ProblemSpec s = real_spec("ZDT4", 10, 2, -5.0, 5.0, min2);
    s.lower[0] = 0.0;  // position gene lives on [0, 1]
    s.upper[0] = 1.0;
    return Problem(std::move(s), zdt4_eval);
  }
  if (key == "griewangk")
    return Problem(real_spec("Griewangk", 10, 1, -600.0, 600.0, min1), griewangk_eval);
  if (key == "hyper-ellipsoid" || key == "hyperellipsoid")
    return Problem(real_spec("Hyper-ellipsoid", 30, 1, -5.12, 5.12, min1), hyper_ellipsoid_eval);
  if (key == "fm") return Problem(real_spec("FM", 6, 1, -6.4, 6.35, min1), fm_eval);
  if (key == "ecc")
    return Problem(bit_spec("ECC", kEccWords * kEccBits, max1), ecc_eval);
  if (key == "mmdp") return Problem(bit_spec("MMDP", 120, max1), mmdp_eval);
  if (key == "mttp") return mttp_from_text(kMttp200Text);
  throw std::invalid_argument("unknown problem: " + std::string(name));
}

std::vector<MttpTask> Problem::parse_mttp(std::string_view text) {
  std::vector<MttpTask> tasks;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    MttpTask t;
    if (!(fields >> t.length >> t.deadline >> t.weight) || t.length < 0 || t.deadline < 0 ||
        t.weight < 0) {
      throw std::invalid_argument("mttp instance: bad task line " + std::to_string(line_no));
    }
    std::string extra;
    if (fields >> extra)
      throw std::invalid_argument("mttp instance: trailing fields on line " + std::to_string(line_no));
    tasks.push_back(t);
  }
  if (tasks.empty()) throw std::invalid_argument("mttp instance: no tasks");
  return tasks;
}

Problem Problem::mttp_from_text(std::string_view text, std::string_view name) {
  auto inst = std::make_shared<MttpInstance>(make_mttp_instance(parse_mttp(text)));
  ProblemSpec s = bit_spec(std::string(name), static_cast<Eigen::Index>(inst->tasks.size()),
                           {Orientation::minimize});
  return Problem(std::move(s), [inst](const Genome& g) { return mttp_eval(*inst, g); });
}

Problem Problem::mttp_from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("mttp instance: cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return mttp_from_text(buf.str());
}

bool genome_valid(const Problem& problem, const Genome& genome) {
  const ProblemSpec& s = problem.spec();
  if (s.encoding == Encoding::real_vector) {
    if (!std::holds_alternative<RealGenome>(genome)) return false;
    const RealGenome& x = reals(genome);
    return x.size() == s.genes && x.isFinite().all() && (x >= s.lower).all() &&
           (x <= s.upper).all();
  }
  if (!std::holds_alternative<BitGenome>(genome)) return false;
  const BitGenome& b = bits(genome);
  return b.size() == s.genes && (b <= 1).all();
}

Eigen::ArrayXd evaluate_raw(const Problem& problem, const Genome& genome) {
  if (!genome_valid(problem, genome))
    throw std::invalid_argument("evaluate: genome invalid for " + problem.spec().name);
  Eigen::ArrayXd raw = problem.raw_eval()(genome);
  if (raw.size() != problem.spec().objectives || !raw.isFinite().all())
    throw std::logic_error("evaluate: non-finite or mis-sized objectives from " +
                           problem.spec().name);
  return raw;
}

Phenotype evaluate(const Problem& problem, const Genome& genome) {
  return evaluate_raw(problem, genome) * problem.sign();
}

namespace detail {

bool mutate_pass(const Problem& problem, const Genome& in, Genome& out, double sigma_fraction,
                 Rng& rng) {
  const ProblemSpec& s = problem.spec();
  const double rate = 2.0 / static_cast<double>(s.genes);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  bool changed = false;
  out = in;
  if (s.encoding == Encoding::real_vector) {
    RealGenome& x = std::get<RealGenome>(out);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (coin(rng) >= rate) continue;
      const double sigma = sigma_fraction * (s.upper[i] - s.lower[i]);
      const double stepped = x[i] + std::normal_distribution<double>(0.0, sigma)(rng);
      const double clamped = std::clamp(stepped, s.lower[i], s.upper[i]);
      changed |= clamped != x[i];
      x[i] = clamped;
    }
  } else {
    BitGenome& b = std::get<BitGenome>(out);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (coin(rng) >= rate) continue;
      b[i] = static_cast<std::uint8_t>(1 - b[i]);
      changed = true;
    }
  }
  return changed;
}

}  // namespace detail

Genome mutate(const Problem& problem, const Genome& genome, double sigma_fraction, Rng& rng) {
  if (!genome_valid(problem, genome))
    throw std::invalid_argument("mutate: genome invalid for " + problem.spec().name);
  Genome child;
  while (!detail::mutate_pass(problem, genome, child, sigma_fraction, rng)) {
  }
  return child;
}

Genome random_genome(const Problem& problem, Rng& rng) {
  const ProblemSpec& s = problem.spec();
  if (s.encoding == Encoding::real_vector) {
    RealGenome x(s.genes);
    for (Eigen::Index i = 0; i < s.genes; ++i)
      x[i] = std::uniform_real_distribution<double>(s.lower[i], s.upper[i])(rng);
    return x;
  }
  BitGenome b(s.genes);
  std::uniform_int_distribution<int> bit(0, 1);
  for (Eigen::Index i = 0; i < s.genes; ++i) b[i] = static_cast<std::uint8_t>(bit(rng));
  return b;
}

}  // namespace esim
