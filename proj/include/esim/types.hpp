#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <variant>
#include <vector>

namespace esim {

using Scalar = double;

/// Objective values of one individual, minimization orientation.
using Phenotype = Eigen::ArrayXd;

/// Ranking comparison set: one phenotype per column (m rows, |members| columns).
using Context = Eigen::MatrixXd;

using RealGenome = Eigen::ArrayXd;
using BitGenome  = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;
using Genome     = std::variant<RealGenome, BitGenome>;

using Rng = std::mt19937_64;

inline Phenotype make_phenotype(std::initializer_list<Scalar> values) {
  Phenotype p(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (Scalar v : values) p[i++] = v;
  return p;
}

/// Builds a context from member phenotypes (kept in the given order).
inline Context context_from(const std::vector<Phenotype>& members) {
  if (members.empty()) return Context(0, 0);
  Context ctx(members.front().size(), static_cast<Eigen::Index>(members.size()));
  for (Eigen::Index j = 0; j < ctx.cols(); ++j) ctx.col(j) = members[static_cast<std::size_t>(j)].matrix();
  return ctx;
}

inline Context make_context(std::initializer_list<std::initializer_list<Scalar>> members) {
  std::vector<Phenotype> v;
  v.reserve(members.size());
  for (const auto& m : members) v.push_back(make_phenotype(m));
  return context_from(v);
}

}  // namespace esim
