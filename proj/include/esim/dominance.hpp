#pragma once

#include <stdexcept>

#include "esim/types.hpp"

namespace esim {

/// Pareto dominance, minimization orientation: a dominates b iff a is no worse
/// in every objective and strictly better in at least one. Never true for
/// identical phenotypes. Exact comparisons, no epsilon.
template <typename DerivedA, typename DerivedB>
bool dominates(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dominates: objective count mismatch");
  return (a <= b).all() && (a < b).any();
}

/// Dominance-count rank: the number of context members the target dominates.
/// Value in [0, |context|]; an empty context ranks everything 0.
inline int rank(const Phenotype& target, const Context& context) {
  if (context.cols() > 0 && context.rows() != target.size())
    throw std::invalid_argument("rank: context member size does not match target");
  int r = 0;
  for (Eigen::Index j = 0; j < context.cols(); ++j)
    r += dominates(target, context.col(j).array()) ? 1 : 0;
  return r;
}

/// Parent-replacement decision: the child takes over iff it out-ranks the
/// parent within the given context and the parent does not dominate it.
/// Both ranks are computed against the same context, which must exclude the
/// parent itself.
inline bool accept_child(const Phenotype& parent, const Phenotype& child, const Context& context) {
  return rank(child, context) > rank(parent, context) && !dominates(parent, child);
}

}  // namespace esim
