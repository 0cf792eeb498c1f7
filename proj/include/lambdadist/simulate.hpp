#pragma once

// Simulation residuals between the two calculi.
//
// Given a refinement t' |> t and a beta step R from t, the distributive
// redexes of t' sitting at the witness preimages of R's redex position are
// the simulation residuals R/t'.  Developing them all (they live at pairwise
// disjoint positions) yields the transported refinement t'/R of the step
// target.  Both notions extend to derivations step by step.

#include <algorithm>
#include <utility>
#include <vector>

#include "lambdadist/dist.hpp"
#include "lambdadist/lambda.hpp"
#include "lambdadist/refine.hpp"

namespace ldist {

// R/t': the distributive steps simulating R, sorted by ascending label.
inline std::vector<DistStep> sim_residual_step(const LamStep& R, const RefinementWitness& w) {
  if (!alpha_equal(w.lam_term, R.source))
    throw domain_error("sim_residual_step: witness and step have different sources");
  std::vector<DistStep> out;
  for (auto& [dp, lp] : w.correspondence) {
    if (lp != R.redex) continue;
    DistPtr sub = dist_subterm_at(w.dist_term, dp);
    if (!is_dist_redex(sub))
      throw internal_limit_error("sim_residual_step: preimage is not a redex");
    out.push_back(DistStep{w.dist_term, dp, as_dabs(as_dapp(sub).fun).label});
  }
  std::sort(out.begin(), out.end(),
            [](const DistStep& a, const DistStep& b) { return a.label < b.label; });
  return out;
}

// t'/R together with the derivation t' ->#* t'/R that realizes it.  The
// residual redexes are pairwise disjoint, so contracting them one at a time
// in ascending label order is a complete development.
inline std::pair<DistDerivation, RefinementWitness> sim_transport_steps(
    const LamStep& R, const RefinementWitness& w) {
  std::vector<DistStep> set = sim_residual_step(R, w);
  DistDerivation deriv{w.dist_term, {}};
  DistPtr cur = w.dist_term;
  for (auto& s : set) {
    DistPtr sub = dist_subterm_at(cur, s.redex);
    DistStep step{cur, s.redex, as_dabs(as_dapp(sub).fun).label};
    deriv.steps.push_back(step);
    cur = apply_dist_step(step);
  }
  LamPtr target = apply_step(R);
  RefineOutcome res = check_refines(cur, target);
  if (!res.ok)
    throw internal_limit_error("sim_transport: transported term does not refine the target");
  return {std::move(deriv), std::move(res.witness)};
}

inline RefinementWitness sim_transport(const LamStep& R, const RefinementWitness& w) {
  return sim_transport_steps(R, w).second;
}

// rho/t' and t'/rho for a whole derivation.
inline std::pair<DistDerivation, RefinementWitness> sim_residual_derivation(
    const LamDerivation& rho, const RefinementWitness& w) {
  if (!alpha_equal(w.lam_term, rho.source))
    throw domain_error("sim_residual_derivation: witness and derivation differ at the source");
  DistDerivation acc{w.dist_term, {}};
  RefinementWitness cur = w;
  for (auto& step : rho.steps) {
    // Rebase the step on the witness's lambda instance.
    LamStep s{cur.lam_term, step.redex};
    auto [d, next] = sim_transport_steps(s, cur);
    acc = dist_compose(acc, d);
    cur = std::move(next);
  }
  return {std::move(acc), std::move(cur)};
}

}  // namespace ldist
