#pragma once

// Instance-level invariant checks, shared by the command-line `verify`
// subcommand and the acceptance suite.  Each check runs against a concrete
// term (or term/refinement pair) and reports one pass/fail line.

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lambdadist/dist.hpp"
#include "lambdadist/factor.hpp"
#include "lambdadist/lambda.hpp"
#include "lambdadist/refine.hpp"
#include "lambdadist/simulate.hpp"
#include "lambdadist/spaces.hpp"

namespace ldist {

struct VerifyResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

namespace detail {

inline void report(std::vector<VerifyResult>& out, std::string name, bool ok,
                   std::string detail = "") {
  out.push_back(VerifyResult{std::move(name), ok, std::move(detail)});
}

// Deterministic index sampling: all indices when small, a seeded sample when
// the space is large.
inline std::vector<int> sample_indices(int n, int want, std::mt19937_64& rng) {
  std::vector<int> out;
  if (n <= want) {
    for (int i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  std::uniform_int_distribution<int> d(0, n - 1);
  for (int i = 0; i < want; ++i) out.push_back(d(rng));
  return out;
}

}  // namespace detail

// Invariants of the plain lambda side: syntax round trip, the semilattice
// laws of the enumerated space, and projection algebra on sampled triples.
inline std::vector<VerifyResult> verify_lambda_instance(const LamPtr& t, unsigned seed = 0,
                                                        const SpaceLimits& lim = {}) {
  std::vector<VerifyResult> out;
  std::mt19937_64 rng(seed);

  detail::report(out, "lambda parse/print round trip", alpha_equal(parse_lam(print_lam(t)), t));

  SpaceLattice s;
  try {
    s = build_space(enumerate_graph_lambda(t), lim);
  } catch (const std::exception& e) {
    detail::report(out, "lambda space enumeration", false, e.what());
    return out;
  }
  detail::report(out, "lambda space enumeration", true,
                 std::to_string(s.classes.size()) + " classes");

  int n = static_cast<int>(s.classes.size());
  bool join_laws = true, order_laws = true;
  for (int i = 0; i < n && join_laws; ++i)
    for (int j = 0; j < n; ++j) {
      if (s.join_table[i][j] != s.join_table[j][i]) join_laws = false;
      if (!s.leq[i][s.join_table[i][j]]) order_laws = false;
      if (s.join_table[i][s.bottom] != i) join_laws = false;
    }
  for (int i = 0; i < n && join_laws; ++i)
    for (int j = 0; j < n && join_laws; ++j)
      for (int k = 0; k < n; ++k)
        if (s.join_table[s.join_table[i][j]][k] != s.join_table[i][s.join_table[j][k]])
          join_laws = false;
  detail::report(out, "join associative/commutative with bottom unit", join_laws);
  detail::report(out, "join is an upper bound", order_laws);

  std::vector<LamDerivation> reps;
  for (int i = 0; i < n; ++i) reps.push_back(s.lam_derivation(i));
  bool proj_laws = true, monotone = true, stable = true;
  auto idx = detail::sample_indices(n, 6, rng);
  for (int i : idx)
    for (int j : idx)
      for (int k : idx) {
        LamDerivation st = join(reps[j], reps[k]);
        if (!perm_equiv(project(reps[i], st),
                        project(project(reps[i], reps[j]), project(st, reps[j]))))
          proj_laws = false;
        if (!perm_equiv(project(join(reps[i], reps[j]), reps[k]),
                        join(project(reps[i], reps[k]), project(reps[j], reps[k]))))
          proj_laws = false;
        if (s.leq[i][j] && !is_prefix(project(reps[i], reps[k]), project(reps[j], reps[k])))
          monotone = false;
      }
  for (int i : idx)
    for (int j : idx) {
      if (!perm_equiv(reps[i], reps[j])) continue;
      for (int k : idx)
        if (project(reps[k], reps[i]).positions() != project(reps[k], reps[j]).positions())
          stable = false;
    }
  detail::report(out, "projection laws on sampled triples", proj_laws);
  detail::report(out, "projection monotone in the prefix order", monotone);
  detail::report(out, "projection invariant under equivalence of the divisor", stable);
  return out;
}

// Invariants of a correct distributive term: diamond, subject reduction, the
// label calculus, and the labs monomorphism over its full space.
inline std::vector<VerifyResult> verify_dist_instance(const DistPtr& t) {
  std::vector<VerifyResult> out;

  auto rep = check_correct(t);
  detail::report(out, "term is correct", rep.ok, rep.violation);
  if (!rep.ok) return out;

  detail::report(out, "dist parse/print round trip", dist_equal(parse_dist(print_dist(t)), t));

  ReductionGraph g = enumerate_graph_dist(t);
  bool diamond = true, subject = true, labels_unique = true;
  for (auto& node : g.dist_nodes) {
    Judgment before = infer_type(node);
    auto steps = dist_redexes(node);
    std::set<Label> ls;
    for (auto& r : steps) {
      if (!ls.insert(r.label).second) labels_unique = false;
      DistPtr next = apply_dist_step(r);
      Judgment after = infer_type(next);
      if (!type_equal(before.type, after.type)) subject = false;
      if (before.named.size() != after.named.size()) subject = false;
      for (auto& [name, ms] : before.named)
        if (!after.named.count(name) || !multiset_equal(ms, after.named.at(name)))
          subject = false;
      if (!check_correct(next).ok) subject = false;
      if (lambda_labels(next).size() + 1 != lambda_labels(node).size()) subject = false;
    }
    for (auto& r : steps)
      for (auto& q : steps) {
        if (dist_same_step(r, q)) continue;
        auto rq = dist_residual(r, q);
        auto qr = dist_residual(q, r);
        if (rq.size() != 1 || qr.size() != 1 ||
            !dist_equal(apply_dist_step(rq.front()), apply_dist_step(qr.front())))
          diamond = false;
      }
  }
  detail::report(out, "redex labels pairwise distinct at every node", labels_unique);
  detail::report(out, "diamond property at every node", diamond);
  detail::report(out, "subject reduction along every edge", subject);

  SpaceLattice s = build_space(g);
  std::set<std::set<Label>> distinct;
  for (auto& c : s.classes) distinct.insert(c.labels);
  detail::report(out, "class count equals distinct label-set count",
                 distinct.size() == s.classes.size(),
                 std::to_string(s.classes.size()) + " classes");

  int n = static_cast<int>(s.classes.size());
  bool mono = true, lenlaw = true, sub = true;
  for (int i = 0; i < n; ++i) {
    DistDerivation di = s.dist_derivation(i);
    if (di.size() != labs(di).size()) lenlaw = false;
    for (int j = 0; j < n; ++j) {
      const auto& a = s.classes[i].labels;
      const auto& b = s.classes[j].labels;
      std::set<Label> u = a, m, diff;
      u.insert(b.begin(), b.end());
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(m, m.begin()));
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(diff, diff.begin()));
      if (s.classes[s.join_table[i][j]].labels != u) mono = false;
      if (s.classes[s.meet_table[i][j]].labels != m) mono = false;
      if (static_cast<bool>(s.leq[i][j]) != std::includes(b.begin(), b.end(), a.begin(), a.end()))
        mono = false;
      DistDerivation dj = s.dist_derivation(j);
      if (labs(dist_project(di, dj)) != diff) sub = false;
      if (static_cast<bool>(s.leq[i][j]) != dist_prefix_by_projection(di, dj)) mono = false;
    }
  }
  detail::report(out, "derivation length equals label count", lenlaw);
  detail::report(out, "projection subtracts label sets", sub);
  detail::report(out, "labs is a lattice monomorphism", mono);
  if (s.distributivity_checked)
    detail::report(out, "class lattice is distributive", s.distributive);

  // Full stability: whenever single steps rho, sigma (necessarily with
  // distinct labels) are followed by steps T1, T2 whose residuals agree after
  // closing the square, some source step projects onto both.
  bool stability = true;
  auto source_steps = dist_redexes(t);
  for (auto& a : source_steps)
    for (auto& b : source_steps) {
      if (dist_same_step(a, b)) continue;
      DistDerivation rho{t, {a}}, sigma{t, {b}};
      DistDerivation sr = dist_project(sigma, rho);
      DistDerivation rs = dist_project(rho, sigma);
      for (auto& t1 : dist_redexes(rho.target()))
        for (auto& t2 : dist_redexes(sigma.target())) {
          auto t3a = dist_project(DistDerivation{rho.target(), {t1}}, sr);
          auto t3b = dist_project(DistDerivation{sigma.target(), {t2}}, rs);
          if (t3a.empty() || t3b.empty() || t3a.steps[0].label != t3b.steps[0].label) continue;
          bool found = false;
          for (auto& t0 : source_steps) {
            auto via_rho = dist_project(DistDerivation{t, {t0}}, rho);
            auto via_sigma = dist_project(DistDerivation{t, {t0}}, sigma);
            if (!via_rho.empty() && !via_sigma.empty() &&
                via_rho.steps[0].label == t1.label && via_sigma.steps[0].label == t2.label)
              found = true;
          }
          if (!found) stability = false;
        }
    }
  detail::report(out, "full stability (created steps have unique origins)", stability);
  return out;
}

// Invariants of a refinement pair: simulation algebra, garbage/sieve laws,
// and the factorization isomorphism over the enumerated space.
inline std::vector<VerifyResult> verify_pair_instance(const LamPtr& t, const DistPtr& tp,
                                                      unsigned seed = 0,
                                                      const SpaceLimits& lim = {}) {
  std::vector<VerifyResult> out;
  std::mt19937_64 rng(seed);

  auto refined = check_refines(tp, t);
  detail::report(out, "refinement holds", refined.ok,
                 refined.ok ? "" : refined.fail_reason + " at " +
                                       position_to_string(refined.fail_pos));
  if (!refined.ok) return out;
  const RefinementWitness& w = refined.witness;

  SpaceLattice s;
  try {
    s = build_space(enumerate_graph_lambda(t), lim);
  } catch (const std::exception& e) {
    detail::report(out, "lambda space enumeration", false, e.what());
    return out;
  }
  if (s.truncated) {
    detail::report(out, "lambda space enumeration", false, "space truncated by the length cap");
    return out;
  }
  int n = static_cast<int>(s.classes.size());
  std::vector<LamDerivation> reps;
  for (int i = 0; i < n; ++i)
    reps.push_back(derivation_from_positions(w.lam_term, s.classes[i].rep()));

  // Basic cube on every coinitial step pair of the root.
  bool basic_cube = true;
  for (auto& R : beta_redexes(w.lam_term))
    for (auto& S : beta_redexes(w.lam_term)) {
      if (same_step(R, S)) continue;
      auto [sdev, w_after] = sim_transport_steps(S, w);
      std::set<Label> lhs, rhs;
      for (auto& r : sim_residual_step(R, w))
        for (auto& x : dist_project(DistDerivation{w.dist_term, {r}}, sdev).steps)
          lhs.insert(x.label);
      for (auto& r2 : residuals(R, S))
        for (auto& x : sim_residual_step(LamStep{w_after.lam_term, r2.redex}, w_after))
          rhs.insert(x.label);
      if (lhs != rhs) basic_cube = false;
    }
  detail::report(out, "basic cube for simulation residuals", basic_cube);

  // Cube and algebraic simulation over sampled class pairs.
  auto idx = detail::sample_indices(n, 8, rng);
  bool cube = true, algebraic = true, compatible = true;
  std::vector<std::pair<DistDerivation, RefinementWitness>> sims;
  sims.reserve(n);
  for (int i = 0; i < n; ++i) sims.push_back(sim_residual_derivation(reps[i], w));
  for (int i : idx)
    for (int j : idx) {
      LamDerivation rs = project(reps[i], reps[j]);
      auto lhs = sim_residual_derivation(
          derivation_from_positions(sims[j].second.lam_term, rs.positions()), sims[j].second);
      DistDerivation rhs = dist_project(sims[i].first, sims[j].first);
      if (labs(lhs.first) != labs(rhs)) cube = false;
      if (s.leq[i][j] && !dist_prefix(sims[i].first, sims[j].first)) algebraic = false;
      std::set<Label> expect = labs(sims[i].first);
      for (auto l : labs(sims[j].first)) expect.insert(l);
      auto joined = sim_residual_derivation(join(reps[i], reps[j]), w);
      if (labs(joined.first) != expect) algebraic = false;
    }
  for (int i = 0; i < n; ++i)
    for (auto& member : s.classes[i].members) {
      LamDerivation other = derivation_from_positions(w.lam_term, member);
      auto sim = sim_residual_derivation(other, w);
      if (!dist_equiv(sim.first, sims[i].first)) compatible = false;
      if (!dist_equal(sim.second.dist_term, sims[i].second.dist_term)) compatible = false;
    }
  detail::report(out, "cube lemma for derivations", cube);
  detail::report(out, "algebraic simulation is a semilattice morphism", algebraic);
  detail::report(out, "simulation compatible with permutation equivalence", compatible);

  // Garbage ideal laws.
  bool ideal = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool gi = sims[i].first.empty();
      bool gj = sims[j].first.empty();
      if (gj && s.leq[i][j] && !gi) ideal = false;
      LamDerivation tail = project(reps[j], reps[i]);
      bool tail_garbage =
          is_garbage(derivation_from_positions(sims[i].second.lam_term, tail.positions()),
                     sims[i].second);
      if (is_garbage(compose(reps[i], tail), w) != (gi && tail_garbage)) ideal = false;
      if (gi) {
        LamDerivation pr = project(reps[i], reps[j]);
        if (!is_garbage(derivation_from_positions(sims[j].second.lam_term, pr.positions()),
                        sims[j].second))
          ideal = false;
      }
      if (is_garbage(join(reps[i], reps[j]), w) != (gi && gj)) ideal = false;
    }
  detail::report(out, "garbage ideal laws", ideal);

  // Sieve laws.
  bool sieve_laws = true;
  for (int i = 0; i < n; ++i) {
    LamDerivation sv = sieve(reps[i], w);
    if (!is_prefix(sv, reps[i])) sieve_laws = false;
    auto after = sim_residual_derivation(sv, w);
    LamDerivation rest = project(reps[i], sv);
    if (!is_garbage(derivation_from_positions(after.second.lam_term, rest.positions()),
                    after.second))
      sieve_laws = false;
    if (sims[i].first.empty() != sv.empty()) sieve_laws = false;
    if (is_garbage_free(reps[i], w) != perm_equiv(sv, reps[i])) sieve_laws = false;
    if (!perm_equiv(sieve(sv, w), sv)) sieve_laws = false;
  }
  detail::report(out, "sieve laws", sieve_laws);

  // Factorization.
  try {
    GrothendieckSpace gr = build_grothendieck(s, w, lim);
    IsoReport iso = check_factorization_iso(s, gr);
    std::string detail_msg = std::to_string(iso.space_classes) + " classes, " +
                             std::to_string(iso.pair_count) + " pairs";
    if (!iso.ok && !iso.failures.empty()) detail_msg += "; " + iso.failures.front();
    detail::report(out, "factorization isomorphism", iso.ok, detail_msg);
  } catch (const std::exception& e) {
    detail::report(out, "factorization isomorphism", false, e.what());
  }
  return out;
}

}  // namespace ldist
