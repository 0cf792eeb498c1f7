#pragma once

// Garbage, sieving, and the factorization of a derivation space.
//
// Fixing a refinement t' |> t, a derivation from t is garbage when its
// simulation in the distributive calculus is empty: it only works inside
// untyped arguments.  The sieve extracts the garbage-free part of a
// derivation by repeatedly contracting the leftmost coarse step (a prefix
// step with non-empty simulation).  Garbage-free classes form a finite
// lattice, each carries an upper semilattice of garbage continuations, and
// the Grothendieck construction of that data is isomorphic to the full
// derivation space: every derivation factors uniquely as a garbage-free
// prefix followed by garbage.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lambdadist/lambda.hpp"
#include "lambdadist/refine.hpp"
#include "lambdadist/simulate.hpp"
#include "lambdadist/spaces.hpp"

namespace ldist {

namespace detail {
// Replays a derivation's positions on the witness's term instance so that
// node-id based operations see one consistent source.
inline LamDerivation rebase_on(const LamPtr& src, const LamDerivation& d) {
  if (d.source.get() == src.get()) return d;
  if (!alpha_equal(d.source, src)) throw domain_error("derivation does not start at the witness term");
  return derivation_from_positions(src, d.positions());
}
}  // namespace detail

inline bool is_garbage(const LamDerivation& rho, const RefinementWitness& w) {
  LamDerivation d = detail::rebase_on(w.lam_term, rho);
  return sim_residual_derivation(d, w).first.empty();
}

// Steps R with R a prefix of rho and R/t' non-empty, left to right.
inline std::vector<LamStep> coarse_steps(const LamDerivation& rho, const RefinementWitness& w) {
  LamDerivation d = detail::rebase_on(w.lam_term, rho);
  std::vector<LamStep> out;
  for (auto& R : beta_redexes(w.lam_term)) {
    if (!residuals_after(R, d).empty()) continue;  // not a prefix
    if (sim_residual_step(R, w).empty()) continue;  // garbage step
    out.push_back(R);
  }
  return out;
}

// The sieve rho || t': the garbage-free part of rho, obtained by repeatedly
// splitting off the leftmost coarse step.
inline LamDerivation sieve(const LamDerivation& rho, const RefinementWitness& w) {
  LamDerivation cur = detail::rebase_on(w.lam_term, rho);
  RefinementWitness cw = w;
  LamDerivation out{w.lam_term, {}};
  // The simulated length strictly decreases at each split.
  std::size_t guard = sim_residual_derivation(cur, cw).first.size() + 1;
  while (true) {
    std::vector<LamStep> cs = coarse_steps(cur, cw);
    if (cs.empty()) break;
    if (guard-- == 0) throw internal_limit_error("sieve: failed to terminate within its measure");
    LamStep r0 = cs.front();
    out.steps.push_back(r0);
    cur = project(cur, LamDerivation{r0.source, {r0}});
    cw = sim_transport(r0, cw);
  }
  return out;
}

inline bool is_garbage_free(const LamDerivation& rho, const RefinementWitness& w) {
  LamDerivation d = detail::rebase_on(w.lam_term, rho);
  return perm_equiv(sieve(d, w), d);
}

struct FactorizationResult {
  LamDerivation garbage_free;
  LamDerivation garbage;
  RefinementWitness witness;  // t' transported along the garbage-free part
};

inline FactorizationResult factorize(const LamDerivation& rho, const RefinementWitness& w) {
  LamDerivation d = detail::rebase_on(w.lam_term, rho);
  FactorizationResult out;
  out.garbage_free = sieve(d, w);
  out.garbage = project(d, out.garbage_free);
  out.witness = sim_residual_derivation(out.garbage_free, w).second;
  return out;
}

// ---------------------------------------------------------------------------
// The Grothendieck construction

struct GrothendieckSpace {
  RefinementWitness root_witness;

  // Base lattice: garbage-free classes.
  std::vector<int> base_space_class;            // index into the space's classes
  std::vector<LamDerivation> base_rep;          // lexicographically least member
  std::vector<RefinementWitness> base_witness;  // t'/rep
  std::vector<std::vector<char>> base_leq;
  std::vector<std::vector<int>> base_join;
  std::vector<std::vector<int>> base_meet;
  int base_bottom = 0;
  int base_top = -1;

  // Fibers: garbage classes over each base point, empty derivation first.
  std::vector<std::vector<LamDerivation>> fiber_reps;

  struct PairObj {
    int base;
    int fib;
  };
  std::vector<PairObj> pairs;
  std::vector<std::vector<char>> pair_leq;

  // Lax 2-functor laws, validated during construction.
  bool lax_identity_ok = true;
  bool lax_composition_ok = true;
  bool fiber_action_monotone = true;

  int pair_index(int base, int fib) const {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].base == base && pairs[i].fib == fib) return static_cast<int>(i);
    return -1;
  }
};

namespace detail {

// The fiber action G(<sigma> <- <rho>): <alpha> |-> <rho alpha / sigma>, as a
// concrete garbage derivation from tgt(sigma).
inline LamDerivation fiber_action(const LamDerivation& rho, const LamDerivation& alpha,
                                  const LamDerivation& sigma) {
  LamDerivation composed = compose(rho, alpha);
  LamDerivation raw = project(composed, sigma);
  // Re-anchor on sigma's own target instance.
  return derivation_from_positions(sigma.target(), raw.positions());
}

inline int find_fiber_class(const std::vector<LamDerivation>& fiber, const LamDerivation& d) {
  for (std::size_t i = 0; i < fiber.size(); ++i)
    if (perm_equiv(d, fiber[i])) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

inline GrothendieckSpace build_grothendieck(const SpaceLattice& space, const RefinementWitness& w,
                                            const SpaceLimits& lim = {}) {
  if (space.dist_side) throw domain_error("build_grothendieck expects a lambda-side space");
  if (!alpha_equal(space.lam_root, w.lam_term))
    throw domain_error("build_grothendieck: witness does not refine the space root");

  GrothendieckSpace g;
  g.root_witness = w;

  int n = static_cast<int>(space.classes.size());
  // Sieve every class once; the distinct results are the garbage-free base.
  std::vector<int> sieve_class(n, -1);
  std::set<int> base_set;
  for (int c = 0; c < n; ++c) {
    LamDerivation rep = derivation_from_positions(w.lam_term, space.classes[c].rep());
    LamDerivation sv = sieve(rep, w);
    int cls = find_class_lam(space, sv);
    if (cls < 0) throw domain_error("grothendieck: sieve output not in the enumerated space");
    sieve_class[c] = cls;
    base_set.insert(cls);
  }
  for (int cls : base_set) {
    g.base_space_class.push_back(cls);
    g.base_rep.push_back(derivation_from_positions(w.lam_term, space.classes[cls].rep()));
    g.base_witness.push_back(sim_residual_derivation(g.base_rep.back(), w).second);
  }
  int nb = static_cast<int>(g.base_rep.size());
  auto base_of_class = [&](int cls) {
    for (int i = 0; i < nb; ++i)
      if (g.base_space_class[i] == cls) return i;
    return -1;
  };

  // Base order and join.
  g.base_leq.assign(nb, std::vector<char>(nb, 0));
  g.base_join.assign(nb, std::vector<int>(nb, -1));
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      LamDerivation pij = project(g.base_rep[i], g.base_rep[j]);
      g.base_leq[i][j] = is_garbage(pij, g.base_witness[j]);
    }
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      LamDerivation jn = join(g.base_rep[i], g.base_rep[j]);
      int cls = find_class_lam(space, sieve(jn, w));
      int b = cls < 0 ? -1 : base_of_class(cls);
      if (b < 0) throw domain_error("grothendieck: base join not in the enumerated space");
      g.base_join[i][j] = b;
    }
  for (int i = 0; i < nb; ++i)
    if (g.base_rep[i].empty()) g.base_bottom = i;

  // Top: the join of everything.  Meet: the join of the common lower bounds.
  {
    int t = g.base_bottom;
    for (int i = 0; i < nb; ++i) t = g.base_join[t][i];
    g.base_top = t;
  }
  g.base_meet.assign(nb, std::vector<int>(nb, g.base_bottom));
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      int m = g.base_bottom;
      for (int k = 0; k < nb; ++k)
        if (g.base_leq[k][i] && g.base_leq[k][j]) m = g.base_join[m][k];
      g.base_meet[i][j] = m;
    }

  // Fibers: garbage classes over each base target.
  for (int i = 0; i < nb; ++i) {
    LamPtr u = g.base_rep[i].target();
    ReductionGraph graph = enumerate_graph_lambda(u);
    SpaceLattice sub = build_space(graph, lim);
    std::vector<LamDerivation> fiber;
    for (auto& cls : sub.classes) {
      LamDerivation d = derivation_from_positions(u, cls.rep());
      if (is_garbage(d, g.base_witness[i])) fiber.push_back(d);
    }
    g.fiber_reps.push_back(std::move(fiber));
  }

  for (int i = 0; i < nb; ++i)
    for (std::size_t f = 0; f < g.fiber_reps[i].size(); ++f)
      g.pairs.push_back({i, static_cast<int>(f)});

  // Pair order: (a,b) <= (a',b') iff a <= a' and G(a'<-a)(b) is a prefix of b'.
  int np = static_cast<int>(g.pairs.size());
  g.pair_leq.assign(np, std::vector<char>(np, 0));
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) {
      auto [bi, fi] = g.pairs[p];
      auto [bj, fj] = g.pairs[q];
      if (!g.base_leq[bi][bj]) continue;
      LamDerivation moved =
          detail::fiber_action(g.base_rep[bi], g.fiber_reps[bi][fi], g.base_rep[bj]);
      g.pair_leq[p][q] = is_prefix(moved, g.fiber_reps[bj][fj]);
    }

  // Lax 2-functor laws.
  for (int i = 0; i < nb; ++i)
    for (auto& alpha : g.fiber_reps[i]) {
      LamDerivation back = detail::fiber_action(g.base_rep[i], alpha, g.base_rep[i]);
      if (!perm_equiv(back, alpha)) g.lax_identity_ok = false;
    }
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      if (!g.base_leq[i][j]) continue;
      for (std::size_t a = 0; a < g.fiber_reps[i].size(); ++a)
        for (std::size_t b = 0; b < g.fiber_reps[i].size(); ++b) {
          if (!is_prefix(g.fiber_reps[i][a], g.fiber_reps[i][b])) continue;
          LamDerivation ma =
              detail::fiber_action(g.base_rep[i], g.fiber_reps[i][a], g.base_rep[j]);
          LamDerivation mb =
              detail::fiber_action(g.base_rep[i], g.fiber_reps[i][b], g.base_rep[j]);
          if (!is_prefix(ma, mb)) g.fiber_action_monotone = false;
        }
      for (int k = 0; k < nb; ++k) {
        if (!g.base_leq[j][k]) continue;
        for (auto& alpha : g.fiber_reps[i]) {
          LamDerivation direct = detail::fiber_action(g.base_rep[i], alpha, g.base_rep[k]);
          LamDerivation via_j = detail::fiber_action(g.base_rep[i], alpha, g.base_rep[j]);
          LamDerivation two = detail::fiber_action(g.base_rep[j], via_j, g.base_rep[k]);
          if (!is_prefix(direct, two)) g.lax_composition_ok = false;
        }
      }
    }
  return g;
}

// ---------------------------------------------------------------------------
// Factorization isomorphism check

struct IsoReport {
  bool ok = true;
  int space_classes = 0;
  int pair_count = 0;
  std::vector<std::string> failures;

  void fail(std::string msg) {
    ok = false;
    failures.push_back(std::move(msg));
  }
};

inline IsoReport check_factorization_iso(const SpaceLattice& space, const GrothendieckSpace& g) {
  IsoReport rep;
  const RefinementWitness& w = g.root_witness;
  int n = static_cast<int>(space.classes.size());
  int np = static_cast<int>(g.pairs.size());
  rep.space_classes = n;
  rep.pair_count = np;

  if (!g.lax_identity_ok) rep.fail("fiber action violates the identity law");
  if (!g.lax_composition_ok) rep.fail("fiber action violates lax composition");
  if (!g.fiber_action_monotone) rep.fail("fiber action is not monotone");

  auto base_of_class = [&](int cls) {
    for (std::size_t i = 0; i < g.base_space_class.size(); ++i)
      if (g.base_space_class[i] == cls) return static_cast<int>(i);
    return -1;
  };

  // phi: <rho> |-> (<rho||t'>, <rho/(rho||t')>)
  std::vector<int> phi(n, -1);
  for (int c = 0; c < n; ++c) {
    LamDerivation rho = derivation_from_positions(w.lam_term, space.classes[c].rep());
    LamDerivation gf = sieve(rho, w);
    int b = base_of_class(find_class_lam(space, gf));
    if (b < 0) {
      rep.fail("phi: sieve class missing from the base");
      continue;
    }
    LamDerivation garbage = project(rho, gf);
    LamDerivation anchored =
        derivation_from_positions(g.base_rep[b].target(), garbage.positions());
    int f = detail::find_fiber_class(g.fiber_reps[b], anchored);
    if (f < 0) {
      rep.fail("phi: garbage part missing from the fiber");
      continue;
    }
    phi[c] = g.pair_index(b, f);
    if (phi[c] < 0) rep.fail("phi: pair not present");
  }

  // psi: (<rho>,<sigma>) |-> <rho sigma>
  std::vector<int> psi(np, -1);
  for (int p = 0; p < np; ++p) {
    auto [b, f] = g.pairs[p];
    LamDerivation composed = compose(g.base_rep[b], g.fiber_reps[b][f]);
    psi[p] = find_class_lam(space, composed);
    if (psi[p] < 0) rep.fail("psi: composite class missing from the space");
  }

  for (int c = 0; c < n; ++c)
    if (phi[c] >= 0 && psi[phi[c]] != c)
      rep.fail("psi(phi(<rho>)) != <rho> for class " + std::to_string(c));
  for (int p = 0; p < np; ++p)
    if (psi[p] >= 0 && phi[psi[p]] != p)
      rep.fail("phi(psi(pair)) != pair for pair " + std::to_string(p));

  // Monotonicity in both directions.
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) {
      if (phi[c] < 0 || phi[d] < 0) continue;
      bool sp = space.leq[c][d];
      bool pr = g.pair_leq[phi[c]][phi[d]];
      if (sp != pr)
        rep.fail("order mismatch between classes " + std::to_string(c) + " and " +
                 std::to_string(d));
    }

  // Bottom preservation.
  if (phi[space.bottom] >= 0) {
    auto [b, f] = g.pairs[phi[space.bottom]];
    if (!g.base_rep[b].empty() || !g.fiber_reps[b][f].empty())
      rep.fail("phi does not preserve the bottom element");
  }

  // Join preservation: phi(<rho> join <sigma>) = phi(<rho>) v phi(<sigma>).
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) {
      if (phi[c] < 0 || phi[d] < 0) continue;
      int jcls = space.join_table[c][d];
      auto [bc, fc] = g.pairs[phi[c]];
      auto [bd, fd] = g.pairs[phi[d]];
      int bj = g.base_join[bc][bd];
      LamDerivation ma = detail::fiber_action(g.base_rep[bc], g.fiber_reps[bc][fc], g.base_rep[bj]);
      LamDerivation mb = detail::fiber_action(g.base_rep[bd], g.fiber_reps[bd][fd], g.base_rep[bj]);
      LamDerivation joined = join(ma, mb);
      LamDerivation anchored =
          derivation_from_positions(g.base_rep[bj].target(), joined.positions());
      int fj = detail::find_fiber_class(g.fiber_reps[bj], anchored);
      if (fj < 0) {
        rep.fail("pair join falls outside the fiber");
        continue;
      }
      if (phi[jcls] != g.pair_index(bj, fj))
        rep.fail("join mismatch between classes " + std::to_string(c) + " and " +
                 std::to_string(d));
    }
  return rep;
}

}  // namespace ldist
