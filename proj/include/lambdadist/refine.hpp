#pragma once

// Refinement: a correct distributive term t' approximates a lambda term t
// (written t' |> t here) when they match structurally, with each application
// argument of t replicated once per typed use in t'.
//
// This module decides refinement (producing a position correspondence),
// checks strong sequentiality, builds the canonical refinement of a head
// normal form, and pulls refinements backwards along beta steps.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lambdadist/dist.hpp"
#include "lambdadist/lambda.hpp"
#include "lambdadist/position.hpp"

namespace ldist {

struct RefinementWitness {
  DistPtr dist_term;
  LamPtr lam_term;
  // Position of every subterm of dist_term -> position of the subterm of
  // lam_term it refines.  All argument copies of an application map to the
  // single argument position.
  std::map<Position, Position> correspondence;
};

struct RefineOutcome {
  bool ok = false;
  RefinementWitness witness;
  Position fail_pos;        // dist-side position where the rules fail
  std::string fail_reason;  // empty when ok
};

namespace detail {

inline bool refines_rec(const DistPtr& d, const LamPtr& l, Position& dp, Position& lp,
                        RefineOutcome& out) {
  out.witness.correspondence[dp] = lp;
  if (is_dvar(d)) {
    if (!is_var(l)) {
      out.fail_pos = dp;
      out.fail_reason = "variable refines a non-variable";
      return false;
    }
    const auto& dv = as_dvar(d);
    const auto& lv = as_var(l);
    if ((dv.index >= 0) != (lv.index >= 0) ||
        (dv.index >= 0 ? dv.index != lv.index : dv.name != lv.name)) {
      out.fail_pos = dp;
      out.fail_reason = "variable mismatch";
      return false;
    }
    return true;
  }
  if (is_dabs(d)) {
    if (!is_abs(l)) {
      out.fail_pos = dp;
      out.fail_reason = "abstraction refines a non-abstraction";
      return false;
    }
    dp.push_back(0);
    lp.push_back(0);
    bool ok = refines_rec(as_dabs(d).body, as_abs(l).body, dp, lp, out);
    dp.pop_back();
    lp.pop_back();
    return ok;
  }
  if (!is_app(l)) {
    out.fail_pos = dp;
    out.fail_reason = "application refines a non-application";
    return false;
  }
  const auto& da = as_dapp(d);
  const auto& la = as_app(l);
  dp.push_back(0);
  lp.push_back(0);
  bool ok = refines_rec(da.fun, la.fun, dp, lp, out);
  dp.pop_back();
  lp.pop_back();
  if (!ok) return false;
  for (std::size_t i = 0; i < da.args.size(); ++i) {
    dp.push_back(static_cast<int>(i) + 1);
    lp.push_back(1);
    ok = refines_rec(da.args[i], la.arg, dp, lp, out);
    dp.pop_back();
    lp.pop_back();
    if (!ok) return false;
  }
  return true;
}

}  // namespace detail

// Decides t' |> t.  The derivation tree of the refinement rules is unique, so
// the correspondence is fully determined by the pair.
inline RefineOutcome check_refines(const DistPtr& t_prime, const LamPtr& t) {
  RefineOutcome out;
  out.witness.dist_term = t_prime;
  out.witness.lam_term = t;
  Position dp, lp;
  out.ok = detail::refines_rec(t_prime, t, dp, lp, out);
  if (!out.ok) out.witness.correspondence.clear();
  return out;
}

inline bool refines(const DistPtr& t_prime, const LamPtr& t) {
  return check_refines(t_prime, t).ok;
}

// ---------------------------------------------------------------------------
// Strong sequentiality

namespace detail {

inline bool occurs_bound(const DistPtr& t, int k) {
  if (is_dvar(t)) return as_dvar(t).index == k;
  if (is_dabs(t)) return occurs_bound(as_dabs(t).body, k + 1);
  for (auto& a : as_dapp(t).args)
    if (occurs_bound(a, k)) return true;
  return occurs_bound(as_dapp(t).fun, k);
}

inline int binders_along(const DistPtr& t, const Position& p) {
  int n = 0;
  DistPtr cur = t;
  for (int d : p) {
    if (is_dabs(cur)) {
      ++n;
      cur = as_dabs(cur).body;
    } else {
      const auto& a = as_dapp(cur);
      cur = d == 0 ? a.fun : a.args[d - 1];
    }
  }
  return n;
}

// Free subterm positions, relative to t: subterms that do not contain
// occurrences of variables bound strictly inside t above them.
inline std::vector<Position> free_subterm_positions(const DistPtr& t) {
  std::vector<Position> out{{}};
  if (is_dvar(t)) return out;
  if (is_dabs(t)) {
    const auto& body = as_dabs(t).body;
    for (auto& q : free_subterm_positions(body)) {
      int depth = binders_along(body, q);
      if (!occurs_bound(dist_subterm_at(body, q), depth)) out.push_back(position_concat({0}, q));
    }
    return out;
  }
  const auto& a = as_dapp(t);
  for (auto& q : free_subterm_positions(a.fun)) out.push_back(position_concat({0}, q));
  for (std::size_t i = 0; i < a.args.size(); ++i)
    for (auto& q : free_subterm_positions(a.args[i]))
      out.push_back(position_concat({static_cast<int>(i) + 1}, q));
  return out;
}

inline void all_positions(const DistPtr& t, Position& cur, std::vector<Position>& out) {
  out.push_back(cur);
  if (is_dabs(t)) {
    cur.push_back(0);
    all_positions(as_dabs(t).body, cur, out);
    cur.pop_back();
  } else if (is_dapp(t)) {
    cur.push_back(0);
    all_positions(as_dapp(t).fun, cur, out);
    cur.pop_back();
    const auto& args = as_dapp(t).args;
    for (std::size_t i = 0; i < args.size(); ++i) {
      cur.push_back(static_cast<int>(i) + 1);
      all_positions(args[i], cur, out);
      cur.pop_back();
    }
  }
}

}  // namespace detail

// A correct term is strongly sequential when, inside every subterm, any two
// free subterms at disjoint positions have types with distinct external
// labels.  This is what makes the substitution decomposition unambiguous.
inline bool is_strongly_sequential(const DistPtr& t) {
  std::vector<Position> subs;
  Position cur;
  detail::all_positions(t, cur, subs);
  // Intrinsic subterm types: compute each subterm's own judgment.
  for (auto& p : subs) {
    DistPtr s = dist_subterm_at(t, p);
    std::vector<Position> fs = detail::free_subterm_positions(s);
    std::vector<Label> ext;
    ext.reserve(fs.size());
    for (auto& q : fs) ext.push_back(external_label(type_of(dist_subterm_at(s, q))));
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = i + 1; j < fs.size(); ++j)
        if (positions_disjoint(fs[i], fs[j]) && ext[i] == ext[j]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Canonical refinement of a head normal form

inline const std::string kCanonicalBase = "a";

// For t = \x1...\xn. y t1 ... tm, builds
//   \x1^l1...\xn^ln. y^{[]->^l1' ... []->^lm' a^l''} [] ... []
// with n+m+1 fresh labels.  Fails when t is not a head normal form.
inline DistPtr canonical_hnf_refinement(const LamPtr& t, LabelSupply& fresh) {
  std::vector<std::string> binders;
  LamPtr cur = t;
  while (is_abs(cur)) {
    binders.push_back(as_abs(cur).binder);
    cur = as_abs(cur).body;
  }
  std::vector<LamPtr> spine_args;
  while (is_app(cur)) {
    spine_args.push_back(as_app(cur).arg);
    cur = as_app(cur).fun;
  }
  if (!is_var(cur)) throw domain_error("canonical_hnf_refinement: term is not a head normal form");
  std::size_t n = binders.size(), m = spine_args.size();

  std::vector<Label> binder_labels, arrow_labels;
  for (std::size_t i = 0; i < n; ++i) binder_labels.push_back(fresh.fresh());
  for (std::size_t i = 0; i < m; ++i) arrow_labels.push_back(fresh.fresh());
  Label base_label = fresh.fresh();

  TypePtr ty = type_base(kCanonicalBase, base_label);
  for (std::size_t i = m; i-- > 0;) ty = type_arrow({}, arrow_labels[i], ty);

  const auto& v = as_var(cur);
  DistPtr body = v.index >= 0 ? dist_bound(v.index, ty, v.name) : dist_free(v.name, ty);
  for (std::size_t i = 0; i < m; ++i) body = dist_app(body, {});
  for (std::size_t i = n; i-- > 0;) body = dist_abs(binder_labels[i], binders[i], body);
  return body;
}

inline std::optional<Position> head_redex_position(const LamPtr& t) {
  Position pos;
  LamPtr cur = t;
  while (is_abs(cur)) {
    pos.push_back(0);
    cur = as_abs(cur).body;
  }
  while (is_app(cur)) {
    if (is_abs(as_app(cur).fun)) return pos;
    pos.push_back(0);
    cur = as_app(cur).fun;
  }
  return std::nullopt;
}

inline bool is_head_normal_form(const LamPtr& t) { return !head_redex_position(t).has_value(); }

// ---------------------------------------------------------------------------
// Backwards simulation

namespace detail {

// Given the body u of a redex (\x.u)r (x = index `depth` inside u) and a
// strongly sequential sp |> u{x:=r}, rebuilds u' |> u (occurrences of x typed
// from sp) and the argument list refining r at the redex level.
inline std::pair<DistPtr, std::vector<DistPtr>> decompose_subst(const LamPtr& u,
                                                                const DistPtr& sp, int depth,
                                                                const std::string& binder) {
  if (is_var(u)) {
    const auto& v = as_var(u);
    if (v.index == depth) {
      TypePtr ty = type_of(sp);
      DistPtr occ = dist_bound(depth, ty, binder);
      return {occ, {dist_shift(sp, -depth, 0)}};
    }
    if (!is_dvar(sp)) throw domain_error("pullback: refinement does not match a variable");
    const auto& dv = as_dvar(sp);
    if (v.index < 0) {
      if (dv.index >= 0 || dv.name != v.name)
        throw domain_error("pullback: free variable mismatch");
      return {dist_free(v.name, dv.type), {}};
    }
    // Bound elsewhere: below the substituted binder keeps its index, above it
    // was shifted down by one.
    int expect = v.index < depth ? v.index : v.index - 1;
    if (dv.index != expect) throw domain_error("pullback: bound variable mismatch");
    return {dist_bound(v.index, dv.type, v.name), {}};
  }
  if (is_abs(u)) {
    if (!is_dabs(sp)) throw domain_error("pullback: refinement does not match an abstraction");
    auto [body, args] = decompose_subst(as_abs(u).body, as_dabs(sp).body, depth + 1, binder);
    return {dist_abs(as_dabs(sp).label, as_abs(u).binder, body), std::move(args)};
  }
  if (!is_dapp(sp)) throw domain_error("pullback: refinement does not match an application");
  const auto& la = as_app(u);
  const auto& da = as_dapp(sp);
  auto [fun, args] = decompose_subst(la.fun, da.fun, depth, binder);
  std::vector<DistPtr> arg_refs;
  arg_refs.reserve(da.args.size());
  for (auto& a : da.args) {
    auto [ar, more] = decompose_subst(la.arg, a, depth, binder);
    arg_refs.push_back(ar);
    args.insert(args.end(), more.begin(), more.end());
  }
  return {dist_app(std::move(fun), std::move(arg_refs)), std::move(args)};
}

inline DistPtr pullback_rec(const LamPtr& t, const Position& p, std::size_t from, const DistPtr& sp,
                            LabelSupply& fresh) {
  if (from == p.size()) {
    if (!is_redex(t)) throw domain_error("pullback: source position is not a redex");
    const auto& abs = as_abs(as_app(t).fun);
    auto [body, args] = decompose_subst(abs.body, sp, 0, abs.binder);
    return dist_app(dist_abs(fresh.fresh(), abs.binder, body), std::move(args));
  }
  int d = p[from];
  if (is_abs(t) && d == 0) {
    if (!is_dabs(sp)) throw domain_error("pullback: shape mismatch under abstraction");
    const auto& da = as_dabs(sp);
    return dist_abs(da.label, da.binder, pullback_rec(as_abs(t).body, p, from + 1, da.body, fresh));
  }
  if (is_app(t) && d == 0) {
    if (!is_dapp(sp)) throw domain_error("pullback: shape mismatch at application head");
    const auto& da = as_dapp(sp);
    return dist_app(pullback_rec(as_app(t).fun, p, from + 1, da.fun, fresh), da.args);
  }
  if (is_app(t) && d == 1) {
    if (!is_dapp(sp)) throw domain_error("pullback: shape mismatch at application argument");
    const auto& da = as_dapp(sp);
    std::vector<DistPtr> args;
    args.reserve(da.args.size());
    for (auto& a : da.args) args.push_back(pullback_rec(as_app(t).arg, p, from + 1, a, fresh));
    return dist_app(da.fun, std::move(args));
  }
  throw domain_error("pullback: bad redex position");
}

}  // namespace detail

// Given R : t -> s and a strongly sequential s' |> s, builds a strongly
// sequential t' |> t with t' ->#* s' (the redex of R becomes
// (\x^l. u')[r'1,...,r'n] for a fresh l).
inline DistPtr pullback_refinement(const LamStep& R, const DistPtr& s_prime, LabelSupply& fresh) {
  LamPtr target = apply_step(R);
  if (!refines(s_prime, target))
    throw domain_error("pullback: term does not refine the step target");
  if (!is_strongly_sequential(s_prime))
    throw domain_error("pullback: term is not strongly sequential");
  return detail::pullback_rec(R.source, R.redex, 0, s_prime, fresh);
}

struct RefinementSearch {
  std::optional<DistPtr> term;   // empty when no head normal form was reached
  bool fuel_exhausted = false;   // distinguishes "ran out" from impossible input
  LamDerivation head_derivation; // the leftmost derivation to head normal form
};

// Head-normalizes t (leftmost strategy), refines the head normal form
// canonically, then pulls the refinement back along the reversed derivation.
inline RefinementSearch refinement_for(const LamPtr& t, long fuel, LabelSupply& fresh) {
  RefinementSearch out;
  out.head_derivation = empty_derivation(t);
  LamPtr cur = t;
  while (true) {
    auto hr = head_redex_position(cur);
    if (!hr) break;
    if (fuel-- <= 0) {
      out.fuel_exhausted = true;
      return out;
    }
    LamStep step{cur, *hr};
    out.head_derivation.steps.push_back(step);
    cur = apply_step(step);
  }
  DistPtr sp = canonical_hnf_refinement(cur, fresh);
  for (auto it = out.head_derivation.steps.rbegin(); it != out.head_derivation.steps.rend(); ++it)
    sp = pullback_refinement(*it, sp, fresh);
  out.term = sp;
  return out;
}

}  // namespace ldist
