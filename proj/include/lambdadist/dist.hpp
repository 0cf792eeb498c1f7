#pragma once

// The distributive lambda calculus: labeled non-idempotent intersection types
// presented as proof terms.
//
// Types:  A ::= a^l | [A1,...,An] ->^l A      (the multiset is unordered)
// Terms:  t ::= x^A | \x^l. t | t[s1,...,sn]
//
// A term is correct when it is typable, lambda labels are pairwise distinct,
// and every context/arrow-domain multiset in sight is sequential (pairwise
// distinct external labels).  Reduction contracts (\x^l. t)[s...] by the
// type-directed substitution that routes each argument to the unique free
// occurrence of x with the same type.  On correct terms every step is
// determined by the label of the contracted lambda, residuals are singletons,
// and a derivation is characterized up to permutation equivalence by its set
// of step labels.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lambdadist/lambda.hpp"
#include "lambdadist/position.hpp"

namespace ldist {

using Label = int;

// A strictly increasing supply of fresh labels.
struct LabelSupply {
  Label next = 1;
  Label fresh() { return next++; }
};

// ---------------------------------------------------------------------------
// Types

struct DistType;
using TypePtr = std::shared_ptr<const DistType>;
using TypeMultiset = std::vector<TypePtr>;  // ordered storage, multiset semantics

struct DistType {
  bool base;
  std::string base_name;  // base only
  TypeMultiset domain;    // arrow only
  TypePtr codomain;       // arrow only
  Label label;            // external label
};

inline TypePtr type_base(std::string name, Label l) {
  return std::make_shared<DistType>(DistType{true, std::move(name), {}, nullptr, l});
}
inline TypePtr type_arrow(TypeMultiset domain, Label l, TypePtr codomain) {
  return std::make_shared<DistType>(DistType{false, "", std::move(domain), std::move(codomain), l});
}

inline Label external_label(const TypePtr& t) { return t->label; }

// Base types are identified by (name, label).  Flip this to make the label
// alone decide identity; everything downstream (typing, substitution,
// correctness) follows the keys.
inline constexpr bool kBaseTypeNamesMatter = true;

// Canonical key: multiset domains are sorted, so equal types have equal keys.
inline std::string type_key(const TypePtr& t) {
  if (t->base)
    return (kBaseTypeNamesMatter ? t->base_name : std::string("_")) + "^" +
           std::to_string(t->label);
  std::vector<std::string> keys;
  keys.reserve(t->domain.size());
  for (auto& d : t->domain) keys.push_back(type_key(d));
  std::sort(keys.begin(), keys.end());
  std::string out = "[";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ',';
    out += keys[i];
  }
  out += "]->^" + std::to_string(t->label) + " " + type_key(t->codomain);
  return out;
}

inline bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a.get() == b.get()) return true;
  return type_key(a) == type_key(b);
}

inline bool multiset_equal(const TypeMultiset& a, const TypeMultiset& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::string> ka, kb;
  for (auto& t : a) ka.push_back(type_key(t));
  for (auto& t : b) kb.push_back(type_key(t));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

// Pairwise distinct external labels.
inline bool sequential(const TypeMultiset& m) {
  std::set<Label> seen;
  for (auto& t : m)
    if (!seen.insert(t->label).second) return false;
  return true;
}

inline std::string print_type(const TypePtr& t) {
  if (t->base) return t->base_name + "^" + std::to_string(t->label);
  std::string out = "[";
  for (std::size_t i = 0; i < t->domain.size(); ++i) {
    if (i) out += ", ";
    out += print_type(t->domain[i]);
  }
  out += "]->^" + std::to_string(t->label) + " " + print_type(t->codomain);
  return out;
}

// ---------------------------------------------------------------------------
// Terms

struct DistTerm;
using DistPtr = std::shared_ptr<const DistTerm>;

struct DVar {
  int index = -1;  // >= 0: de Bruijn index; < 0: free variable named `name`
  std::string name;
  TypePtr type;
};
struct DAbs {
  Label label;
  std::string binder;
  DistPtr body;
};
struct DApp {
  DistPtr fun;
  std::vector<DistPtr> args;
};

struct DistTerm {
  std::variant<DVar, DAbs, DApp> node;
};

inline DistPtr dist_free(std::string name, TypePtr type) {
  return std::make_shared<DistTerm>(DistTerm{DVar{-1, std::move(name), std::move(type)}});
}
inline DistPtr dist_bound(int index, TypePtr type, std::string name = "") {
  return std::make_shared<DistTerm>(DistTerm{DVar{index, std::move(name), std::move(type)}});
}
inline DistPtr dist_abs(Label label, std::string binder, DistPtr body) {
  return std::make_shared<DistTerm>(DistTerm{DAbs{label, std::move(binder), std::move(body)}});
}
inline DistPtr dist_app(DistPtr fun, std::vector<DistPtr> args) {
  return std::make_shared<DistTerm>(DistTerm{DApp{std::move(fun), std::move(args)}});
}

inline bool is_dvar(const DistPtr& t) { return std::holds_alternative<DVar>(t->node); }
inline bool is_dabs(const DistPtr& t) { return std::holds_alternative<DAbs>(t->node); }
inline bool is_dapp(const DistPtr& t) { return std::holds_alternative<DApp>(t->node); }
inline const DVar& as_dvar(const DistPtr& t) { return std::get<DVar>(t->node); }
inline const DAbs& as_dabs(const DistPtr& t) { return std::get<DAbs>(t->node); }
inline const DApp& as_dapp(const DistPtr& t) { return std::get<DApp>(t->node); }

inline std::size_t dist_term_size(const DistPtr& t) {
  if (is_dvar(t)) return 1;
  if (is_dabs(t)) return 1 + dist_term_size(as_dabs(t).body);
  std::size_t n = 1 + dist_term_size(as_dapp(t).fun);
  for (auto& a : as_dapp(t).args) n += dist_term_size(a);
  return n;
}

// Structural equality modulo bound-variable names.
inline bool dist_equal(const DistPtr& a, const DistPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  if (is_dvar(a)) {
    const auto& va = as_dvar(a);
    const auto& vb = as_dvar(b);
    if ((va.index >= 0) != (vb.index >= 0)) return false;
    if (va.index >= 0 ? va.index != vb.index : va.name != vb.name) return false;
    return type_equal(va.type, vb.type);
  }
  if (is_dabs(a)) {
    return as_dabs(a).label == as_dabs(b).label && dist_equal(as_dabs(a).body, as_dabs(b).body);
  }
  const auto& pa = as_dapp(a);
  const auto& pb = as_dapp(b);
  if (pa.args.size() != pb.args.size()) return false;
  if (!dist_equal(pa.fun, pb.fun)) return false;
  for (std::size_t i = 0; i < pa.args.size(); ++i)
    if (!dist_equal(pa.args[i], pb.args[i])) return false;
  return true;
}

// Canonical string used as node identity in reduction graphs.
inline void dist_key_rec(const DistPtr& t, std::string& out) {
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    if (v.index >= 0) {
      out += '#';
      out += std::to_string(v.index);
    } else {
      out += v.name;
    }
    out += '^';
    out += type_key(v.type);
    return;
  }
  if (is_dabs(t)) {
    out += "\\^";
    out += std::to_string(as_dabs(t).label);
    out += '.';
    dist_key_rec(as_dabs(t).body, out);
    return;
  }
  const auto& a = as_dapp(t);
  out += '(';
  dist_key_rec(a.fun, out);
  out += ")[";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ',';
    dist_key_rec(a.args[i], out);
  }
  out += ']';
}

inline std::string dist_key(const DistPtr& t) {
  std::string out;
  dist_key_rec(t, out);
  return out;
}

inline DistPtr dist_subterm_at(const DistPtr& t, const Position& p, std::size_t from = 0) {
  if (from == p.size()) return t;
  int d = p[from];
  if (is_dabs(t) && d == 0) return dist_subterm_at(as_dabs(t).body, p, from + 1);
  if (is_dapp(t)) {
    const auto& a = as_dapp(t);
    if (d == 0) return dist_subterm_at(a.fun, p, from + 1);
    if (d >= 1 && d <= static_cast<int>(a.args.size()))
      return dist_subterm_at(a.args[d - 1], p, from + 1);
  }
  throw domain_error("position " + position_to_string(p) + " does not resolve in term");
}

// Multiset of labels decorating the lambdas, sorted.
inline void lambda_labels_rec(const DistPtr& t, std::vector<Label>& out) {
  if (is_dabs(t)) {
    out.push_back(as_dabs(t).label);
    lambda_labels_rec(as_dabs(t).body, out);
  } else if (is_dapp(t)) {
    lambda_labels_rec(as_dapp(t).fun, out);
    for (auto& a : as_dapp(t).args) lambda_labels_rec(a, out);
  }
}

inline std::vector<Label> lambda_labels(const DistPtr& t) {
  std::vector<Label> out;
  lambda_labels_rec(t, out);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Typing

struct type_error : domain_error {
  Position where;
  type_error(const std::string& msg, Position w)
      : domain_error(msg + " at position " + position_to_string(w)), where(std::move(w)) {}
};

// A typing judgment: free named variables and dangling de Bruijn indices each
// map to the multiset of their occurrence types (kept in occurrence order).
struct Judgment {
  std::map<std::string, TypeMultiset> named;
  std::map<int, TypeMultiset> bound;
  TypePtr type;
};

namespace detail {

inline void ctx_add(std::map<std::string, TypeMultiset>& dst,
                    const std::map<std::string, TypeMultiset>& src) {
  for (auto& [k, v] : src) {
    auto& slot = dst[k];
    slot.insert(slot.end(), v.begin(), v.end());
  }
}
inline void ctx_add(std::map<int, TypeMultiset>& dst, const std::map<int, TypeMultiset>& src) {
  for (auto& [k, v] : src) {
    auto& slot = dst[k];
    slot.insert(slot.end(), v.begin(), v.end());
  }
}

inline Judgment infer_rec(const DistPtr& t, Position& cur,
                          std::vector<std::pair<Position, Judgment>>* trace) {
  Judgment out;
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    if (v.index >= 0)
      out.bound[v.index].push_back(v.type);
    else
      out.named[v.name].push_back(v.type);
    out.type = v.type;
  } else if (is_dabs(t)) {
    const auto& a = as_dabs(t);
    cur.push_back(0);
    Judgment body = infer_rec(a.body, cur, trace);
    cur.pop_back();
    TypeMultiset domain;
    if (auto it = body.bound.find(0); it != body.bound.end()) domain = it->second;
    out.named = std::move(body.named);
    for (auto& [k, v] : body.bound)
      if (k > 0) out.bound[k - 1] = v;
    out.type = type_arrow(domain, a.label, body.type);
  } else {
    const auto& a = as_dapp(t);
    cur.push_back(0);
    Judgment fun = infer_rec(a.fun, cur, trace);
    cur.pop_back();
    if (fun.type->base)
      throw type_error("application head has base type " + print_type(fun.type), cur);
    TypeMultiset arg_types;
    out.named = std::move(fun.named);
    out.bound = std::move(fun.bound);
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      cur.push_back(static_cast<int>(i) + 1);
      Judgment arg = infer_rec(a.args[i], cur, trace);
      cur.pop_back();
      arg_types.push_back(arg.type);
      ctx_add(out.named, arg.named);
      ctx_add(out.bound, arg.bound);
    }
    if (!multiset_equal(fun.type->domain, arg_types))
      throw type_error("argument types do not match the domain of " + print_type(fun.type), cur);
    out.type = fun.type->codomain;
  }
  if (trace) trace->emplace_back(cur, out);
  return out;
}

}  // namespace detail

// The unique judgment of t; throws type_error when untypable.
inline Judgment infer_type(const DistPtr& t) {
  Position cur;
  return detail::infer_rec(t, cur, nullptr);
}

// Judgments for every subterm, keyed by position.
inline std::vector<std::pair<Position, Judgment>> infer_all(const DistPtr& t) {
  Position cur;
  std::vector<std::pair<Position, Judgment>> out;
  detail::infer_rec(t, cur, &out);
  return out;
}

inline TypePtr type_of(const DistPtr& t) { return infer_type(t).type; }

// ---------------------------------------------------------------------------
// Correctness

struct CorrectnessReport {
  bool ok = true;
  std::string violation;  // empty when ok
  Position where;
};

namespace detail {

inline void collect_arrow_subformulas(const TypePtr& t, std::vector<TypePtr>& out) {
  if (t->base) return;
  out.push_back(t);
  for (auto& d : t->domain) collect_arrow_subformulas(d, out);
  collect_arrow_subformulas(t->codomain, out);
}

inline void collect_abs_labels(const DistPtr& t, Position& cur,
                               std::vector<std::pair<Label, Position>>& out) {
  if (is_dabs(t)) {
    out.emplace_back(as_dabs(t).label, cur);
    cur.push_back(0);
    collect_abs_labels(as_dabs(t).body, cur, out);
    cur.pop_back();
  } else if (is_dapp(t)) {
    cur.push_back(0);
    collect_abs_labels(as_dapp(t).fun, cur, out);
    cur.pop_back();
    const auto& args = as_dapp(t).args;
    for (std::size_t i = 0; i < args.size(); ++i) {
      cur.push_back(static_cast<int>(i) + 1);
      collect_abs_labels(args[i], cur, out);
      cur.pop_back();
    }
  }
}

}  // namespace detail

inline CorrectnessReport check_correct(const DistPtr& t) {
  CorrectnessReport rep;
  std::vector<std::pair<Position, Judgment>> all;
  try {
    all = infer_all(t);
  } catch (const type_error& e) {
    rep.ok = false;
    rep.violation = std::string("untypable: ") + e.what();
    rep.where = e.where;
    return rep;
  }
  // Uniquely labeled lambdas.
  std::vector<std::pair<Label, Position>> labels;
  Position cur;
  detail::collect_abs_labels(t, cur, labels);
  std::map<Label, Position> seen;
  for (auto& [l, p] : labels) {
    auto [it, inserted] = seen.emplace(l, p);
    if (!inserted) {
      rep.ok = false;
      rep.violation = "duplicate lambda label " + std::to_string(l);
      rep.where = p;
      return rep;
    }
  }
  // Sequential contexts and sequential types at every subterm.
  for (auto& [pos, j] : all) {
    for (auto& [name, ms] : j.named) {
      if (!sequential(ms)) {
        rep.ok = false;
        rep.violation = "non-sequential context entry for " + name;
        rep.where = pos;
        return rep;
      }
    }
    for (auto& [idx, ms] : j.bound) {
      if (!sequential(ms)) {
        rep.ok = false;
        rep.violation = "non-sequential context entry for bound variable #" + std::to_string(idx);
        rep.where = pos;
        return rep;
      }
    }
    std::vector<TypePtr> arrows;
    detail::collect_arrow_subformulas(j.type, arrows);
    for (auto& [name, ms] : j.named)
      for (auto& ty : ms) detail::collect_arrow_subformulas(ty, arrows);
    for (auto& [idx, ms] : j.bound)
      for (auto& ty : ms) detail::collect_arrow_subformulas(ty, arrows);
    for (auto& arrow : arrows) {
      if (!sequential(arrow->domain)) {
        rep.ok = false;
        rep.violation = "non-sequential arrow domain " + print_type(arrow);
        rep.where = pos;
        return rep;
      }
    }
  }
  return rep;
}

inline bool is_correct(const DistPtr& t) { return check_correct(t).ok; }

// ---------------------------------------------------------------------------
// Type-directed substitution

// Multiset of the types of the free occurrences of the named variable x, in
// occurrence order.
inline void types_of_free_occurrences_rec(const DistPtr& t, const std::string& x,
                                          TypeMultiset& out) {
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    if (v.index < 0 && v.name == x) out.push_back(v.type);
  } else if (is_dabs(t)) {
    types_of_free_occurrences_rec(as_dabs(t).body, x, out);
  } else {
    types_of_free_occurrences_rec(as_dapp(t).fun, x, out);
    for (auto& a : as_dapp(t).args) types_of_free_occurrences_rec(a, x, out);
  }
}

inline TypeMultiset types_of_free_occurrences(const std::string& x, const DistPtr& t) {
  TypeMultiset out;
  types_of_free_occurrences_rec(t, x, out);
  return out;
}

namespace detail {

inline DistPtr dist_shift(const DistPtr& t, int by, int cutoff) {
  if (by == 0) return t;
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    if (v.index >= cutoff) return dist_bound(v.index + by, v.type, v.name);
    return t;
  }
  if (is_dabs(t)) {
    const auto& a = as_dabs(t);
    return dist_abs(a.label, a.binder, dist_shift(a.body, by, cutoff + 1));
  }
  const auto& a = as_dapp(t);
  std::vector<DistPtr> args;
  args.reserve(a.args.size());
  for (auto& s : a.args) args.push_back(dist_shift(s, by, cutoff));
  return dist_app(dist_shift(a.fun, by, cutoff), std::move(args));
}

struct ArgPool {
  // Arguments with precomputed type keys; entries are consumed as occurrences
  // are matched.
  std::vector<std::pair<std::string, DistPtr>> items;

  explicit ArgPool(const std::vector<DistPtr>& args) {
    for (auto& a : args) items.emplace_back(type_key(type_of(a)), a);
  }

  DistPtr take(const TypePtr& ty) {
    std::string key = type_key(ty);
    int found = -1, count = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].first == key) {
        ++count;
        if (found < 0) found = static_cast<int>(i);
      }
    }
    if (count == 0) throw domain_error("substitution: no argument of type " + print_type(ty));
    if (count > 1)
      throw domain_error("substitution: ambiguous match for type " + print_type(ty) +
                         " (non-sequential input)");
    DistPtr out = items[found].second;
    items.erase(items.begin() + found);
    return out;
  }
};

// Replaces occurrences of either a dangling index (target_index >= 0,
// adjusted under binders) or a free name.  Occurrence types select the
// argument; args are shifted to the occurrence depth.
inline DistPtr dist_subst_rec(const DistPtr& t, int target_index, const std::string& target_name,
                              ArgPool& pool, int depth) {
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    bool hit = target_index >= 0 ? v.index == target_index + depth
                                 : (v.index < 0 && v.name == target_name);
    if (hit) return dist_shift(pool.take(v.type), depth, 0);
    if (target_index >= 0 && v.index > target_index + depth)
      return dist_bound(v.index - 1, v.type, v.name);
    return t;
  }
  if (is_dabs(t)) {
    const auto& a = as_dabs(t);
    return dist_abs(a.label, a.binder,
                    dist_subst_rec(a.body, target_index, target_name, pool, depth + 1));
  }
  const auto& a = as_dapp(t);
  std::vector<DistPtr> args;
  args.reserve(a.args.size());
  DistPtr fun = dist_subst_rec(a.fun, target_index, target_name, pool, depth);
  for (auto& s : a.args) args.push_back(dist_subst_rec(s, target_index, target_name, pool, depth));
  return dist_app(std::move(fun), std::move(args));
}

}  // namespace detail

// t{x := args} for the free named variable x.  Requires the multiset of types
// of the free occurrences of x to equal the multiset of the argument types.
inline DistPtr dist_substitute(const DistPtr& t, const std::string& x,
                               const std::vector<DistPtr>& args) {
  TypeMultiset occ = types_of_free_occurrences(x, t);
  TypeMultiset arg_types;
  for (auto& a : args) arg_types.push_back(type_of(a));
  if (!multiset_equal(occ, arg_types))
    throw domain_error("substitution: occurrence types of " + x +
                       " do not match the argument types");
  detail::ArgPool pool(args);
  DistPtr out = detail::dist_subst_rec(t, -1, x, pool, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Reduction

struct DistStep {
  DistPtr source;
  Position redex;
  Label label;
};

inline bool dist_coinitial(const DistStep& r, const DistStep& s) {
  return dist_equal(r.source, s.source);
}
inline bool dist_same_step(const DistStep& r, const DistStep& s) {
  return r.label == s.label && r.redex == s.redex && dist_coinitial(r, s);
}

inline bool is_dist_redex(const DistPtr& t) { return is_dapp(t) && is_dabs(as_dapp(t).fun); }

namespace detail {
inline void collect_dist_redexes(const DistPtr& t, Position& cur, std::vector<DistStep>& out,
                                 const DistPtr& root) {
  if (is_dist_redex(t)) out.push_back(DistStep{root, cur, as_dabs(as_dapp(t).fun).label});
  if (is_dabs(t)) {
    cur.push_back(0);
    collect_dist_redexes(as_dabs(t).body, cur, out, root);
    cur.pop_back();
  } else if (is_dapp(t)) {
    cur.push_back(0);
    collect_dist_redexes(as_dapp(t).fun, cur, out, root);
    cur.pop_back();
    const auto& args = as_dapp(t).args;
    for (std::size_t i = 0; i < args.size(); ++i) {
      cur.push_back(static_cast<int>(i) + 1);
      collect_dist_redexes(args[i], cur, out, root);
      cur.pop_back();
    }
  }
}
}  // namespace detail

// All redexes in leftmost-outermost order.
inline std::vector<DistStep> dist_redexes(const DistPtr& t) {
  std::vector<DistStep> out;
  Position cur;
  detail::collect_dist_redexes(t, cur, out, t);
  return out;
}

namespace detail {

inline DistPtr dist_contract(const DistPtr& t, const Position& p, std::size_t from = 0) {
  if (from == p.size()) {
    if (!is_dist_redex(t)) throw domain_error("not a redex at " + position_to_string(p));
    const auto& app = as_dapp(t);
    const auto& abs = as_dabs(app.fun);
    // Route each argument (shifted to the occurrence depth) to the unique free
    // occurrence of the bound variable with the matching type.
    TypeMultiset occ;
    std::vector<const DVar*> dummy;
    // occurrence types of index 0 in the body
    struct Walk {
      static void occs(const DistPtr& u, int depth, TypeMultiset& out) {
        if (is_dvar(u)) {
          if (as_dvar(u).index == depth) out.push_back(as_dvar(u).type);
        } else if (is_dabs(u)) {
          occs(as_dabs(u).body, depth + 1, out);
        } else {
          occs(as_dapp(u).fun, depth, out);
          for (auto& a : as_dapp(u).args) occs(a, depth, out);
        }
      }
    };
    Walk::occs(abs.body, 0, occ);
    TypeMultiset arg_types;
    for (auto& a : app.args) arg_types.push_back(type_of(a));
    if (!multiset_equal(occ, arg_types))
      throw domain_error("redex violates the substitution side condition at " +
                         position_to_string(p));
    ArgPool pool(app.args);
    return dist_subst_rec(abs.body, 0, "", pool, 0);
  }
  int d = p[from];
  if (is_dabs(t) && d == 0) {
    const auto& a = as_dabs(t);
    return dist_abs(a.label, a.binder, dist_contract(a.body, p, from + 1));
  }
  if (is_dapp(t)) {
    const auto& a = as_dapp(t);
    if (d == 0) {
      return dist_app(dist_contract(a.fun, p, from + 1), a.args);
    }
    if (d >= 1 && d <= static_cast<int>(a.args.size())) {
      std::vector<DistPtr> args = a.args;
      args[d - 1] = dist_contract(args[d - 1], p, from + 1);
      return dist_app(a.fun, std::move(args));
    }
  }
  throw domain_error("bad position " + position_to_string(p));
}

}  // namespace detail

inline DistPtr apply_dist_step(const DistStep& r) {
  return detail::dist_contract(r.source, r.redex);
}

struct DistDerivation {
  DistPtr source;
  std::vector<DistStep> steps;

  DistPtr target() const { return steps.empty() ? source : apply_dist_step(steps.back()); }
  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
};

inline DistDerivation dist_empty_derivation(DistPtr src) {
  return DistDerivation{std::move(src), {}};
}

inline std::set<Label> labs(const DistDerivation& d) {
  std::set<Label> out;
  for (auto& s : d.steps) out.insert(s.label);
  return out;
}

inline DistDerivation dist_derivation_from_positions(const DistPtr& src,
                                                     const std::vector<Position>& ps) {
  DistDerivation d{src, {}};
  DistPtr cur = src;
  for (auto& p : ps) {
    DistPtr sub = dist_subterm_at(cur, p);
    if (!is_dist_redex(sub)) throw domain_error("not a redex at " + position_to_string(p));
    DistStep step{cur, p, as_dabs(as_dapp(sub).fun).label};
    d.steps.push_back(step);
    cur = apply_dist_step(step);
  }
  return d;
}

inline DistDerivation dist_compose(const DistDerivation& a, const DistDerivation& b) {
  if (!dist_equal(a.target(), b.source)) throw domain_error("compose: not composable");
  DistDerivation out = a;
  DistPtr cur = a.target();
  for (auto& s : b.steps) {
    DistStep step{cur, s.redex, s.label};
    out.steps.push_back(step);
    cur = apply_dist_step(step);
  }
  return out;
}

// Reduces to the unique normal form (leftmost-outermost); strong
// normalization bounds the length by the number of lambdas.
inline std::pair<DistPtr, DistDerivation> normalize(const DistPtr& t) {
  DistDerivation d{t, {}};
  DistPtr cur = t;
  std::size_t guard = lambda_labels(t).size() + 1;
  while (true) {
    std::vector<DistStep> reds = dist_redexes(cur);
    if (reds.empty()) break;
    if (guard-- == 0) throw internal_limit_error("normalize exceeded the lambda-count bound");
    d.steps.push_back(reds.front());
    cur = apply_dist_step(reds.front());
  }
  return {cur, d};
}

// R/S: empty when R = S, otherwise the unique step of the target carrying R's
// label.
inline std::vector<DistStep> dist_residual(const DistStep& R, const DistStep& S) {
  if (!dist_coinitial(R, S)) throw domain_error("dist_residual: steps not coinitial");
  if (R.redex == S.redex) return {};
  DistPtr u = apply_dist_step(S);
  std::vector<DistStep> out;
  for (auto& cand : dist_redexes(u))
    if (cand.label == R.label) out.push_back(cand);
  if (out.size() != 1)
    throw internal_limit_error("dist_residual: expected a unique residual of label " +
                               std::to_string(R.label));
  return out;
}

namespace detail {

// rho / S for a single coinitial step.
inline DistDerivation dist_project_step(const DistDerivation& rho, const DistStep& S) {
  DistPtr s_target = apply_dist_step(S);
  if (rho.empty()) return dist_empty_derivation(s_target);
  const DistStep& R = rho.steps.front();
  DistDerivation tail{apply_dist_step(R),
                      std::vector<DistStep>(rho.steps.begin() + 1, rho.steps.end())};
  if (R.redex == S.redex) return tail;  // R = S
  DistStep r_res = dist_residual(R, S).front();
  DistStep s_res = dist_residual(S, R).front();
  DistDerivation rest = dist_project_step(tail, s_res);
  DistDerivation out{s_target, {r_res}};
  return dist_compose(out, rest);
}

}  // namespace detail

inline DistDerivation dist_project(const DistDerivation& rho, const DistDerivation& sigma) {
  if (!dist_equal(rho.source, sigma.source))
    throw domain_error("dist_project: derivations not coinitial");
  DistDerivation cur = rho;
  for (auto& s : sigma.steps) cur = detail::dist_project_step(cur, s);
  return cur;
}

// Prefix and permutation equivalence, decided by label sets; the projection
// route exists as a cross-check oracle.
inline bool dist_prefix(const DistDerivation& rho, const DistDerivation& sigma) {
  auto a = labs(rho);
  auto b = labs(sigma);
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool dist_equiv(const DistDerivation& rho, const DistDerivation& sigma) {
  return labs(rho) == labs(sigma);
}

inline bool dist_prefix_by_projection(const DistDerivation& rho, const DistDerivation& sigma) {
  return dist_project(rho, sigma).empty();
}

inline DistDerivation dist_join(const DistDerivation& rho, const DistDerivation& sigma) {
  return dist_compose(rho, dist_project(sigma, rho));
}

// Greatest lower bound: repeatedly peel off a common source step, choosing
// the smallest label when several qualify.
inline DistDerivation dist_meet(const DistDerivation& rho, const DistDerivation& sigma) {
  if (!dist_equal(rho.source, sigma.source))
    throw domain_error("dist_meet: derivations not coinitial");
  std::set<Label> common;
  {
    auto a = labs(rho);
    auto b = labs(sigma);
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(common, common.begin()));
  }
  if (common.empty()) return dist_empty_derivation(rho.source);
  std::optional<DistStep> pick;
  for (auto& cand : dist_redexes(rho.source)) {
    if (common.count(cand.label) && (!pick || cand.label < pick->label)) pick = cand;
  }
  if (!pick)
    throw internal_limit_error("dist_meet: no common source step despite shared labels");
  DistDerivation single{rho.source, {*pick}};
  DistDerivation rec =
      dist_meet(dist_project(rho, single), dist_project(sigma, single));
  return dist_compose(single, rec);
}

// ---------------------------------------------------------------------------
// Parsing and printing
//
//   dterm ::= ident '^' type | '\' ident '^' nat '.' dterm
//           | dterm '[' (dterm (',' dterm)*)? ']' | '(' dterm ')'
//   type  ::= ident '^' nat | '[' (type (',' type)*)? ']' '->^' nat type
//
// Labels may be omitted; missing ones are filled from a fresh counter above
// the largest explicit label.

namespace detail {

struct DistParser {
  Cursor c;
  int fresh_label;
  explicit DistParser(const std::string& s) : c(s), fresh_label(scan_max_label(s) + 1) {}

  static int scan_max_label(const std::string& s) {
    int mx = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (s[i] == '^' && isdigit(static_cast<unsigned char>(s[i + 1]))) {
        int v = 0;
        std::size_t j = i + 1;
        while (j < s.size() && isdigit(static_cast<unsigned char>(s[j])))
          v = v * 10 + (s[j++] - '0');
        mx = std::max(mx, v);
      }
    }
    return mx;
  }

  int parse_label_opt() {
    c.skip_ws();
    if (!c.eof() && c.peek() == '^') {
      c.advance();
      c.skip_ws();
      if (c.eof() || !isdigit(static_cast<unsigned char>(c.peek()))) c.fail("expected label");
      int v = 0;
      while (!c.eof() && isdigit(static_cast<unsigned char>(c.peek()))) {
        v = v * 10 + (c.peek() - '0');
        c.advance();
      }
      return v;
    }
    return fresh_label++;
  }

  TypePtr parse_type() {
    c.skip_ws();
    if (c.eof()) c.fail("expected type");
    if (c.peek() == '[') {
      c.advance();
      TypeMultiset items;
      c.skip_ws();
      if (!c.eof() && c.peek() != ']') {
        items.push_back(parse_type());
        c.skip_ws();
        while (!c.eof() && c.peek() == ',') {
          c.advance();
          items.push_back(parse_type());
          c.skip_ws();
        }
      }
      if (c.eof() || c.peek() != ']') c.fail("expected ']'");
      c.advance();
      c.skip_ws();
      if (c.eof() || c.peek() != '-') c.fail("expected '->' after domain");
      c.advance();
      if (c.eof() || c.peek() != '>') c.fail("expected '->' after domain");
      c.advance();
      int l = parse_label_opt();
      TypePtr cod = parse_type();
      return type_arrow(std::move(items), l, std::move(cod));
    }
    if (c.peek() == '(') {
      c.advance();
      TypePtr t = parse_type();
      c.skip_ws();
      if (c.eof() || c.peek() != ')') c.fail("expected ')'");
      c.advance();
      return t;
    }
    std::string name = parse_ident(c);
    int l = parse_label_opt();
    return type_base(std::move(name), l);
  }

  DistPtr parse_atom(std::vector<std::string>& scope) {
    c.skip_ws();
    if (c.eof()) c.fail("unexpected end of input");
    if (c.peek() == '(') {
      c.advance();
      DistPtr t = parse_term(scope);
      c.skip_ws();
      if (c.eof() || c.peek() != ')') c.fail("expected ')'");
      c.advance();
      return t;
    }
    if (c.peek() == '\\') {
      c.advance();
      std::string binder = parse_ident(c);
      int l = parse_label_opt();
      c.skip_ws();
      if (c.eof() || c.peek() != '.') c.fail("expected '.' after binder");
      c.advance();
      scope.push_back(binder);
      DistPtr body = parse_term(scope);
      scope.pop_back();
      return dist_abs(l, binder, body);
    }
    std::string name = parse_ident(c);
    c.skip_ws();
    if (c.eof() || c.peek() != '^') c.fail("expected '^type' after variable " + name);
    c.advance();
    TypePtr ty = parse_type();
    for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i)
      if (scope[i] == name)
        return dist_bound(static_cast<int>(scope.size()) - 1 - i, ty, name);
    return dist_free(name, ty);
  }

  DistPtr parse_term(std::vector<std::string>& scope) {
    DistPtr t = parse_atom(scope);
    c.skip_ws();
    while (!c.eof() && c.peek() == '[') {
      c.advance();
      std::vector<DistPtr> args;
      c.skip_ws();
      if (!c.eof() && c.peek() != ']') {
        args.push_back(parse_term(scope));
        c.skip_ws();
        while (!c.eof() && c.peek() == ',') {
          c.advance();
          args.push_back(parse_term(scope));
          c.skip_ws();
        }
      }
      if (c.eof() || c.peek() != ']') c.fail("expected ']'");
      c.advance();
      t = dist_app(std::move(t), std::move(args));
      c.skip_ws();
    }
    return t;
  }
};

inline void dist_used_free_names(const DistPtr& t, std::set<std::string>& out) {
  if (is_dvar(t)) {
    if (as_dvar(t).index < 0) out.insert(as_dvar(t).name);
  } else if (is_dabs(t)) {
    dist_used_free_names(as_dabs(t).body, out);
  } else {
    dist_used_free_names(as_dapp(t).fun, out);
    for (auto& a : as_dapp(t).args) dist_used_free_names(a, out);
  }
}

inline void print_dist(const DistPtr& t, std::vector<std::string>& scope,
                       const std::set<std::string>& frees, bool atom, std::string& out) {
  if (is_dvar(t)) {
    const auto& v = as_dvar(t);
    if (v.index >= 0) {
      int i = static_cast<int>(scope.size()) - 1 - v.index;
      out += (i >= 0 && i < static_cast<int>(scope.size())) ? scope[i]
                                                            : ("?" + std::to_string(v.index));
    } else {
      out += v.name;
    }
    out += '^';
    out += print_type(v.type);
    return;
  }
  if (is_dabs(t)) {
    const auto& a = as_dabs(t);
    std::set<std::string> avoid = frees;
    for (auto& s : scope) avoid.insert(s);
    std::string name = pick_name(a.binder, avoid);
    if (atom) out += '(';
    out += '\\';
    out += name;
    out += '^';
    out += std::to_string(a.label);
    out += ". ";
    scope.push_back(name);
    print_dist(a.body, scope, frees, false, out);
    scope.pop_back();
    if (atom) out += ')';
    return;
  }
  const auto& a = as_dapp(t);
  print_dist(a.fun, scope, frees, true, out);
  out += '[';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    print_dist(a.args[i], scope, frees, false, out);
  }
  out += ']';
}

}  // namespace detail

inline DistPtr parse_dist(const std::string& src) {
  detail::DistParser p(src);
  std::vector<std::string> scope;
  DistPtr t = p.parse_term(scope);
  p.c.skip_ws();
  if (!p.c.eof()) p.c.fail("trailing input");
  return t;
}

inline TypePtr parse_dist_type(const std::string& src) {
  detail::DistParser p(src);
  TypePtr t = p.parse_type();
  p.c.skip_ws();
  if (!p.c.eof()) p.c.fail("trailing input");
  return t;
}

inline std::string print_dist(const DistPtr& t) {
  std::set<std::string> frees;
  detail::dist_used_free_names(t, frees);
  std::vector<std::string> scope;
  std::string out;
  detail::print_dist(t, scope, frees, false, out);
  return out;
}

}  // namespace ldist
