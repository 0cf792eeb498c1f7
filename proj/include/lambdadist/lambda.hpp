#pragma once

// Pure lambda calculus with Levy residuals.
//
// Terms are immutable trees in a locally nameless style: bound variables are
// de Bruijn indices (display names are kept for printing only), free variables
// are identified by name.  Every node carries an opaque id used for residual
// tracking: beta reduction never invents ids, it only rearranges and copies
// nodes, so the copies of a duplicated argument share the argument's ids.
// Alpha equivalence is plain structural equality on the index skeleton.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lambdadist/position.hpp"

namespace ldist {

struct internal_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using NodeId = std::uint64_t;

inline NodeId fresh_node_id() {
  static std::atomic<NodeId> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

struct LamTerm;
using LamPtr = std::shared_ptr<const LamTerm>;

struct LamVar {
  int index = -1;  // >= 0: de Bruijn index; < 0: free variable named `name`
  std::string name;
};
struct LamAbs {
  std::string binder;
  LamPtr body;
};
struct LamApp {
  LamPtr fun;
  LamPtr arg;
};

struct LamTerm {
  NodeId id;
  std::variant<LamVar, LamAbs, LamApp> node;
};

inline LamPtr lam_free(std::string name) {
  return std::make_shared<LamTerm>(LamTerm{fresh_node_id(), LamVar{-1, std::move(name)}});
}
inline LamPtr lam_bound(int index, std::string name = "") {
  return std::make_shared<LamTerm>(LamTerm{fresh_node_id(), LamVar{index, std::move(name)}});
}
inline LamPtr lam_abs(std::string binder, LamPtr body) {
  return std::make_shared<LamTerm>(LamTerm{fresh_node_id(), LamAbs{std::move(binder), std::move(body)}});
}
inline LamPtr lam_app(LamPtr fun, LamPtr arg) {
  return std::make_shared<LamTerm>(LamTerm{fresh_node_id(), LamApp{std::move(fun), std::move(arg)}});
}

namespace detail {
inline LamPtr with_id(NodeId id, std::variant<LamVar, LamAbs, LamApp> node) {
  return std::make_shared<LamTerm>(LamTerm{id, std::move(node)});
}
}  // namespace detail

inline bool is_var(const LamPtr& t) { return std::holds_alternative<LamVar>(t->node); }
inline bool is_abs(const LamPtr& t) { return std::holds_alternative<LamAbs>(t->node); }
inline bool is_app(const LamPtr& t) { return std::holds_alternative<LamApp>(t->node); }
inline const LamVar& as_var(const LamPtr& t) { return std::get<LamVar>(t->node); }
inline const LamAbs& as_abs(const LamPtr& t) { return std::get<LamAbs>(t->node); }
inline const LamApp& as_app(const LamPtr& t) { return std::get<LamApp>(t->node); }

inline std::size_t term_size(const LamPtr& t) {
  if (is_var(t)) return 1;
  if (is_abs(t)) return 1 + term_size(as_abs(t).body);
  return 1 + term_size(as_app(t).fun) + term_size(as_app(t).arg);
}

inline bool alpha_equal(const LamPtr& a, const LamPtr& b) {
  if (a->node.index() != b->node.index()) return false;
  if (is_var(a)) {
    const auto& va = as_var(a);
    const auto& vb = as_var(b);
    if ((va.index >= 0) != (vb.index >= 0)) return false;
    return va.index >= 0 ? va.index == vb.index : va.name == vb.name;
  }
  if (is_abs(a)) return alpha_equal(as_abs(a).body, as_abs(b).body);
  return alpha_equal(as_app(a).fun, as_app(b).fun) && alpha_equal(as_app(a).arg, as_app(b).arg);
}

inline bool eq_with_ids(const LamPtr& a, const LamPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->id != b->id || a->node.index() != b->node.index()) return false;
  if (is_var(a)) {
    const auto& va = as_var(a);
    const auto& vb = as_var(b);
    if ((va.index >= 0) != (vb.index >= 0)) return false;
    return va.index >= 0 ? va.index == vb.index : va.name == vb.name;
  }
  if (is_abs(a)) return eq_with_ids(as_abs(a).body, as_abs(b).body);
  return eq_with_ids(as_app(a).fun, as_app(b).fun) && eq_with_ids(as_app(a).arg, as_app(b).arg);
}

// Canonical de Bruijn string, ignores ids and display names.  Used as node
// identity in reduction graphs and as a hash key.
inline void print_key_rec(const LamPtr& t, std::string& out) {
  if (is_var(t)) {
    const auto& v = as_var(t);
    if (v.index >= 0) {
      out += '#';
      out += std::to_string(v.index);
    } else {
      out += v.name;
    }
    return;
  }
  if (is_abs(t)) {
    out += "\\.";
    print_key_rec(as_abs(t).body, out);
    return;
  }
  out += '(';
  print_key_rec(as_app(t).fun, out);
  out += ' ';
  print_key_rec(as_app(t).arg, out);
  out += ')';
}

inline std::string print_key(const LamPtr& t) {
  std::string out;
  print_key_rec(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Subterm navigation

inline LamPtr subterm_at(const LamPtr& t, const Position& p, std::size_t from = 0) {
  if (from == p.size()) return t;
  int d = p[from];
  if (is_abs(t) && d == 0) return subterm_at(as_abs(t).body, p, from + 1);
  if (is_app(t)) {
    if (d == 0) return subterm_at(as_app(t).fun, p, from + 1);
    if (d == 1) return subterm_at(as_app(t).arg, p, from + 1);
  }
  throw domain_error("position " + position_to_string(p) + " does not resolve in term");
}

inline bool is_redex(const LamPtr& t) { return is_app(t) && is_abs(as_app(t).fun); }

inline void collect_redexes(const LamPtr& t, Position& cur, std::vector<Position>& out) {
  if (is_redex(t)) out.push_back(cur);
  if (is_abs(t)) {
    cur.push_back(0);
    collect_redexes(as_abs(t).body, cur, out);
    cur.pop_back();
  } else if (is_app(t)) {
    cur.push_back(0);
    collect_redexes(as_app(t).fun, cur, out);
    cur.back() = 1;
    collect_redexes(as_app(t).arg, cur, out);
    cur.pop_back();
  }
}

// All redex positions in leftmost-outermost order.
inline std::vector<Position> redex_positions(const LamPtr& t) {
  std::vector<Position> out;
  Position cur;
  collect_redexes(t, cur, out);
  return out;
}

// ---------------------------------------------------------------------------
// Beta reduction with id propagation

namespace detail {

// Work budget shared by the recursive residual/projection machinery.  The
// theory guarantees termination; running out of budget indicates a bug (or a
// pathologically large input) and raises internal_limit_error.
inline thread_local long lam_work = -1;

struct WorkScope {
  long saved;
  explicit WorkScope(long budget) : saved(lam_work) {
    if (lam_work < 0) lam_work = budget;
  }
  ~WorkScope() { lam_work = saved; }
};

inline void charge_work() {
  if (lam_work >= 0 && --lam_work < 0)
    throw internal_limit_error("internal work budget exhausted (projection/development)");
}

inline LamPtr shift_free(const LamPtr& t, int by, int cutoff) {
  if (by == 0) return t;
  if (is_var(t)) {
    const auto& v = as_var(t);
    if (v.index >= cutoff) return with_id(t->id, LamVar{v.index + by, v.name});
    return t;
  }
  if (is_abs(t)) {
    const auto& a = as_abs(t);
    LamPtr nb = shift_free(a.body, by, cutoff + 1);
    if (nb.get() == a.body.get()) return t;
    return with_id(t->id, LamAbs{a.binder, nb});
  }
  const auto& a = as_app(t);
  LamPtr nf = shift_free(a.fun, by, cutoff);
  LamPtr na = shift_free(a.arg, by, cutoff);
  if (nf.get() == a.fun.get() && na.get() == a.arg.get()) return t;
  return with_id(t->id, LamApp{nf, na});
}

inline LamPtr subst_bound(const LamPtr& t, int depth, const LamPtr& arg) {
  if (is_var(t)) {
    const auto& v = as_var(t);
    if (v.index == depth) return shift_free(arg, depth, 0);
    if (v.index > depth) return with_id(t->id, LamVar{v.index - 1, v.name});
    return t;
  }
  if (is_abs(t)) {
    const auto& a = as_abs(t);
    return with_id(t->id, LamAbs{a.binder, subst_bound(a.body, depth + 1, arg)});
  }
  const auto& a = as_app(t);
  return with_id(t->id, LamApp{subst_bound(a.fun, depth, arg), subst_bound(a.arg, depth, arg)});
}

}  // namespace detail

// Contracts the redex at position p.  Spine nodes keep their ids; the redex
// and its lambda disappear; substituted copies share the argument's ids.
inline LamPtr contract(const LamPtr& t, const Position& p, std::size_t from = 0) {
  detail::charge_work();
  if (from == p.size()) {
    if (!is_redex(t)) throw domain_error("contract: not a redex at " + position_to_string(p));
    const auto& app = as_app(t);
    return detail::subst_bound(as_abs(app.fun).body, 0, app.arg);
  }
  int d = p[from];
  if (is_abs(t) && d == 0) {
    const auto& a = as_abs(t);
    return detail::with_id(t->id, LamAbs{a.binder, contract(a.body, p, from + 1)});
  }
  if (is_app(t)) {
    const auto& a = as_app(t);
    if (d == 0) return detail::with_id(t->id, LamApp{contract(a.fun, p, from + 1), a.arg});
    if (d == 1) return detail::with_id(t->id, LamApp{a.fun, contract(a.arg, p, from + 1)});
  }
  throw domain_error("contract: bad position " + position_to_string(p));
}

// ---------------------------------------------------------------------------
// Steps and derivations

struct LamStep {
  LamPtr source;
  Position redex;
};

inline bool coinitial(const LamStep& r, const LamStep& s) {
  return eq_with_ids(r.source, s.source);
}
inline bool same_step(const LamStep& r, const LamStep& s) {
  return r.redex == s.redex && coinitial(r, s);
}

inline std::vector<LamStep> beta_redexes(const LamPtr& t) {
  std::vector<LamStep> out;
  for (auto& p : redex_positions(t)) out.push_back(LamStep{t, p});
  return out;
}

inline LamPtr apply_step(const LamStep& r) { return contract(r.source, r.redex); }

struct LamDerivation {
  LamPtr source;
  std::vector<LamStep> steps;

  LamPtr target() const { return steps.empty() ? source : apply_step(steps.back()); }
  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }

  std::vector<Position> positions() const {
    std::vector<Position> out;
    out.reserve(steps.size());
    for (auto& s : steps) out.push_back(s.redex);
    return out;
  }
};

inline LamDerivation empty_derivation(LamPtr src) { return LamDerivation{std::move(src), {}}; }

// Builds a derivation from the list of redex positions, replaying each step.
inline LamDerivation derivation_from_positions(const LamPtr& src, const std::vector<Position>& ps) {
  LamDerivation d{src, {}};
  LamPtr cur = src;
  for (auto& p : ps) {
    d.steps.push_back(LamStep{cur, p});
    cur = contract(cur, p);
  }
  return d;
}

inline LamDerivation compose(const LamDerivation& a, const LamDerivation& b) {
  if (!alpha_equal(a.target(), b.source))
    throw domain_error("compose: derivations are not composable");
  LamDerivation out = a;
  LamPtr cur = a.target();
  // Rebase b's steps on a's target instance so ids stay consistent.
  for (auto& s : b.steps) {
    out.steps.push_back(LamStep{cur, s.redex});
    cur = contract(cur, s.redex);
  }
  return out;
}

namespace detail {

inline LamPtr relabel_fresh(const LamPtr& t) {
  if (is_var(t)) return with_id(fresh_node_id(), as_var(t));
  if (is_abs(t)) {
    const auto& a = as_abs(t);
    return with_id(fresh_node_id(), LamAbs{a.binder, relabel_fresh(a.body)});
  }
  const auto& a = as_app(t);
  return with_id(fresh_node_id(), LamApp{relabel_fresh(a.fun), relabel_fresh(a.arg)});
}

inline void collect_by_ids(const LamPtr& t, const std::set<NodeId>& ids, Position& cur,
                           std::vector<Position>& out) {
  if (ids.count(t->id)) out.push_back(cur);
  if (is_abs(t)) {
    cur.push_back(0);
    collect_by_ids(as_abs(t).body, ids, cur, out);
    cur.pop_back();
  } else if (is_app(t)) {
    cur.push_back(0);
    collect_by_ids(as_app(t).fun, ids, cur, out);
    cur.back() = 1;
    collect_by_ids(as_app(t).arg, ids, cur, out);
    cur.pop_back();
  }
}

// Residual positions of `marked` redexes after contracting at p, all relative
// to the same source t.  Returned positions live in contract(t, p) and are
// sorted leftmost-outermost.
inline std::vector<Position> residual_positions(const LamPtr& t, const Position& p,
                                                const std::vector<Position>& marked) {
  LamPtr fresh = relabel_fresh(t);
  std::set<NodeId> ids;
  for (auto& m : marked) {
    if (m == p) continue;  // autoerasure
    ids.insert(subterm_at(fresh, m)->id);
  }
  LamPtr reduced = contract(fresh, p);
  std::vector<Position> out;
  Position cur;
  collect_by_ids(reduced, ids, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Levy residuals R/S of coinitial steps.
inline std::vector<LamStep> residuals(const LamStep& R, const LamStep& S) {
  if (!coinitial(R, S)) throw domain_error("residuals: steps are not coinitial");
  LamPtr target = apply_step(S);
  std::vector<LamStep> out;
  for (auto& p : detail::residual_positions(R.source, S.redex, {R.redex}))
    out.push_back(LamStep{target, p});
  return out;
}

inline long default_develop_fuel(const LamPtr& t) { return 10 * static_cast<long>(term_size(t)); }

// Complete development of a set of coinitial redex positions, contracting the
// leftmost-outermost residual first.  Finite developments guarantees
// termination; fuel only guards against implementation errors.
inline LamDerivation develop_positions(const LamPtr& src, std::vector<Position> marked,
                                       long fuel = -1) {
  if (fuel < 0) fuel = default_develop_fuel(src);
  std::sort(marked.begin(), marked.end());
  marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
  LamDerivation out{src, {}};
  LamPtr cur = src;
  while (!marked.empty()) {
    if (fuel-- == 0) throw internal_limit_error("develop: fuel exhausted");
    Position p = marked.front();
    std::vector<Position> rest(marked.begin() + 1, marked.end());
    std::vector<Position> next = detail::residual_positions(cur, p, rest);
    out.steps.push_back(LamStep{cur, p});
    cur = contract(cur, p);
    marked = std::move(next);
  }
  return out;
}

inline LamDerivation develop(const std::vector<LamStep>& steps, long fuel = -1) {
  if (steps.empty()) throw domain_error("develop: empty step set needs a source term");
  std::vector<Position> ps;
  for (auto& s : steps) {
    if (!coinitial(s, steps.front())) throw domain_error("develop: steps are not coinitial");
    ps.push_back(s.redex);
  }
  return develop_positions(steps.front().source, ps, fuel);
}

namespace detail {

inline LamDerivation project_impl(const LamDerivation& rho, const LamDerivation& sigma);

// rho / S for a single step S coinitial with rho.
inline LamDerivation project_step(const LamDerivation& rho, const LamStep& S) {
  charge_work();
  LamPtr s_target = apply_step(S);
  if (rho.empty()) return empty_derivation(s_target);

  const LamStep& R = rho.steps.front();
  LamDerivation rho_tail{apply_step(R),
                         std::vector<LamStep>(rho.steps.begin() + 1, rho.steps.end())};

  if (R.redex == S.redex) {
    // R = S: R/S is empty and S/R is empty, so rho/S = tail.
    return rho_tail;
  }
  std::vector<Position> r_res = residual_positions(R.source, S.redex, {R.redex});
  LamDerivation dev_r = develop_positions(s_target, r_res);
  std::vector<Position> s_res = residual_positions(R.source, R.redex, {S.redex});
  LamDerivation s_after_r = develop_positions(apply_step(R), s_res);
  LamDerivation rest = project_impl(rho_tail, s_after_r);
  return compose(dev_r, rest);
}

inline LamDerivation project_impl(const LamDerivation& rho, const LamDerivation& sigma) {
  LamDerivation cur = rho;
  for (auto& s : sigma.steps) cur = project_step(cur, s);
  return cur;
}

}  // namespace detail

// Projection rho/sigma of coinitial derivations.
inline LamDerivation project(const LamDerivation& rho, const LamDerivation& sigma,
                             long budget = 20'000'000) {
  if (!eq_with_ids(rho.source, sigma.source))
    throw domain_error("project: derivations are not coinitial");
  detail::WorkScope scope(budget);
  return detail::project_impl(rho, sigma);
}

inline bool is_prefix(const LamDerivation& rho, const LamDerivation& sigma) {
  return project(rho, sigma).empty();
}

inline bool perm_equiv(const LamDerivation& rho, const LamDerivation& sigma) {
  return is_prefix(rho, sigma) && is_prefix(sigma, rho);
}

// Least upper bound rho(sigma/rho).
inline LamDerivation join(const LamDerivation& rho, const LamDerivation& sigma) {
  return compose(rho, project(sigma, rho));
}

// Residuals of a single step after a whole derivation, as steps from the
// derivation's target.
inline std::vector<LamStep> residuals_after(const LamStep& R, const LamDerivation& sigma) {
  if (!eq_with_ids(R.source, sigma.source))
    throw domain_error("residuals_after: not coinitial");
  std::vector<Position> ps = {R.redex};
  LamPtr cur = sigma.source;
  for (auto& s : sigma.steps) {
    ps = detail::residual_positions(cur, s.redex, ps);
    cur = contract(cur, s.redex);
  }
  std::vector<LamStep> out;
  for (auto& p : ps) out.push_back(LamStep{cur, p});
  return out;
}

// ---------------------------------------------------------------------------
// Parsing and printing
//
//   term ::= '\' ident '.' term | app
//   app  ::= atom+
//   atom ::= ident | '(' term ')'

struct parse_error : std::runtime_error {
  int line, col;
  parse_error(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_),
        col(col_) {}
};

namespace detail {

struct Cursor {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit Cursor(const std::string& s) : src(s) {}

  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }
  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  void skip_ws() {
    while (!eof() && isspace(static_cast<unsigned char>(peek()))) advance();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw parse_error(msg, line, col); }
};

inline bool ident_start(char c) { return isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
  return isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

inline std::string parse_ident(Cursor& c) {
  c.skip_ws();
  if (c.eof() || !ident_start(c.peek())) c.fail("expected identifier");
  std::string out;
  while (!c.eof() && ident_char(c.peek())) {
    out += c.peek();
    c.advance();
  }
  return out;
}

inline LamPtr parse_lam_term(Cursor& c, std::vector<std::string>& scope);

inline LamPtr parse_lam_atom(Cursor& c, std::vector<std::string>& scope) {
  c.skip_ws();
  if (c.eof()) c.fail("unexpected end of input");
  if (c.peek() == '(') {
    c.advance();
    LamPtr t = parse_lam_term(c, scope);
    c.skip_ws();
    if (c.eof() || c.peek() != ')') c.fail("expected ')'");
    c.advance();
    return t;
  }
  std::string name = parse_ident(c);
  for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i)
    if (scope[i] == name) return lam_bound(static_cast<int>(scope.size()) - 1 - i, name);
  return lam_free(name);
}

inline bool at_atom_start(Cursor& c) {
  c.skip_ws();
  return !c.eof() && (c.peek() == '(' || ident_start(c.peek()));
}

inline LamPtr parse_lam_term(Cursor& c, std::vector<std::string>& scope) {
  c.skip_ws();
  if (c.eof()) c.fail("unexpected end of input");
  if (c.peek() == '\\') {
    c.advance();
    std::string binder = parse_ident(c);
    c.skip_ws();
    if (c.eof() || c.peek() != '.') c.fail("expected '.' after binder");
    c.advance();
    scope.push_back(binder);
    LamPtr body = parse_lam_term(c, scope);
    scope.pop_back();
    return lam_abs(binder, body);
  }
  LamPtr t = parse_lam_atom(c, scope);
  while (at_atom_start(c)) t = lam_app(t, parse_lam_atom(c, scope));
  return t;
}

inline void used_free_names(const LamPtr& t, std::set<std::string>& out) {
  if (is_var(t)) {
    if (as_var(t).index < 0) out.insert(as_var(t).name);
  } else if (is_abs(t)) {
    used_free_names(as_abs(t).body, out);
  } else {
    used_free_names(as_app(t).fun, out);
    used_free_names(as_app(t).arg, out);
  }
}

inline std::string pick_name(const std::string& hint, const std::set<std::string>& avoid) {
  std::string base = hint.empty() ? "x" : hint;
  if (!avoid.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!avoid.count(cand)) return cand;
  }
}

inline void print_lam(const LamPtr& t, std::vector<std::string>& scope,
                      const std::set<std::string>& frees, int prec, std::string& out) {
  // prec 0 = term, 1 = app operand position (atom)
  if (is_var(t)) {
    const auto& v = as_var(t);
    if (v.index >= 0) {
      int i = static_cast<int>(scope.size()) - 1 - v.index;
      out += (i >= 0 && i < static_cast<int>(scope.size())) ? scope[i] : ("?" + std::to_string(v.index));
    } else {
      out += v.name;
    }
    return;
  }
  if (is_abs(t)) {
    std::set<std::string> avoid = frees;
    for (auto& s : scope) avoid.insert(s);
    std::string name = pick_name(as_abs(t).binder, avoid);
    if (prec > 0) out += '(';
    out += '\\';
    out += name;
    out += ". ";
    scope.push_back(name);
    print_lam(as_abs(t).body, scope, frees, 0, out);
    scope.pop_back();
    if (prec > 0) out += ')';
    return;
  }
  const auto& a = as_app(t);
  if (prec > 0) out += '(';
  // Left-nested applications print without parens; an abstraction in function
  // position needs them.
  print_lam(a.fun, scope, frees, is_abs(a.fun) ? 1 : 0, out);
  out += ' ';
  print_lam(a.arg, scope, frees, 1, out);
  if (prec > 0) out += ')';
}

}  // namespace detail

inline LamPtr parse_lam(const std::string& src) {
  detail::Cursor c(src);
  std::vector<std::string> scope;
  LamPtr t = detail::parse_lam_term(c, scope);
  c.skip_ws();
  if (!c.eof()) c.fail("trailing input");
  return t;
}

inline std::string print_lam(const LamPtr& t) {
  std::set<std::string> frees;
  detail::used_free_names(t, frees);
  std::vector<std::string> scope;
  std::string out;
  detail::print_lam(t, scope, frees, 0, out);
  return out;
}

}  // namespace ldist
