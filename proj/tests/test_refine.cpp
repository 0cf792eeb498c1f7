#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "lambdadist/refine.hpp"

using namespace ldist;

namespace {

// Contracts every redex whose lambda label is not among `keep` until only
// kept labels remain; used to replay a pullback forward.
DistPtr reduce_fresh_labels(DistPtr t, const std::set<Label>& keep) {
  for (int guard = 0; guard < 64; ++guard) {
    bool done = true;
    for (auto& r : dist_redexes(t)) {
      if (keep.count(r.label)) continue;
      t = apply_dist_step(r);
      done = false;
      break;
    }
    if (done) return t;
  }
  throw std::runtime_error("reduce_fresh_labels did not converge");
}

std::set<Label> label_set(const DistPtr& t) {
  auto ls = lambda_labels(t);
  return {ls.begin(), ls.end()};
}

}  // namespace

TEST_CASE("check_refines basics") {
  CHECK(check_refines(parse_dist("x^a^1"), parse_lam("x")).ok);

  // one of the refinements of (\x. x x) y
  auto out = check_refines(parse_dist("(\\x^1. x^[]->^2 a^3 [])[y^[]->^2 a^3]"),
                           parse_lam("(\\x. x x) y"));
  REQUIRE(out.ok);
  // every dist position maps somewhere, the root maps to the root
  CHECK(out.witness.correspondence.at({}) == Position{});
  CHECK(out.witness.correspondence.at({1}) == Position{1});

  auto bad = check_refines(parse_dist("x^a^1"), parse_lam("y"));
  CHECK_FALSE(bad.ok);
  CHECK(bad.fail_pos == Position{});
}

TEST_CASE("refinement respects binding structure") {
  CHECK(refines(parse_dist("\\x^1. x^a^2"), parse_lam("\\x. x")));
  // binder names do not matter
  CHECK(refines(parse_dist("\\w^1. w^a^2"), parse_lam("\\x. x")));
  // but binding structure does
  CHECK_FALSE(refines(parse_dist("\\w^1. q^a^2"), parse_lam("\\x. x")));
}

TEST_CASE("argument multiplicities") {
  LamPtr t = parse_lam("(\\x. x x) y");
  CHECK(refines(parse_dist("(\\x^1. x^[a^2]->^3 b^4 [x^a^2])[y^[a^2]->^3 b^4, y^a^2]"), t));
  CHECK(refines(parse_dist(
                    "(\\x^1. x^[a^2,b^3]->^4 g^5 [x^a^2, x^b^3])"
                    "[y^[a^2,b^3]->^4 g^5, y^a^2, y^b^3]"),
                t));
}

TEST_CASE("is_strongly_sequential") {
  CHECK(is_strongly_sequential(parse_dist("(\\x^1. y^a^2)[]")));
  CHECK_FALSE(is_strongly_sequential(
      parse_dist("\\y^1. x^[a^2]->^3 [a^2]->^4 b^5 [y^a^2][z^a^2]")));
  CHECK(is_strongly_sequential(parse_dist("x^a^1")));
  CHECK(is_strongly_sequential(parse_dist("(\\x^1. x^a^2)[y^a^2]")));
}

TEST_CASE("canonical_hnf_refinement") {
  LabelSupply fresh;
  DistPtr y = canonical_hnf_refinement(parse_lam("y"), fresh);
  CHECK(dist_equal(y, parse_dist("y^a^1")));

  LabelSupply fresh2;
  DistPtr head_app = canonical_hnf_refinement(parse_lam("x ((\\x. x) y)"), fresh2);
  CHECK(dist_equal(head_app, parse_dist("x^[]->^1 a^2 []")));
  CHECK(refines(head_app, parse_lam("x ((\\x. x) y)")));

  LabelSupply fresh3;
  LamPtr hnf = parse_lam("\\x. y x x");
  DistPtr r = canonical_hnf_refinement(hnf, fresh3);
  CHECK(dist_equal(r, parse_dist("\\x^1. y^[]->^2 []->^3 a^4 [][]")));
  CHECK(check_correct(r).ok);
  CHECK(is_strongly_sequential(r));
  CHECK(refines(r, hnf));

  CHECK_THROWS_AS(canonical_hnf_refinement(parse_lam("(\\x. x) y"), fresh3), domain_error);
}

TEST_CASE("canonical refinements cover assorted head normal forms") {
  for (const char* src : {"y", "\\x. x", "x y z", "\\x. \\y. y (x x)", "\\z. z ((\\x. x) y)"}) {
    LamPtr t = parse_lam(src);
    REQUIRE(is_head_normal_form(t));
    LabelSupply fresh;
    DistPtr r = canonical_hnf_refinement(t, fresh);
    CHECK(check_correct(r).ok);
    CHECK(is_strongly_sequential(r));
    CHECK(refines(r, t));
    // canonical refinements are normal forms
    CHECK(dist_redexes(r).empty());
  }
}

TEST_CASE("pullback along the one-step simulation diagram") {
  // R : x ((\x. x) y) -> x y, refined target x^{[a^1]->^2 b^3}[y^{a^1}]
  LamPtr src = parse_lam("x ((\\x. x) y)");
  LamStep R{src, {1}};
  DistPtr sp = parse_dist("x^[a^1]->^2 b^3 [y^a^1]");
  LabelSupply fresh{4};
  DistPtr pulled = pullback_refinement(R, sp, fresh);
  CHECK(dist_equal(pulled, parse_dist("x^[a^1]->^2 b^3 [(\\x^4. x^a^1)[y^a^1]]")));
  CHECK(refines(pulled, src));
  CHECK(is_strongly_sequential(pulled));
}

TEST_CASE("pullback at the root") {
  LamPtr src = parse_lam("(\\x. x) y");
  LamStep R{src, {}};
  LabelSupply fresh{2};
  DistPtr pulled = pullback_refinement(R, parse_dist("y^a^1"), fresh);
  CHECK(dist_equal(pulled, parse_dist("(\\x^2. x^a^1)[y^a^1]")));
  // reducing the introduced redex recovers the refined target
  DistPtr back = reduce_fresh_labels(pulled, label_set(parse_dist("y^a^1")));
  CHECK(dist_equal(back, parse_dist("y^a^1")));
}

TEST_CASE("pullback of an erasing step uses an empty argument list") {
  LamPtr src = parse_lam("(\\x. z) y");
  LamStep R{src, {}};
  LabelSupply fresh{2};
  DistPtr pulled = pullback_refinement(R, parse_dist("z^a^1"), fresh);
  CHECK(dist_equal(pulled, parse_dist("(\\x^2. z^a^1)[]")));
}

TEST_CASE("pullback round trips and preserves typing") {
  struct Case {
    const char* source;
    Position redex;
    const char* refined_target;
  };
  for (auto& c : std::vector<Case>{
           {"(\\x. x) y", Position{}, "y^a^1"},
           {"x ((\\x. x) y)", Position{1}, "x^[a^1]->^2 b^3 [y^a^1]"},
           {"x ((\\x. x) y)", Position{1}, "x^[]->^1 a^2 []"},
           {"(\\x. x x) y", Position{}, "y^[a^1]->^2 b^3 [y^a^1]"},
           {"\\w. (\\x. w x) z", Position{0}, "\\w^1. w^[a^2]->^3 b^4 [z^a^2]"},
       }) {
    LamPtr src = parse_lam(c.source);
    LamStep R{src, c.redex};
    DistPtr sp = parse_dist(c.refined_target);
    REQUIRE(refines(sp, apply_step(R)));
    REQUIRE(is_strongly_sequential(sp));
    LabelSupply fresh{100};
    DistPtr pulled = pullback_refinement(R, sp, fresh);
    CHECK(refines(pulled, src));
    CHECK(check_correct(pulled).ok);
    CHECK(is_strongly_sequential(pulled));
    // forward reduction of the introduced redexes reaches sp again
    CHECK(dist_equal(reduce_fresh_labels(pulled, label_set(sp)), sp));
    // subject expansion: the pulled-back term has the judgment of its reduct
    Judgment ja = infer_type(pulled);
    Judgment jb = infer_type(sp);
    CHECK(type_equal(ja.type, jb.type));
    CHECK(ja.named.size() == jb.named.size());
    for (auto& [name, ms] : ja.named) CHECK(multiset_equal(ms, jb.named.at(name)));
  }
}

TEST_CASE("refinement_for") {
  LabelSupply fresh;
  RefinementSearch found = refinement_for(parse_lam("(\\x. x x) y"), 20, fresh);
  REQUIRE(found.term.has_value());
  CHECK(refines(*found.term, parse_lam("(\\x. x x) y")));
  CHECK(is_strongly_sequential(*found.term));
  CHECK(check_correct(*found.term).ok);

  LabelSupply fresh2;
  RefinementSearch omega = refinement_for(parse_lam("(\\x. x x) (\\x. x x)"), 20, fresh2);
  CHECK_FALSE(omega.term.has_value());
  CHECK(omega.fuel_exhausted);

  LabelSupply fresh3;
  RefinementSearch triv = refinement_for(parse_lam("y"), 20, fresh3);
  REQUIRE(triv.term.has_value());
  CHECK(dist_equal(*triv.term, parse_dist("y^a^1")));
}

TEST_CASE("normal forms refine head normal forms") {
  struct Case {
    const char* dist;
    const char* lam;
  };
  for (auto& c : std::vector<Case>{
           {"y^a^1", "y"},
           {"x^[]->^1 a^2 []", "x ((\\x. x) y)"},
           {"\\x^1. y^[]->^2 []->^3 a^4 [][]", "\\x. y x x"},
           {"y^[a^2]->^3 []->^4 b^5 [z^a^2][]", "y z ((\\x. x) z)"},
       }) {
    DistPtr d = parse_dist(c.dist);
    LamPtr l = parse_lam(c.lam);
    REQUIRE(dist_redexes(d).empty());
    REQUIRE(refines(d, l));
    CHECK(is_head_normal_form(l));
  }
}
