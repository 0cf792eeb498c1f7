#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "generators.hpp"
#include "lambdadist/dist.hpp"
#include "lambdadist/verify.hpp"

using namespace ldist;

namespace {

// The running example: (\x^1. x^{[a^2]->^3 a^2} [x^{a^2}])[I3, I4[z^{a^2}]]
// with I3 = \x^3. x^{a^2} and I4 = \x^4. x^{a^2}.
DistPtr example_term() {
  return parse_dist(
      "(\\x^1. x^[a^2]->^3 a^2 [x^a^2])"
      "[\\x^3. x^a^2, (\\x^4. x^a^2)[z^a^2]]");
}

DistStep step_with_label(const DistPtr& t, Label l) {
  for (auto& s : dist_redexes(t))
    if (s.label == l) return s;
  throw std::runtime_error("no redex with label " + std::to_string(l));
}

// Follow a label sequence from t.
DistDerivation by_labels(const DistPtr& t, const std::vector<Label>& ls) {
  DistDerivation d{t, {}};
  DistPtr cur = t;
  for (Label l : ls) {
    DistStep s = step_with_label(cur, l);
    d.steps.push_back(s);
    cur = apply_dist_step(s);
  }
  return d;
}

}  // namespace

TEST_CASE("typing: var axiom") {
  DistPtr t = parse_dist("x^a^1");
  Judgment j = infer_type(t);
  REQUIRE(j.named.count("x"));
  REQUIRE(j.named["x"].size() == 1);
  CHECK(type_equal(j.named["x"][0], parse_dist_type("a^1")));
  CHECK(type_equal(j.type, parse_dist_type("a^1")));
}

TEST_CASE("typing: worked abstraction judgment") {
  DistPtr t = parse_dist("\\x^1. x^[a^2,a^3]->^4 b^5 [x^a^3, x^a^2]");
  Judgment j = infer_type(t);
  CHECK(j.named.empty());
  CHECK(type_equal(j.type, parse_dist_type("[[a^2,a^3]->^4 b^5, a^2, a^3]->^1 b^5")));
}

TEST_CASE("typing: mismatched argument multiset is an error") {
  DistPtr t = parse_dist("x^[a^1]->^2 b^3 [y^b^4]");
  CHECK_THROWS_AS(infer_type(t), type_error);
}

TEST_CASE("check_correct") {
  CHECK(check_correct(parse_dist("x^[a^1]->^2 b^3 [x^a^1]")).ok);

  auto dup = check_correct(parse_dist("\\x^1. \\y^1. y^a^2"));
  CHECK_FALSE(dup.ok);
  CHECK(dup.violation.find("duplicate lambda label") != std::string::npos);

  auto nonseq = check_correct(parse_dist("\\x^1. x^[a^2]->^3 [b^4,b^4]->^5 g^6"));
  CHECK_FALSE(nonseq.ok);
  CHECK(nonseq.violation.find("non-sequential") != std::string::npos);

  CHECK(check_correct(example_term()).ok);
}

TEST_CASE("types_of_free_occurrences") {
  DistPtr t = parse_dist("x^[a^1]->^2 b^3 [x^a^1]");
  TypeMultiset m = types_of_free_occurrences("x", t);
  REQUIRE(m.size() == 2);
  CHECK(type_equal(m[0], parse_dist_type("[a^1]->^2 b^3")));
  CHECK(type_equal(m[1], parse_dist_type("a^1")));

  CHECK(types_of_free_occurrences("x", parse_dist("y^a^1")).empty());

  TypeMultiset single = types_of_free_occurrences("x", parse_dist("\\y^3. x^a^1"));
  REQUIRE(single.size() == 1);
  CHECK(type_equal(single[0], parse_dist_type("a^1")));
}

TEST_CASE("type-directed substitution routes arguments by type") {
  DistPtr t = parse_dist("x^[a^1]->^2 b^3 [x^a^1]");

  DistPtr r1 = dist_substitute(t, "x", {parse_dist("y^[a^1]->^2 b^3"), parse_dist("z^a^1")});
  CHECK(dist_equal(r1, parse_dist("y^[a^1]->^2 b^3 [z^a^1]")));

  // Same arguments with swapped roles: types still decide the routing.
  DistPtr r2 = dist_substitute(t, "x", {parse_dist("y^a^1"), parse_dist("z^[a^1]->^2 b^3")});
  CHECK(dist_equal(r2, parse_dist("z^[a^1]->^2 b^3 [y^a^1]")));

  // Argument permutation does not change the result.
  DistPtr r3 = dist_substitute(t, "x", {parse_dist("z^a^1"), parse_dist("y^[a^1]->^2 b^3")});
  CHECK(dist_equal(r1, r3));

  CHECK(dist_equal(dist_substitute(parse_dist("y^a^1"), "x", {}), parse_dist("y^a^1")));

  CHECK_THROWS_AS(dist_substitute(t, "x", {parse_dist("y^a^1")}), domain_error);
}

TEST_CASE("substitution lemma instances") {
  // t{x:=s}{y:=u} = t{y:=u1}{x:=s{y:=u2}} with x not free in u.
  DistPtr t = parse_dist("x^[a^1]->^2 b^3 [y^a^1]");
  std::vector<DistPtr> s = {parse_dist("y^[a^1]->^2 b^3")};
  std::vector<DistPtr> u = {parse_dist("w^a^1"), parse_dist("v^[a^1]->^2 b^3")};

  DistPtr lhs = dist_substitute(dist_substitute(t, "x", s), "y", u);
  // u splits: w^a^1 feeds the y already in t, v feeds the y inside s.
  DistPtr s2 = dist_substitute(s[0], "y", {parse_dist("v^[a^1]->^2 b^3")});
  DistPtr rhs = dist_substitute(dist_substitute(t, "y", {parse_dist("w^a^1")}), "x", {s2});
  CHECK(dist_equal(lhs, rhs));
}

TEST_CASE("redexes and reduction of the running example") {
  DistPtr t = example_term();
  auto steps = dist_redexes(t);
  REQUIRE(steps.size() == 2);
  std::set<Label> ls;
  for (auto& s : steps) ls.insert(s.label);
  CHECK(ls == std::set<Label>{1, 4});

  DistPtr after1 = apply_dist_step(step_with_label(t, 1));
  CHECK(dist_equal(after1, parse_dist("(\\x^3. x^a^2)[(\\x^4. x^a^2)[z^a^2]]")));

  CHECK(dist_redexes(parse_dist("z^a^2")).empty());

  // Subject reduction: context and type are unchanged, lambda count drops by 1.
  Judgment before = infer_type(t);
  for (auto& s : steps) {
    DistPtr next = apply_dist_step(s);
    CHECK(check_correct(next).ok);
    Judgment after = infer_type(next);
    CHECK(type_equal(before.type, after.type));
    CHECK(before.named.size() == after.named.size());
    for (auto& [name, ms] : before.named) {
      REQUIRE(after.named.count(name));
      CHECK(multiset_equal(ms, after.named[name]));
    }
    CHECK(lambda_labels(next).size() + 1 == lambda_labels(t).size());
  }
}

TEST_CASE("normalize") {
  auto [nf, d] = normalize(example_term());
  CHECK(dist_equal(nf, parse_dist("z^a^2")));
  CHECK(d.size() == 3);

  auto [nf2, d2] = normalize(parse_dist("z^a^2"));
  CHECK(d2.empty());
  CHECK(dist_equal(nf2, parse_dist("z^a^2")));

  auto [nf3, d3] = normalize(parse_dist("(\\x^1. x^a^2)[y^a^2]"));
  CHECK(dist_equal(nf3, parse_dist("y^a^2")));
  CHECK(d3.size() == 1);
}

TEST_CASE("lambda_labels") {
  CHECK(lambda_labels(parse_dist("(\\x^1. x^[a^2]->^3 a^2)[\\x^3. x^a^2]")) ==
        std::vector<Label>{1, 3});
  CHECK(lambda_labels(parse_dist("x^a^1")).empty());
  CHECK(lambda_labels(example_term()) == std::vector<Label>{1, 3, 4});
}

TEST_CASE("dist residuals") {
  DistPtr t = example_term();
  DistStep r4 = step_with_label(t, 4);
  DistStep r1 = step_with_label(t, 1);

  CHECK(dist_residual(r4, r4).empty());

  // label-1 after label-4: the unique label-1 step from the reduct
  auto res = dist_residual(r1, r4);
  REQUIRE(res.size() == 1);
  CHECK(res[0].label == 1);

  // label-3 after label-4 one node down the graph
  DistPtr n1 = apply_dist_step(r1);  // I3[I4[z]]
  DistStep stepT = step_with_label(n1, 3);
  DistStep stepRp = step_with_label(n1, 4);
  auto resT = dist_residual(stepT, stepRp);
  REQUIRE(resT.size() == 1);
  CHECK(resT[0].label == 3);
  CHECK(dist_equal(resT[0].source, parse_dist("(\\x^3. x^a^2)[z^a^2]")));
}

TEST_CASE("diamond property on the running example") {
  DistPtr t = example_term();
  auto steps = dist_redexes(t);
  for (auto& r : steps)
    for (auto& s : steps) {
      if (dist_same_step(r, s)) continue;
      DistStep r2 = dist_residual(r, s).front();
      DistStep s2 = dist_residual(s, r).front();
      CHECK(dist_equal(apply_dist_step(r2), apply_dist_step(s2)));
    }
}

TEST_CASE("projection, prefix, join, meet on the running example") {
  DistPtr t = example_term();
  DistDerivation ST = by_labels(t, {1, 3});
  DistDerivation RSp = by_labels(t, {4, 1});
  DistDerivation RSpTp = by_labels(t, {4, 1, 3});
  DistDerivation R = by_labels(t, {4});
  DistDerivation S = by_labels(t, {1});

  // ST/RS' = T'
  DistDerivation proj = dist_project(ST, RSp);
  REQUIRE(proj.size() == 1);
  CHECK(proj.steps[0].label == 3);

  // S join R = SR'
  DistDerivation jn = dist_join(S, R);
  CHECK(labs(jn) == std::set<Label>{1, 4});
  REQUIRE(jn.size() == 2);
  CHECK(jn.steps[0].label == 1);
  CHECK(jn.steps[1].label == 4);

  // meets
  CHECK(dist_meet(ST, R).empty());
  DistDerivation m1 = dist_meet(ST, RSp);
  CHECK(labs(m1) == std::set<Label>{1});
  DistDerivation m2 = dist_meet(ST, RSpTp);
  CHECK(labs(m2) == std::set<Label>{1, 3});
  CHECK(dist_equiv(m2, ST));

  // prefix and equivalence by labels, cross-checked by projection
  CHECK(dist_prefix(S, ST));
  CHECK(dist_prefix_by_projection(S, ST));
  CHECK_FALSE(dist_prefix(ST, S));
  CHECK_FALSE(dist_prefix_by_projection(ST, S));
  DistDerivation SRp = by_labels(t, {1, 4});
  DistDerivation RSp2 = by_labels(t, {4, 1});
  CHECK(dist_equiv(SRp, RSp2));
  CHECK((dist_prefix_by_projection(SRp, RSp2) && dist_prefix_by_projection(RSp2, SRp)));
}

TEST_CASE("label laws") {
  DistPtr t = example_term();
  std::vector<DistDerivation> ds;
  std::vector<std::vector<Label>> seqs{{},     {1},    {4},       {1, 3},
                                       {1, 4}, {4, 1}, {1, 3, 4}, {1, 4, 3},
                                       {4, 1, 3}};
  for (auto& q : seqs) ds.push_back(by_labels(t, q));
  for (auto& rho : ds) {
    CHECK(rho.size() == labs(rho).size());
    std::set<Label> lr = labs(rho);
    for (auto& sigma : ds) {
      DistDerivation p = dist_project(rho, sigma);
      std::set<Label> ls = labs(sigma);
      std::set<Label> expect;
      std::set_difference(lr.begin(), lr.end(), ls.begin(), ls.end(),
                          std::inserter(expect, expect.begin()));
      CHECK(labs(p) == expect);
    }
  }
}

TEST_CASE("reduction under binders shifts dangling indices") {
  // contracting the inner redex places w under an extra binder
  DistPtr t = parse_dist("\\w^1. (\\x^2. \\d^3. x^a^4)[w^a^4]");
  REQUIRE(check_correct(t).ok);
  auto steps = dist_redexes(t);
  REQUIRE(steps.size() == 1);
  DistPtr reduced = apply_dist_step(steps.front());
  CHECK(dist_equal(reduced, parse_dist("\\w^1. \\d^3. w^a^4")));
  CHECK(check_correct(reduced).ok);

  // and the binder-referencing argument keeps pointing at the right lambda
  DistPtr u = parse_dist("\\w^1. (\\x^2. x^[]->^3 a^4)[\\d^3. w^a^4]");
  REQUIRE(check_correct(u).ok);
  DistPtr ured = apply_dist_step(dist_redexes(u).front());
  CHECK(dist_equal(ured, parse_dist("\\w^1. \\d^3. w^a^4")));
}

TEST_CASE("invariant suite passes on generated terms") {
  gen::Rng rng(31);
  LabelSupply labels;
  for (int i = 0; i < 25; ++i) {
    DistPtr t = gen::random_correct_dist(rng, labels, 3, 22);
    for (auto& r : verify_dist_instance(t)) {
      INFO(print_dist(t));
      INFO(r.name << ": " << r.detail);
      CHECK(r.ok);
    }
  }
}

TEST_CASE("full stability search on a three-redex term") {
  DistPtr t = parse_dist("(\\x^1. x^a^2)[(\\y^3. y^a^2)[(\\w^4. w^a^2)[z^a^2]]]");
  REQUIRE(check_correct(t).ok);
  auto redexes = dist_redexes(t);
  REQUIRE(redexes.size() >= 2);
  for (auto& a : redexes)
    for (auto& b : redexes) {
      if (dist_same_step(a, b)) continue;
      DistDerivation rho{t, {a}};
      DistDerivation sigma{t, {b}};
      DistDerivation sr = dist_project(sigma, rho);
      DistDerivation rs = dist_project(rho, sigma);
      for (auto& t1 : dist_redexes(rho.target())) {
        auto t3a = dist_project(DistDerivation{rho.target(), {t1}}, sr);
        if (t3a.empty()) continue;
        for (auto& t2 : dist_redexes(sigma.target())) {
          auto t3b = dist_project(DistDerivation{sigma.target(), {t2}}, rs);
          if (t3b.empty()) continue;
          if (t3a.steps[0].label != t3b.steps[0].label) continue;
          // a common target step: some source step must project onto both
          bool found = false;
          for (auto& t0 : dist_redexes(t)) {
            auto via_rho = dist_project(DistDerivation{t, {t0}}, rho);
            auto via_sigma = dist_project(DistDerivation{t, {t0}}, sigma);
            if (!via_rho.empty() && !via_sigma.empty() &&
                via_rho.steps[0].label == t1.label && via_sigma.steps[0].label == t2.label) {
              found = true;
              break;
            }
          }
          CHECK(found);
        }
      }
    }
}
