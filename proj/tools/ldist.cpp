// Command-line front end for the two calculi: correctness and typing checks,
// reduction-graph exploration, refinement synthesis, simulation, sieving,
// and the factorization of derivation spaces.
//
// Exit codes: 0 success, 1 domain error (parse errors, failed checks,
// violated preconditions), 2 usage error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lambdadist/dist.hpp"
#include "lambdadist/factor.hpp"
#include "lambdadist/lambda.hpp"
#include "lambdadist/refine.hpp"
#include "lambdadist/simulate.hpp"
#include "lambdadist/spaces.hpp"
#include "lambdadist/verify.hpp"

using json = nlohmann::ordered_json;
using namespace ldist;

namespace {

// Steps are given as comma-separated redex positions in dotted notation,
// "e" for the root; indices count from the root, 0 = function or body,
// k >= 1 = the k-th argument.
std::vector<Position> parse_steps(const std::string& s) {
  std::vector<Position> out;
  if (s == "-" || s.empty()) return out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    Position p;
    if (!position_from_string(cur, p)) throw domain_error("bad position '" + cur + "'");
    out.push_back(p);
    cur.clear();
  };
  for (char c : s) {
    if (c == ',' || c == ' ') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

// An empty derivation prints as "-", a root step as "e".
std::string positions_to_string(const std::vector<Position>& ps) {
  if (ps.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ',';
    out += position_to_string(ps[i]);
  }
  return out;
}

json space_to_json(const ReductionGraph& g, const SpaceLattice& s) {
  json out;
  out["nodes"] = json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    out["nodes"].push_back({{"id", i}, {"term", g.nodes[i].display}});
  out["edges"] = json::array();
  for (auto& e : g.edges) {
    json edge{{"src", e.src}, {"dst", e.dst}};
    if (g.dist_side) edge["label"] = e.label;
    edge["position"] = position_to_string(e.pos);
    out["edges"].push_back(edge);
  }
  out["classes"] = json::array();
  for (std::size_t i = 0; i < s.classes.size(); ++i) {
    json cls{{"id", i}};
    json members = json::array();
    for (auto& path : s.classes[i].members) {
      json steps = json::array();
      for (auto& p : path) steps.push_back(position_to_string(p));
      members.push_back(steps);
    }
    cls["members"] = members;
    if (s.dist_side) {
      json labels = json::array();
      for (auto l : s.classes[i].labels) labels.push_back(l);
      cls["labs"] = labels;
    }
    out["classes"].push_back(cls);
  }
  return out;
}

RefinementWitness require_witness(const DistPtr& tp, const LamPtr& t) {
  auto correct = check_correct(tp);
  if (!correct.ok)
    throw domain_error("the distributive term is not correct: " + correct.violation + " at " +
                       position_to_string(correct.where));
  auto out = check_refines(tp, t);
  if (!out.ok)
    throw domain_error("the term does not refine the lambda term: " + out.fail_reason + " at " +
                       position_to_string(out.fail_pos));
  return out.witness;
}

int run_check(const std::string& term) {
  DistPtr t = parse_dist(term);
  auto rep = check_correct(t);
  if (rep.ok) {
    std::cout << "correct\n";
    return 0;
  }
  std::cout << "incorrect: " << rep.violation << " at " << position_to_string(rep.where) << "\n";
  return 1;
}

int run_type(const std::string& term) {
  DistPtr t = parse_dist(term);
  Judgment j = infer_type(t);
  bool first = true;
  for (auto& [name, ms] : j.named) {
    if (!first) std::cout << ", ";
    first = false;
    std::cout << name << " : [";
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << print_type(ms[i]);
    }
    std::cout << "]";
  }
  std::cout << (j.named.empty() ? "" : " ") << "|- " << print_dist(t) << " : "
            << print_type(j.type) << "\n";
  return 0;
}

int run_graph(const std::string& term, bool dist_side, bool dot, bool as_json) {
  ReductionGraph g;
  if (dist_side) {
    DistPtr t = parse_dist(term);
    auto rep = check_correct(t);
    if (!rep.ok) throw domain_error("term is not correct: " + rep.violation);
    g = enumerate_graph_dist(t);
  } else {
    g = enumerate_graph_lambda(parse_lam(term));
  }
  if (dot) {
    std::cout << emit_dot(g);
    return 0;
  }
  SpaceLattice s = build_space(g);
  if (as_json) {
    std::cout << space_to_json(g, s).dump(2) << "\n";
    return 0;
  }
  std::cout << g.nodes.size() << " nodes, " << g.edges.size() << " edges, "
            << s.classes.size() << " derivation classes\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    std::cout << "  #" << i << (static_cast<int>(i) == g.root ? " (root) " : "        ")
              << g.nodes[i].display << "\n";
  for (auto& e : g.edges) {
    std::cout << "  #" << e.src << " -> #" << e.dst << "  at " << position_to_string(e.pos);
    if (g.dist_side) std::cout << "  label " << e.label;
    std::cout << "\n";
  }
  return 0;
}

int run_normalize(const std::string& term) {
  DistPtr t = parse_dist(term);
  auto rep = check_correct(t);
  if (!rep.ok) throw domain_error("term is not correct: " + rep.violation);
  auto [nf, d] = normalize(t);
  std::cout << print_dist(nf) << "\n";
  std::cout << "steps: " << d.size();
  if (!d.empty()) {
    std::cout << "  labels:";
    for (auto& s : d.steps) std::cout << " " << s.label;
  }
  std::cout << "\n";
  return 0;
}

int run_refine(const std::string& term, long fuel) {
  LamPtr t = parse_lam(term);
  LabelSupply fresh;
  RefinementSearch search = refinement_for(t, fuel, fresh);
  if (!search.term) {
    std::cout << "none";
    if (search.fuel_exhausted)
      std::cout << " (no head normal form within " << fuel << " steps)";
    std::cout << "\n";
    return 1;
  }
  std::cout << print_dist(*search.term) << "\n";
  return 0;
}

int run_simulate(const std::string& lam_src, const std::string& dist_src,
                 const std::string& steps) {
  LamPtr t = parse_lam(lam_src);
  DistPtr tp = parse_dist(dist_src);
  RefinementWitness w = require_witness(tp, t);
  LamDerivation rho = derivation_from_positions(w.lam_term, parse_steps(steps));
  auto [d, w_after] = sim_residual_derivation(rho, w);
  std::cout << "simulated " << rho.size() << " lambda step(s) by " << d.size()
            << " dist step(s)\n";
  for (auto& s : d.steps)
    std::cout << "  label " << s.label << " at " << position_to_string(s.redex) << "\n";
  std::cout << "result: " << print_dist(w_after.dist_term) << "\n";
  std::cout << "refines: " << print_lam(w_after.lam_term) << "\n";
  return 0;
}

int run_sieve(const std::string& lam_src, const std::string& dist_src, const std::string& steps) {
  LamPtr t = parse_lam(lam_src);
  RefinementWitness w = require_witness(parse_dist(dist_src), t);
  LamDerivation rho = derivation_from_positions(w.lam_term, parse_steps(steps));
  LamDerivation sv = sieve(rho, w);
  std::cout << positions_to_string(sv.positions()) << "\n";
  std::cout << "target: " << print_lam(sv.target()) << "\n";
  return 0;
}

int run_factorize(const std::string& lam_src, const std::string& dist_src,
                  const std::string& steps) {
  LamPtr t = parse_lam(lam_src);
  RefinementWitness w = require_witness(parse_dist(dist_src), t);
  LamDerivation rho = derivation_from_positions(w.lam_term, parse_steps(steps));
  FactorizationResult f = factorize(rho, w);
  std::cout << "garbage-free: " << positions_to_string(f.garbage_free.positions()) << "\n";
  std::cout << "garbage:      " << positions_to_string(f.garbage.positions()) << "\n";
  return 0;
}

int run_groth(const std::string& lam_src, const std::string& dist_src, bool as_json) {
  LamPtr t = parse_lam(lam_src);
  RefinementWitness w = require_witness(parse_dist(dist_src), t);
  ReductionGraph g = enumerate_graph_lambda(w.lam_term);
  SpaceLattice s = build_space(g);
  GrothendieckSpace gr = build_grothendieck(s, w);
  IsoReport iso = check_factorization_iso(s, gr);

  if (as_json) {
    json out = space_to_json(g, s);
    out["pairs"] = json::array();
    for (std::size_t p = 0; p < gr.pairs.size(); ++p) {
      auto [b, f] = gr.pairs[p];
      json pair{{"id", p},
                {"base_class", gr.base_space_class[b]},
                {"garbage_free", positions_to_string(gr.base_rep[b].positions())},
                {"garbage", positions_to_string(gr.fiber_reps[b][f].positions())}};
      out["pairs"].push_back(pair);
    }
    json order = json::array();
    for (std::size_t p = 0; p < gr.pairs.size(); ++p)
      for (std::size_t q = 0; q < gr.pairs.size(); ++q)
        if (p != q && gr.pair_leq[p][q]) order.push_back({p, q});
    out["pair_order"] = order;
    out["isomorphism"] = iso.ok;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << s.classes.size() << " derivation classes, " << gr.base_rep.size()
              << " garbage-free classes, " << gr.pairs.size() << " pairs\n";
    for (std::size_t b = 0; b < gr.base_rep.size(); ++b) {
      std::cout << "  base " << positions_to_string(gr.base_rep[b].positions()) << " with "
                << gr.fiber_reps[b].size() << " garbage class(es):";
      for (auto& f : gr.fiber_reps[b]) std::cout << " " << positions_to_string(f.positions());
      std::cout << "\n";
    }
    std::cout << "factorization isomorphism: " << (iso.ok ? "confirmed" : "FAILED") << "\n";
    for (auto& f : iso.failures) std::cout << "  " << f << "\n";
  }
  return iso.ok ? 0 : 1;
}

int run_verify(const std::string& lam_src, const std::string& dist_src, unsigned seed,
               long fuel) {
  LamPtr t = parse_lam(lam_src);
  std::vector<VerifyResult> results = verify_lambda_instance(t, seed);

  DistPtr tp;
  if (!dist_src.empty()) {
    tp = parse_dist(dist_src);
  } else {
    LabelSupply fresh;
    RefinementSearch search = refinement_for(t, fuel, fresh);
    if (search.term) {
      tp = *search.term;
      std::cout << "synthesized refinement: " << print_dist(tp) << "\n";
    } else {
      std::cout << "note: no refinement found within " << fuel
                << " head steps; running lambda-side checks only\n";
    }
  }
  if (tp) {
    auto more = verify_dist_instance(tp);
    results.insert(results.end(), more.begin(), more.end());
    auto pair_checks = verify_pair_instance(t, tp, seed);
    results.insert(results.end(), pair_checks.begin(), pair_checks.end());
  }

  bool all_ok = true;
  for (auto& r : results) {
    std::cout << (r.ok ? "PASS" : "FAIL") << "  " << r.name;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributive lambda calculus toolkit"};
  app.require_subcommand(1);

  std::string term, lam_src, dist_src, steps;
  bool dist_side = false, dot = false, as_json = false;
  long fuel = 100;
  unsigned seed = 0;

  auto* check = app.add_subcommand("check", "correctness report for a distributive term");
  check->add_option("term", term, "distributive term")->required();

  auto* type = app.add_subcommand("type", "print the unique typing judgment");
  type->add_option("term", term, "distributive term")->required();

  auto* graph = app.add_subcommand("graph", "enumerate the reduction graph");
  graph->add_option("term", term, "term (lambda unless --dist)")->required();
  graph->add_flag("--dist", dist_side, "treat the term as distributive");
  graph->add_flag("--dot", dot, "emit graphviz");
  graph->add_flag("--json", as_json, "emit the space as json");

  auto* norm = app.add_subcommand("normalize", "reduce a distributive term to normal form");
  norm->add_option("term", term, "distributive term")->required();

  auto* refine = app.add_subcommand("refine", "synthesize a refinement of a lambda term");
  refine->add_option("term", term, "lambda term")->required();
  refine->add_option("--fuel", fuel, "head reduction budget (default 100)");

  auto* simulate = app.add_subcommand("simulate", "simulate a lambda derivation");
  simulate->add_option("lambda-term", lam_src)->required();
  simulate->add_option("dist-term", dist_src)->required();
  simulate->add_option("steps", steps, "comma-separated redex positions, e = root")->required();

  auto* sieve_cmd = app.add_subcommand("sieve", "garbage-free part of a derivation");
  sieve_cmd->add_option("lambda-term", lam_src)->required();
  sieve_cmd->add_option("dist-term", dist_src)->required();
  sieve_cmd->add_option("steps", steps)->required();

  auto* fact = app.add_subcommand("factorize", "split a derivation into garbage-free and garbage");
  fact->add_option("lambda-term", lam_src)->required();
  fact->add_option("dist-term", dist_src)->required();
  fact->add_option("steps", steps)->required();

  auto* groth = app.add_subcommand("groth", "factor the derivation space");
  groth->add_option("lambda-term", lam_src)->required();
  groth->add_option("dist-term", dist_src)->required();
  groth->add_flag("--json", as_json, "emit the pair lattice as json");

  auto* verify = app.add_subcommand("verify", "run the invariant suite on an instance");
  verify->add_option("lambda-term", lam_src)->required();
  verify->add_option("dist-term", dist_src, "optional refinement (synthesized when absent)");
  verify->add_option("--seed", seed, "seed for sampled checks");
  verify->add_option("--fuel", fuel, "head reduction budget for synthesis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) return run_check(term);
    if (*type) return run_type(term);
    if (*graph) return run_graph(term, dist_side, dot, as_json);
    if (*norm) return run_normalize(term);
    if (*refine) return run_refine(term, fuel);
    if (*simulate) return run_simulate(lam_src, dist_src, steps);
    if (*sieve_cmd) return run_sieve(lam_src, dist_src, steps);
    if (*fact) return run_factorize(lam_src, dist_src, steps);
    if (*groth) return run_groth(lam_src, dist_src, as_json);
    if (*verify) return run_verify(lam_src, dist_src, seed, fuel);
  } catch (const parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
