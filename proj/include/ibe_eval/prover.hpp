#pragma once

// Backward-chaining prover with weak unification.
//
// Goals are resolved left to right against fact and rule heads. Each
// resolution contributes a unification score in [0,1]; a proof's score is the
// product of the scores along it. Matches are explored in descending score
// order and the highest-scoring proof wins (ties go to fewer rules, then to
// the first generated). It is accepted only if the chain is nonempty and the
// score exceeds the threshold.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "ibe_eval/core.hpp"
#include "ibe_eval/embedding.hpp"

namespace ibe {

inline constexpr double kDefaultProofThreshold = 0.13;

struct ProverOptions {
  double threshold = kDefaultProofThreshold;
  std::size_t max_depth = 10;
  std::size_t max_expansions = 200000;
};

// Score for matching two atoms: 0 on arity mismatch, 1 on identical ground
// atoms, otherwise the minimum of the predicate similarity and the pairwise
// similarities of constant arguments. Variables match anything at 1.
template <SymbolSimilarity S>
double weak_unify(const Atom& a, const Atom& b, const S& sim) {
  if (a.arity() != b.arity()) return 0.0;
  if (a == b && a.is_ground()) return 1.0;
  double score = a.predicate == b.predicate ? 1.0 : static_cast<double>(sim.similarity(a.predicate, b.predicate));
  for (std::size_t i = 0; i < a.arity() && score > 0.0; ++i) {
    const auto& x = a.args[i];
    const auto& y = b.args[i];
    if (x.is_variable() || y.is_variable()) continue;
    double s = x.name == y.name ? 1.0 : static_cast<double>(sim.similarity(x.name, y.name));
    score = std::min(score, s);
  }
  return std::clamp(score, 0.0, 1.0);
}

inline int consistency(const ProofResult& r) { return r.satisfied() ? 1 : 0; }

namespace detail {

using Subst = std::map<std::string, Term>;

inline Term walk(const Term& t, const Subst& s) {
  Term cur = t;
  while (cur.is_variable()) {
    auto it = s.find(cur.name);
    if (it == s.end()) break;
    cur = it->second;
  }
  return cur;
}

inline Atom apply(const Atom& a, const Subst& s) {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(walk(t, s));
  return out;
}

inline Atom rename(const Atom& a, const std::string& suffix) {
  Atom out = a;
  for (auto& t : out.args)
    if (t.is_variable()) t.name += suffix;
  return out;
}

struct AncestorNode {
  Atom atom;
  std::shared_ptr<const AncestorNode> parent;
};
using Ancestors = std::shared_ptr<const AncestorNode>;

struct Goal {
  Atom atom;
  std::size_t depth;
  Ancestors ancestors;
};

// Best-first over partial proofs, keyed by (score desc, rules asc, creation
// order). A partial proof's score bounds every completion of it, so the
// first complete proof popped is the best one.
template <SymbolSimilarity S>
class Search {
 public:
  Search(const LogicProgram& p, const S& sim, const ProverOptions& opts) : prog_(p), sim_(sim), opts_(opts) {}

  void run() {
    push(State{{{prog_.query, 0, nullptr}}, Subst{}, 1.0, 0, {}, 0});
    while (!queue_.empty()) {
      if (expansions_ >= opts_.max_expansions) {
        cutoff_ = true;
        return;
      }
      State st = pop();
      ++expansions_;
      if (st.goals.empty()) {
        found_ = true;
        best_score_ = st.score;
        best_rules_ = st.rules;
        best_chain_ = std::move(st.chain);
        return;
      }
      expand(st);
    }
  }

  bool found() const { return found_; }
  double best_score() const { return best_score_; }
  std::size_t best_rules() const { return best_rules_; }
  const std::vector<ClauseRef>& best_chain() const { return best_chain_; }
  bool cutoff() const { return cutoff_; }
  std::size_t expansions() const { return expansions_; }

 private:
  struct State {
    std::vector<Goal> goals;
    Subst subst;
    double score;
    std::size_t rules;
    std::vector<ClauseRef> chain;
    std::size_t seq;
  };

  struct Match {
    double score;
    ClauseRef ref;
    const std::string* predicate;
    Subst subst;
    std::vector<Atom> body;
  };

  // true when a should be popped after b
  static bool later(const State& a, const State& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.rules != b.rules) return a.rules > b.rules;
    return a.seq > b.seq;
  }

  void push(State st) {
    st.seq = seq_++;
    queue_.push_back(std::move(st));
    std::push_heap(queue_.begin(), queue_.end(), later);
  }

  State pop() {
    std::pop_heap(queue_.begin(), queue_.end(), later);
    State st = std::move(queue_.back());
    queue_.pop_back();
    return st;
  }

  // Unify goal `g` (already substituted) with `head` under `s`; on success
  // extends `s` and returns the score, else returns 0.
  double unify(const Atom& g, const Atom& head, Subst& s) const {
    if (g.arity() != head.arity()) return 0.0;
    double score = g.predicate == head.predicate ? 1.0 : static_cast<double>(sim_.similarity(g.predicate, head.predicate));
    if (score <= 0.0) return 0.0;
    for (std::size_t i = 0; i < g.arity(); ++i) {
      Term x = walk(g.args[i], s);
      Term y = walk(head.args[i], s);
      if (x.is_variable() && y.is_variable()) {
        if (x.name != y.name) s[x.name] = y;
      } else if (x.is_variable()) {
        s[x.name] = y;
      } else if (y.is_variable()) {
        s[y.name] = x;
      } else if (x.name != y.name) {
        score = std::min(score, static_cast<double>(sim_.similarity(x.name, y.name)));
        if (score <= 0.0) return 0.0;
      }
    }
    return std::min(score, 1.0);
  }

  static bool on_stack(const Atom& a, const Ancestors& anc, const Subst& s) {
    for (const AncestorNode* n = anc.get(); n; n = n->parent.get()) {
      if (apply(n->atom, s) == a) return true;
    }
    return false;
  }

  void expand(const State& st) {
    const Goal& goal = st.goals.front();
    if (goal.depth > opts_.max_depth) {
      cutoff_ = true;
      return;
    }
    Atom g = apply(goal.atom, st.subst);
    if (on_stack(g, goal.ancestors, st.subst)) return;

    std::vector<Match> matches;
    for (std::size_t i = 0; i < prog_.facts.size(); ++i) {
      Subst s = st.subst;
      double u = unify(g, prog_.facts[i], s);
      if (u > 0.0 && st.score * u > opts_.threshold) {
        matches.push_back({u, {ClauseRef::Kind::fact, i}, &prog_.facts[i].predicate, std::move(s), {}});
      }
    }
    for (std::size_t i = 0; i < prog_.rules.size(); ++i) {
      std::string suffix = "#" + std::to_string(++rename_counter_);
      Atom head = rename(prog_.rules[i].head, suffix);
      Subst s = st.subst;
      double u = unify(g, head, s);
      if (u > 0.0 && st.score * u > opts_.threshold) {
        std::vector<Atom> body;
        for (const auto& b : prog_.rules[i].body) body.push_back(rename(b, suffix));
        matches.push_back({u, {ClauseRef::Kind::rule, i}, &prog_.rules[i].head.predicate, std::move(s), std::move(body)});
      }
    }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
      if (a.score != b.score) return a.score > b.score;
      if (*a.predicate != *b.predicate) return *a.predicate < *b.predicate;
      if (a.ref.kind != b.ref.kind) return a.ref.kind == ClauseRef::Kind::fact;
      return a.ref.index < b.ref.index;
    });

    auto anc = std::make_shared<const AncestorNode>(AncestorNode{g, goal.ancestors});
    for (auto& m : matches) {
      State next;
      next.goals.reserve(m.body.size() + st.goals.size() - 1);
      for (auto& b : m.body) next.goals.push_back({std::move(b), goal.depth + 1, anc});
      next.goals.insert(next.goals.end(), st.goals.begin() + 1, st.goals.end());
      next.subst = std::move(m.subst);
      next.score = st.score * m.score;
      next.rules = st.rules + (m.ref.kind == ClauseRef::Kind::rule ? 1 : 0);
      next.chain = st.chain;
      next.chain.push_back(m.ref);
      push(std::move(next));
    }
  }

  const LogicProgram& prog_;
  const S& sim_;
  ProverOptions opts_;
  std::vector<State> queue_;
  std::size_t seq_ = 0;
  bool found_ = false;
  double best_score_ = 0.0;
  std::size_t best_rules_ = 0;
  std::vector<ClauseRef> best_chain_;
  bool cutoff_ = false;
  std::size_t expansions_ = 0;
  std::size_t rename_counter_ = 0;
};

}  // namespace detail

template <SymbolSimilarity S>
ProofResult prove(const LogicProgram& program, const S& sim, const ProverOptions& opts = {}) {
  detail::Search<S> search(program, sim, opts);
  search.run();

  ProofDiagnostics diag;
  diag.cutoff = search.cutoff();
  diag.expansions = search.expansions();
  if (!search.found()) return ProofResult::unsatisfied(diag);

  diag.best_score = search.best_score();
  diag.rules_used = search.best_rules();
  std::vector<ClauseRef> chain;
  for (const auto& ref : search.best_chain())
    if (ref.kind == ClauseRef::Kind::rule) chain.push_back(ref);
  if (chain.empty()) {
    // Query met directly by a fact: keep that fact so depth floors at 1.
    chain.push_back(search.best_chain().front());
  }
  return ProofResult::accepted(search.best_score(), std::move(chain), opts.threshold, diag);
}

}  // namespace ibe
