#pragma once

// Test-only: random acyclic ground programs and a forward-chaining oracle
// that computes, for every derivable atom, the minimal number of rule
// applications in a proof tree.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "ibe_eval/core.hpp"

namespace ibe::testing {

inline std::vector<Atom> atom_pool() {
  std::vector<Atom> pool;
  for (const char* p : {"p", "q", "r", "s", "t", "u"}) {
    pool.push_back({p, {}});
    for (const char* c : {"a", "b"}) pool.push_back({p, {Term::constant(c)}});
  }
  return pool;
}

// Atoms get a random rank; a rule's body atoms all rank strictly below its
// head, so the program has no cycles.
inline LogicProgram random_acyclic_program(std::mt19937& rng) {
  auto pool = atom_pool();
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(8);
  LogicProgram p;
  std::size_t n_facts = 1 + rng() % 5;
  std::size_t n_rules = rng() % 9;
  for (std::size_t i = 0; i < n_facts; ++i) p.facts.push_back(pool[rng() % 4]);  // facts from the low ranks
  for (std::size_t i = 0; i < n_rules; ++i) {
    std::size_t h = 1 + rng() % (pool.size() - 1);
    Rule r{pool[h], {}};
    std::size_t body = 1 + rng() % 3;
    for (std::size_t k = 0; k < body; ++k) r.body.push_back(pool[rng() % h]);
    p.rules.push_back(r);
  }
  p.query = pool[rng() % pool.size()];
  return p;
}

// Minimal rule count to derive `goal`, or nullopt if underivable.
inline std::optional<std::size_t> min_rule_count(const LogicProgram& p, const Atom& goal) {
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::map<Atom, std::size_t> cost;
  for (const auto& f : p.facts) cost[f] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : p.rules) {
      std::size_t total = 1;
      bool ok = true;
      for (const auto& b : r.body) {
        auto it = cost.find(b);
        if (it == cost.end()) {
          ok = false;
          break;
        }
        total += it->second;
      }
      if (!ok) continue;
      auto it = cost.find(r.head);
      if (it == cost.end() || total < it->second) {
        cost[r.head] = total;
        changed = true;
      }
    }
  }
  auto it = cost.find(goal);
  if (it == cost.end() || it->second == inf) return std::nullopt;
  return it->second;
}

}  // namespace ibe::testing
