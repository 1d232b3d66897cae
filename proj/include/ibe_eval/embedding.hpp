#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ibe_eval/error.hpp"
#include "ibe_eval/text.hpp"

namespace ibe {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Cosine similarity; 0 when either vector is zero.
inline double cosine(const Vector& a, const Vector& b) {
  double na = std::sqrt(dot(a, a));
  double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// Static word-vector table. Unknown tokens map to a unit vector drawn from a
// generator seeded by the token's FNV-1a hash, so lookup is total and stable.
//
// File format: first line `d=<dim>`, then `token v1 ... vd` per line.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DataError("embedding dimension must be positive");
  }

  static EmbeddingTable parse(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("embedding table is empty");
    line = text::trim(line);
    if (line.rfind("d=", 0) != 0) throw DataError("embedding table header must be d=<dim>");
    std::size_t dim = 0;
    try {
      dim = std::stoul(line.substr(2));
    } catch (const std::exception&) {
      throw DataError("bad embedding dimension: " + line);
    }
    EmbeddingTable table(dim);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim_view(line).empty()) continue;
      std::istringstream ls(line);
      std::string token;
      ls >> token;
      Vector v;
      v.reserve(dim);
      double x;
      while (ls >> x) v.push_back(x);
      if (v.size() != dim) {
        throw DataError("embedding line " + std::to_string(lineno) + " has " + std::to_string(v.size()) +
                        " values, expected " + std::to_string(dim));
      }
      table.add(token, std::move(v));
    }
    return table;
  }

  static EmbeddingTable load(const std::string& path) {
    std::istringstream in(text::read_file(path));
    return parse(in);
  }

  void add(const std::string& token, Vector v) {
    if (v.size() != dim_) throw DataError("embedding for " + token + " has wrong dimension");
    table_[token] = std::move(v);
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  bool contains(const std::string& token) const { return table_.contains(token); }

  Vector lookup(const std::string& token) const {
    if (auto it = table_.find(token); it != table_.end()) return it->second;
    return oov_vector(token);
  }

  Vector oov_vector(std::string_view token) const {
    std::mt19937_64 gen(text::fnv1a64(token));
    Vector v(dim_);
    double norm = 0.0;
    for (auto& x : v) {
      // top 53 bits -> [0,1) -> [-1,1); avoids implementation-defined distributions
      double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      x = 2.0 * u - 1.0;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      v[0] = 1.0;
      return v;
    }
    for (auto& x : v) x /= norm;
    return v;
  }

  Vector mean_vector(const std::vector<std::string>& tokens) const {
    Vector m(dim_, 0.0);
    if (tokens.empty()) return m;
    for (const auto& t : tokens) {
      auto v = lookup(t);
      for (std::size_t i = 0; i < dim_; ++i) m[i] += v[i];
    }
    for (auto& x : m) x /= static_cast<double>(tokens.size());
    return m;
  }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, Vector> table_;
};

// Symbol similarity in [0,1] used by weak unification.
template <class S>
concept SymbolSimilarity = requires(const S& s, std::string_view a, std::string_view b) {
  { s.similarity(a, b) } -> std::convertible_to<double>;
};

inline std::vector<std::string> symbol_tokens(std::string_view symbol) {
  std::vector<std::string> out;
  for (auto& part : text::split(symbol, '_')) {
    if (!part.empty()) out.push_back(text::to_lower(part));
  }
  return out;
}

// Only string-identical symbols unify.
struct ExactSimilarity {
  double similarity(std::string_view a, std::string_view b) const { return a == b ? 1.0 : 0.0; }
};

// Cosine between mean token vectors of underscore-split symbols, clamped at 0.
class EmbeddingSimilarity {
 public:
  explicit EmbeddingSimilarity(const EmbeddingTable& table) : table_(&table) {}

  double similarity(std::string_view a, std::string_view b) const {
    if (a == b) return 1.0;
    auto ta = symbol_tokens(a);
    auto tb = symbol_tokens(b);
    if (ta.empty() || tb.empty()) return 0.0;
    double c = cosine(table_->mean_vector(ta), table_->mean_vector(tb));
    if (c < 0.0) return 0.0;
    return c > 1.0 ? 1.0 : c;
  }

 private:
  const EmbeddingTable* table_;
};

static_assert(SymbolSimilarity<ExactSimilarity>);
static_assert(SymbolSimilarity<EmbeddingSimilarity>);

}  // namespace ibe
