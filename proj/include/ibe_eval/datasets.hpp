#pragma once

// COPA XML and E-CARE JSONL loaders plus the canonical JSONL example format.

#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "ibe_eval/core.hpp"

namespace ibe {

// <copa-corpus><item id asks-for most-plausible-alternative><p/><a1/><a2/></item>...
inline std::vector<CqaExample> parse_copa(const std::string& xml, const std::string& origin = "COPA") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(origin + ": malformed XML: " + e.message() + " at line " + std::to_string(e.line()));
  }
  auto root = tree.get_child_optional("copa-corpus");
  if (!root) throw DataError(origin + ": missing <copa-corpus> root element");

  std::vector<CqaExample> out;
  for (const auto& [tag, item] : *root) {
    if (tag != "item") continue;
    std::string id = item.get<std::string>("<xmlattr>.id", std::to_string(out.size() + 1));
    std::string where = origin + " item " + id;
    auto asks = item.get_optional<std::string>("<xmlattr>.asks-for");
    if (!asks) throw DataError(where + ": missing asks-for");
    Direction dir;
    if (*asks == "cause") {
      dir = Direction::cause;
    } else if (*asks == "effect") {
      dir = Direction::effect;
    } else {
      throw DataError(where + ": unknown asks-for value \"" + *asks + "\"");
    }
    auto mpa = item.get_optional<std::string>("<xmlattr>.most-plausible-alternative");
    if (!mpa || (*mpa != "1" && *mpa != "2")) {
      throw DataError(where + ": most-plausible-alternative must be 1 or 2");
    }
    CqaExample ex;
    ex.id = "copa-" + id;
    ex.direction = dir;
    ex.gold_index = *mpa == "1" ? 0 : 1;
    ex.source = Source::copa;
    for (const char* child : {"p", "a1", "a2"}) {
      auto v = item.get_optional<std::string>(child);
      if (!v) throw DataError(where + ": missing <" + child + ">");
      if (std::string(child) == "p") {
        ex.context = *v;
      } else {
        ex.candidates.push_back(*v);
      }
    }
    try {
      validate_example(ex);
    } catch (const ValidationError& e) {
      throw DataError(where + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw DataError(origin + ": no <item> elements");
  return out;
}

inline std::vector<CqaExample> load_copa(const std::string& path) { return parse_copa(text::read_file(path), path); }

// Seeded choice of n distinct indices out of `total`, in ascending order.
inline std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
  if (n > total) throw UsageError("cannot sample " + std::to_string(n) + " of " + std::to_string(total) + " examples");
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  std::mt19937_64 gen(seed);
  // Fisher-Yates prefix shuffle; bounded draws by rejection keep it portable.
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t range = total - i;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t r;
    do {
      r = gen();
    } while (r >= limit);
    std::swap(idx[i], idx[i + r % range]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// One JSON object per line: premise, ask-for, hypothesis1, hypothesis2, label (0|1).
inline std::vector<CqaExample> parse_ecare(const std::string& content, const std::string& origin = "E-CARE") {
  std::vector<CqaExample> out;
  std::istringstream in(content);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (text::trim_view(line).empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    for (const char* key : {"premise", "ask-for", "hypothesis1", "hypothesis2", "label"}) {
      if (!j.contains(key)) throw DataError(where + ": missing key \"" + std::string(key) + "\"");
    }
    CqaExample ex;
    try {
      ex.context = j.at("premise").get<std::string>();
      ex.direction = parse_direction(j.at("ask-for").get<std::string>());
      ex.candidates = {j.at("hypothesis1").get<std::string>(), j.at("hypothesis2").get<std::string>()};
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw DataError(where + ": " + e.what());
    }
    const auto& label = j.at("label");
    if (!label.is_number_integer() || label.get<long long>() < 0 || label.get<long long>() > 1) {
      throw DataError(where + ": bad label " + label.dump() + " (expected 0 or 1)");
    }
    ex.gold_index = label.get<std::size_t>();
    ex.id = j.contains("index") ? "ecare-" + (j["index"].is_string() ? j["index"].get<std::string>() : j["index"].dump())
                                : "ecare-" + std::to_string(lineno);
    ex.source = Source::ecare;
    try {
      validate_example(ex);
    } catch (const ValidationError& e) {
      throw DataError(where + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw DataError(origin + ": no examples");
  return out;
}

inline std::vector<CqaExample> load_ecare(const std::string& path, std::optional<std::size_t> sample = std::nullopt,
                                          std::uint64_t seed = 0) {
  auto all = parse_ecare(text::read_file(path), path);
  if (!sample) return all;
  std::vector<CqaExample> out;
  for (auto i : sample_indices(all.size(), *sample, seed)) out.push_back(all[i]);
  return out;
}

inline std::string dump_examples(const std::vector<CqaExample>& examples) {
  std::string out;
  for (const auto& e : examples) out += json(e).dump() + "\n";
  return out;
}

inline std::vector<CqaExample> parse_examples(const std::string& content, const std::string& origin = "examples") {
  std::vector<CqaExample> out;
  std::set<std::string> ids;
  std::istringstream in(content);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (text::trim_view(line).empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    CqaExample ex;
    try {
      ex = json::parse(line).get<CqaExample>();
      validate_example(ex);
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!ids.insert(ex.id).second) throw DataError(where + ": duplicate example id " + ex.id);
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<CqaExample> load_examples(const std::string& path) { return parse_examples(text::read_file(path), path); }

// Dispatch on a format name: copa | ecare | jsonl.
inline std::vector<CqaExample> load_dataset(const std::string& format, const std::string& path,
                                            std::optional<std::size_t> sample = std::nullopt, std::uint64_t seed = 0) {
  std::vector<CqaExample> all;
  if (format == "copa") {
    all = load_copa(path);
  } else if (format == "ecare") {
    return load_ecare(path, sample, seed);
  } else if (format == "jsonl") {
    all = load_examples(path);
  } else {
    throw UsageError("unknown dataset format \"" + format + "\" (expected copa|ecare|jsonl)");
  }
  if (!sample) return all;
  std::vector<CqaExample> out;
  for (auto i : sample_indices(all.size(), *sample, seed)) out.push_back(all[i]);
  return out;
}

}  // namespace ibe
