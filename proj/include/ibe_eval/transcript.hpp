#pragma once

// LLM client boundary with a record/replay transcript store.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>

#include "ibe_eval/core.hpp"
#include "ibe_eval/text.hpp"

namespace ibe {

struct LlmRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
};

inline void validate_request(const LlmRequest& r) {
  if (r.temperature < 0.0) throw UsageError("temperature must be >= 0");
  if (r.max_tokens <= 0) throw UsageError("max_tokens must be positive");
  if (r.model.empty()) throw UsageError("model name is empty");
}

// SHA-256 over model, sampling parameters and the canonical prompt text, so
// line-ending and trailing-whitespace differences do not change the key.
inline std::string fingerprint(const LlmRequest& r) {
  std::string key = r.model + "\n" + text::fixed(r.temperature, 6) + "\n" + std::to_string(r.max_tokens) + "\n" +
                    text::canonical_text(r.prompt);
  return text::sha256_hex(key);
}

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Returns the completion text; throws TransportError on failure.
  virtual std::string complete(const LlmRequest& request) = 0;
};

enum class StoreMode { live, record, replay };

inline StoreMode parse_store_mode(std::string_view s) {
  if (s == "live") return StoreMode::live;
  if (s == "record") return StoreMode::record;
  if (s == "replay") return StoreMode::replay;
  throw UsageError("bad transcript mode \"" + std::string(s) + "\" (expected live|record|replay)");
}

struct TranscriptEntry {
  std::string fingerprint;
  std::string model;
  std::string prompt;
  std::string response;
  std::string created_at;
};

inline void to_json(json& j, const TranscriptEntry& e) {
  j = json{{"fingerprint", e.fingerprint},
           {"model", e.model},
           {"prompt", e.prompt},
           {"response", e.response},
           {"created_at", e.created_at}};
}

inline void from_json(const json& j, TranscriptEntry& e) {
  j.at("fingerprint").get_to(e.fingerprint);
  j.at("model").get_to(e.model);
  j.at("prompt").get_to(e.prompt);
  j.at("response").get_to(e.response);
  e.created_at = j.value("created_at", std::string{});
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Fingerprint -> response map. Many readers, one writer at a time.
class TranscriptStore {
 public:
  explicit TranscriptStore(StoreMode mode = StoreMode::replay) : mode_(mode) {}
  TranscriptStore(TranscriptStore&& other) noexcept
      : mode_(other.mode_), entries_(std::move(other.entries_)), clock_(std::move(other.clock_)) {}

  StoreMode mode() const { return mode_; }

  static TranscriptStore load(const std::string& path, StoreMode mode) {
    TranscriptStore store(mode);
    std::istringstream in(text::read_file(path));
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
      ++lineno;
      if (text::trim_view(line).empty()) continue;
      try {
        auto e = json::parse(line).get<TranscriptEntry>();
        store.entries_[e.fingerprint] = std::move(e);
      } catch (const json::exception& ex) {
        throw DataError(path + ":" + std::to_string(lineno) + ": bad transcript line: " + ex.what());
      }
    }
    return store;
  }

  // Entries sorted by fingerprint, one JSON object per line.
  std::string dump() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& [fp, e] : entries_) out += json(e).dump() + "\n";
    return out;
  }

  void save(const std::string& path) const { text::write_file(path, dump()); }

  std::optional<std::string> find(const std::string& fp) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(fp); it != entries_.end()) return it->second.response;
    return std::nullopt;
  }

  void put(const LlmRequest& req, const std::string& response) {
    TranscriptEntry e{fingerprint(req), req.model, req.prompt, response, clock_()};
    std::unique_lock lock(mutex_);
    entries_[e.fingerprint] = std::move(e);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

  // Routes a request through the store according to its mode. Replay never
  // touches the client; `what` names the request in replay-miss errors.
  std::string complete(const LlmRequest& req, LlmClient* client, const std::string& what) {
    validate_request(req);
    if (mode_ == StoreMode::replay) {
      auto fp = fingerprint(req);
      if (auto hit = find(fp)) return *hit;
      throw ReplayMiss(fp, what);
    }
    if (!client) throw UsageError("no LLM client configured for " + std::string(mode_ == StoreMode::live ? "live" : "record") + " mode");
    std::string response = client->complete(req);
    if (mode_ == StoreMode::record) put(req, response);
    return response;
  }

 private:
  StoreMode mode_;
  std::map<std::string, TranscriptEntry> entries_;
  std::function<std::string()> clock_ = utc_timestamp;
  mutable std::shared_mutex mutex_;
};

}  // namespace ibe
