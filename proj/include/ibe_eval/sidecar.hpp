#pragma once

// Client for the model-scorer sidecar: newline-delimited JSON over a child
// process's stdio, or over HTTP POST /score. Ops the sidecar reports as
// disabled fall back to the built-in scorers; each substitution is logged.

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>

#include "ibe_eval/core.hpp"
#include "ibe_eval/scorers.hpp"

extern char** environ;

namespace ibe {

inline constexpr int kSidecarProtocolVersion = 1;

class SidecarTransport {
 public:
  virtual ~SidecarTransport() = default;
  // Sends one request object and returns its response object.
  virtual json exchange(const json& request) = 0;
};

// Spawns the sidecar and talks to it over a socketpair bound to its stdin and
// stdout. Requests are serialized, so responses come back in order.
class StdioTransport final : public SidecarTransport {
 public:
  explicit StdioTransport(std::vector<std::string> argv, int timeout_ms = 60000) : timeout_ms_(timeout_ms) {
    if (argv.empty()) throw UsageError("sidecar command is empty");
    int sv[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw TransportError(std::string("socketpair: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&fa, sv[1], STDOUT_FILENO);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    int rc = posix_spawnp(&pid_, args[0], &fa, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    close(sv[1]);
    if (rc != 0) {
      close(sv[0]);
      throw TransportError("cannot start sidecar \"" + argv[0] + "\": " + std::strerror(rc));
    }
    fd_ = sv[0];
  }

  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  ~StdioTransport() override {
    if (fd_ >= 0) {
      shutdown(fd_, SHUT_WR);
      close(fd_);
    }
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (waitpid(pid_, &status, WNOHANG) != 0) return;
        usleep(20000);
      }
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }

  json exchange(const json& request) override {
    std::lock_guard lock(mutex_);
    std::string line = request.dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      ssize_t n = send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("sidecar write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    std::string reply = read_line();
    try {
      return json::parse(reply);
    } catch (const json::exception& e) {
      throw TransportError(std::string("sidecar sent malformed JSON: ") + e.what());
    }
  }

 private:
  std::string read_line() {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      pollfd p{fd_, POLLIN, 0};
      int r = poll(&p, 1, timeout_ms_);
      if (r == 0) throw TransportError("sidecar did not answer within " + std::to_string(timeout_ms_) + " ms");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll: ") + std::strerror(errno));
      }
      char buf[4096];
      ssize_t n = recv(fd_, buf, sizeof buf, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("sidecar read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("sidecar closed the connection");
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

  pid_t pid_ = -1;
  int fd_ = -1;
  int timeout_ms_;
  std::string buffer_;
  std::mutex mutex_;
};

// POST /score with a one-element JSON array body.
class HttpTransport final : public SidecarTransport {
 public:
  explicit HttpTransport(std::string base_url, int timeout_seconds = 60)
      : base_url_(std::move(base_url)), timeout_(timeout_seconds) {}

  json exchange(const json& request) override {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_, 0);
    cli.set_read_timeout(timeout_, 0);
    auto res = cli.Post("/score", json::array({request}).dump(), "application/json");
    if (!res) throw TransportError("sidecar transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("sidecar returned HTTP " + std::to_string(res->status));
    try {
      auto body = json::parse(res->body);
      if (!body.is_array() || body.size() != 1) throw TransportError("sidecar /score must return a one-element array");
      return body.at(0);
    } catch (const json::exception& e) {
      throw TransportError(std::string("sidecar sent malformed JSON: ") + e.what());
    }
  }

  json health() {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_, 0);
    auto res = cli.Get("/health");
    if (!res || res->status != 200) throw TransportError("sidecar /health unavailable");
    return json::parse(res->body);
  }

 private:
  std::string base_url_;
  int timeout_;
};

class SidecarClient {
 public:
  explicit SidecarClient(std::shared_ptr<SidecarTransport> transport) : transport_(std::move(transport)) {}

  // Adds an id, checks the echo and maps error responses onto exceptions.
  json call(json request) const {
    std::string id = std::to_string(next_id_.fetch_add(1) + 1);
    request["id"] = id;
    json res = transport_->exchange(request);
    if (!res.is_object()) throw ScorerError("sidecar response is not an object");
    if (res.value("id", std::string{}) != id) {
      throw ScorerError("sidecar response id " + res.value("id", std::string("<none>")) + " does not match " + id);
    }
    if (res.contains("error")) {
      std::string msg = res["error"].is_string() ? res["error"].get<std::string>() : res["error"].dump();
      std::string op = request.value("op", std::string{});
      if (res.value("code", std::string{}) == "capability") throw CapabilityError("sidecar op " + op + " disabled: " + msg);
      throw ScorerError("sidecar op " + op + " failed: " + msg);
    }
    return res;
  }

  json health() const { return call({{"op", "health"}}); }

 private:
  std::shared_ptr<SidecarTransport> transport_;
  mutable std::atomic<std::uint64_t> next_id_{0};
};

inline double json_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ScorerError(std::string("sidecar response lacks numeric \"") + key + "\"");
  return j.at(key).get<double>();
}

class RemoteEntailmentScorer final : public EntailmentScorer {
 public:
  explicit RemoteEntailmentScorer(std::shared_ptr<const SidecarClient> c) : client_(std::move(c)) {}
  EntailmentProbs score(const std::string& premise, const std::string& hypothesis) const override {
    auto r = client_->call({{"op", "entail"}, {"premise", premise}, {"hypothesis", hypothesis}});
    EntailmentProbs p{json_number(r, "entail"), json_number(r, "neutral"), json_number(r, "contradiction")};
    validate_entailment(p);
    return p;
  }
  std::string name() const override { return "sidecar-entail"; }

 private:
  std::shared_ptr<const SidecarClient> client_;
};

class RemoteCertaintyScorer final : public CertaintyScorer {
 public:
  explicit RemoteCertaintyScorer(std::shared_ptr<const SidecarClient> c) : client_(std::move(c)) {}
  double certainty(const std::string& sentence) const override {
    double c = json_number(client_->call({{"op", "certainty"}, {"sentence", sentence}}), "certainty");
    validate_certainty(c);
    return c;
  }
  std::string name() const override { return "sidecar-certainty"; }

 private:
  std::shared_ptr<const SidecarClient> client_;
};

class RemoteHedgeTagger final : public HedgeTagger {
 public:
  explicit RemoteHedgeTagger(std::shared_ptr<const SidecarClient> c) : client_(std::move(c)) {}
  std::vector<HedgeToken> tag(const std::string& sentence) const override {
    auto r = client_->call({{"op", "hedge"}, {"sentence", sentence}});
    if (!r.contains("tokens") || !r["tokens"].is_array()) throw ScorerError("sidecar hedge response lacks \"tokens\"");
    std::vector<HedgeToken> out;
    for (const auto& t : r["tokens"]) {
      if (!t.is_array() || t.size() != 2) throw ScorerError("sidecar hedge token must be [token, label]");
      out.push_back({t[0].get<std::string>(), parse_hedge_label(t[1].get<std::string>())});
    }
    return out;
  }
  std::string name() const override { return "sidecar-hedge"; }

 private:
  std::shared_ptr<const SidecarClient> client_;
};

// Thread-safe record of scorer substitutions for the run manifest.
class SubstitutionLog {
 public:
  void record(const std::string& note) {
    std::lock_guard lock(mutex_);
    for (const auto& n : notes_)
      if (n == note) return;
    notes_.push_back(note);
  }
  std::vector<std::string> notes() const {
    std::lock_guard lock(mutex_);
    return notes_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> notes_;
};

namespace detail {

// Calls the remote scorer until it reports a capability error, then switches
// to the fallback for good.
class FallbackSwitch {
 public:
  FallbackSwitch(std::string what, std::shared_ptr<SubstitutionLog> log) : what_(std::move(what)), log_(std::move(log)) {}

  template <class Remote, class Local>
  auto run(Remote&& remote, Local&& local) const {
    if (!disabled_.load()) {
      try {
        return remote();
      } catch (const CapabilityError& e) {
        disabled_.store(true);
        if (log_) log_->record(what_ + ": sidecar capability unavailable, using fallback (" + e.what() + ")");
      }
    }
    return local();
  }

 private:
  std::string what_;
  std::shared_ptr<SubstitutionLog> log_;
  mutable std::atomic<bool> disabled_{false};
};

}  // namespace detail

class GuardedEntailmentScorer final : public EntailmentScorer {
 public:
  GuardedEntailmentScorer(std::shared_ptr<const EntailmentScorer> remote, std::shared_ptr<const EntailmentScorer> local,
                          std::shared_ptr<SubstitutionLog> log)
      : remote_(std::move(remote)), local_(std::move(local)), switch_("entail", std::move(log)) {}
  EntailmentProbs score(const std::string& p, const std::string& h) const override {
    return switch_.run([&] { return remote_->score(p, h); }, [&] { return local_->score(p, h); });
  }
  std::string name() const override { return remote_->name() + "|" + local_->name(); }

 private:
  std::shared_ptr<const EntailmentScorer> remote_, local_;
  detail::FallbackSwitch switch_;
};

class GuardedCertaintyScorer final : public CertaintyScorer {
 public:
  GuardedCertaintyScorer(std::shared_ptr<const CertaintyScorer> remote, std::shared_ptr<const CertaintyScorer> local,
                         std::shared_ptr<SubstitutionLog> log)
      : remote_(std::move(remote)), local_(std::move(local)), switch_("certainty", std::move(log)) {}
  double certainty(const std::string& s) const override {
    return switch_.run([&] { return remote_->certainty(s); }, [&] { return local_->certainty(s); });
  }
  std::string name() const override { return remote_->name() + "|" + local_->name(); }

 private:
  std::shared_ptr<const CertaintyScorer> remote_, local_;
  detail::FallbackSwitch switch_;
};

class GuardedHedgeTagger final : public HedgeTagger {
 public:
  GuardedHedgeTagger(std::shared_ptr<const HedgeTagger> remote, std::shared_ptr<const HedgeTagger> local,
                     std::shared_ptr<SubstitutionLog> log)
      : remote_(std::move(remote)), local_(std::move(local)), switch_("hedge", std::move(log)) {}
  std::vector<HedgeToken> tag(const std::string& s) const override {
    return switch_.run([&] { return remote_->tag(s); }, [&] { return local_->tag(s); });
  }
  std::string name() const override { return remote_->name() + "|" + local_->name(); }

 private:
  std::shared_ptr<const HedgeTagger> remote_, local_;
  detail::FallbackSwitch switch_;
};

// Sidecar-backed suite; POS tagging always stays local.
inline ScorerSuite make_sidecar_suite(std::shared_ptr<SidecarTransport> transport, const ScorerSuite& fallback,
                                      std::shared_ptr<SubstitutionLog> log) {
  auto client = std::make_shared<const SidecarClient>(std::move(transport));
  ScorerSuite s;
  s.entailment = std::make_shared<GuardedEntailmentScorer>(std::make_shared<RemoteEntailmentScorer>(client),
                                                           fallback.entailment, log);
  s.certainty = std::make_shared<GuardedCertaintyScorer>(std::make_shared<RemoteCertaintyScorer>(client),
                                                         fallback.certainty, log);
  s.hedge = std::make_shared<GuardedHedgeTagger>(std::make_shared<RemoteHedgeTagger>(client), fallback.hedge, log);
  s.pos = fallback.pos;
  return s;
}

}  // namespace ibe
