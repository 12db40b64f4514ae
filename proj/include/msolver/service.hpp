#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "msolver/bench.hpp"
#include "msolver/engine.hpp"
#include "msolver/policies.hpp"

namespace httplib {
class Server;
}

namespace msolver::service {

using Json = nlohmann::json;

struct Response {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  policy::VersionId defaultVersion = policy::VersionId::V6_5;
  bench::ModelSet models;
  std::chrono::minutes idleTimeout{30};
};

/// In-memory game sessions. Every public call is safe to use from several
/// threads; calls on one session are serialized.
class SessionStore {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionStore(ServiceOptions options = {});

  /// The default version actually in use (falls back to 4.5 when the
  /// requested default lacks models).
  policy::VersionId default_version() const { return defaultVersion_; }
  bool version_ready(policy::VersionId v) const;

  Response create_game(const Json& body);
  Response get_game(const std::string& id);
  Response uncover(const std::string& id, const Json& body);
  Response flag(const std::string& id, const Json& body);
  Response hint(const std::string& id, const std::optional<std::string>& version);
  Response solver_move(const std::string& id);
  Response versions() const;

  /// Registers an existing game (fixtures, embedding). Returns its id.
  std::string add_session(engine::Game game, std::optional<policy::VersionId> version = std::nullopt);

  /// Drops sessions idle for longer than the configured timeout.
  std::size_t evict_idle(Clock::time_point now = Clock::now());
  std::size_t size() const;

 private:
  struct Session {
    std::mutex mutex;
    engine::Game game;
    policy::VersionId version;
    policy::PolicyContext ctx;
    std::uint64_t revision = 0;
    Clock::time_point lastAccess;
  };

  std::shared_ptr<Session> find(const std::string& id);
  std::string new_id();

  ServiceOptions options_;
  policy::VersionId defaultVersion_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t idCounter_ = 0;
  std::uint64_t idSalt_ = 0;
};

/// JSON encodings shared with the tests.
Json coord_json(engine::Coord c);
/// Cells as rows of integers: 0-8 uncovered counts, -1 covered, -2 flagged.
Json view_json(const engine::BoardView& view);

/// Registers every route on `server`.
void register_routes(httplib::Server& server, SessionStore& store);

/// Blocks serving on host:port until the server is stopped.
void serve(SessionStore& store, const std::string& host, int port);

}  // namespace msolver::service
