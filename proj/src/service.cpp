#include "msolver/service.hpp"

#include <httplib.h>

#include <iomanip>
#include <random>
#include <sstream>

#include "msolver/csp.hpp"
#include "msolver/rng.hpp"

namespace msolver::service {

using engine::Coord;
using engine::GameStatus;

namespace {

Response error(int status, const std::string& message) { return {status, Json{{"error", message}}}; }

Json mines_json(const engine::Game& game) {
  Json out = Json::array();
  const auto& v = game.view();
  for (int i = 0; i < v.rows * v.cols; ++i) {
    if (game.mine_layout()[static_cast<std::size_t>(i)]) out.push_back(coord_json(v.coord(i)));
  }
  return out;
}

Json game_json(const engine::Game& game, std::uint64_t revision) {
  Json out{{"view", view_json(game.view())},
           {"status", engine::to_string(game.status())},
           {"revision", revision}};
  // The layout leaves the server only once the game is over.
  if (game.finished() && game.mines_placed()) out["mines"] = mines_json(game);
  return out;
}

Json coords_json(const std::vector<Coord>& cells) {
  Json out = Json::array();
  for (const auto& c : cells) out.push_back(coord_json(c));
  return out;
}

Json decision_json(const policy::MoveDecision& d) {
  return Json{{"uncovers", coords_json(d.uncovers)},
              {"flags", coords_json(d.flags)},
              {"unflags", coords_json(d.unflags)},
              {"rationale", policy::to_string(d.rationale)},
              {"truncated", d.truncated}};
}

std::optional<Coord> parse_cell(const Json& body) {
  if (!body.is_object() || !body.contains("i") || !body.contains("j")) return std::nullopt;
  if (!body["i"].is_number_integer() || !body["j"].is_number_integer()) return std::nullopt;
  return Coord{body["i"].get<int>(), body["j"].get<int>()};
}

csp::TraversalLimits hint_limits(const policy::Pipeline& p) {
  return p.enumerator == policy::Enumerator::Backtracking ? csp::TraversalLimits::backtracking_capped()
                                                           : csp::TraversalLimits::dsscsp_capped();
}

}  // namespace

Json coord_json(Coord c) { return Json{{"i", c.row}, {"j", c.col}}; }

Json view_json(const engine::BoardView& view) {
  Json rows = Json::array();
  for (int r = 0; r < view.rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < view.cols; ++c) {
      const auto& cell = view.at({r, c});
      row.push_back(cell.uncovered() ? cell.count : cell.covered() ? -1 : -2);
    }
    rows.push_back(std::move(row));
  }
  return Json{{"p", view.rows},
              {"q", view.cols},
              {"n", view.mines},
              {"flagsUsed", view.flagsUsed},
              {"coveredLeft", view.coveredLeft},
              {"cells", std::move(rows)}};
}

SessionStore::SessionStore(ServiceOptions options)
    : options_(std::move(options)), defaultVersion_(options_.defaultVersion) {
  if (!version_ready(defaultVersion_)) defaultVersion_ = policy::VersionId::V4_5;
  std::random_device rd;
  idSalt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

bool SessionStore::version_ready(policy::VersionId v) const {
  try {
    options_.models.for_version(v);
    return true;
  } catch (const policy::MissingModelError&) {
    return false;
  }
}

std::string SessionStore::new_id() {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << derive_seed(idSalt_, ++idCounter_);
  return ss.str();
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Response SessionStore::create_game(const Json& body) {
  evict_idle();
  if (!body.is_object()) return error(400, "expected a JSON object");
  engine::BoardConfig config;
  try {
    config.rows = body.at("p").get<int>();
    config.cols = body.at("q").get<int>();
    config.mines = body.at("n").get<int>();
    if (body.contains("seed")) {
      config.seed = body["seed"].get<std::uint64_t>();
    } else {
      std::random_device rd;
      config.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
  } catch (const Json::exception&) {
    return error(400, "fields p, q and n must be integers");
  }
  policy::VersionId version = defaultVersion_;
  try {
    if (body.contains("version")) version = policy::parse_version(body["version"].get<std::string>());
    config.validate();
  } catch (const std::exception& e) {
    return error(400, e.what());
  }
  if (!version_ready(version)) return error(400, "version " + policy::to_string(version) + " has no model");

  auto ctx = policy::PolicyContext::make(version, options_.models.for_version(version),
                                         derive_seed(config.seed, 0x5E55));
  auto session = std::shared_ptr<Session>(
      new Session{{}, engine::Game(config), version, std::move(ctx), 0, Clock::now()});
  std::string id;
  {
    std::unique_lock lock(mutex_);
    id = new_id();
    sessions_[id] = session;
  }
  Json out = game_json(session->game, 0);
  out["sessionId"] = id;
  out["seed"] = config.seed;
  out["version"] = policy::to_string(version);
  return {201, out};
}

std::string SessionStore::add_session(engine::Game game, std::optional<policy::VersionId> version) {
  const auto v = version.value_or(defaultVersion_);
  auto ctx = policy::PolicyContext::make(v, options_.models.for_version(v),
                                         derive_seed(game.config().seed, 0x5E55));
  auto session = std::shared_ptr<Session>(new Session{{}, std::move(game), v, std::move(ctx), 0, Clock::now()});
  std::unique_lock lock(mutex_);
  auto id = new_id();
  sessions_[id] = std::move(session);
  return id;
}

Response SessionStore::get_game(const std::string& id) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  std::lock_guard lock(s->mutex);
  s->lastAccess = Clock::now();
  Json out = game_json(s->game, s->revision);
  out["sessionId"] = id;
  out["version"] = policy::to_string(s->version);
  return {200, out};
}

Response SessionStore::uncover(const std::string& id, const Json& body) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  const auto cell = parse_cell(body);
  if (!cell) return error(400, "expected integer fields i and j");
  std::lock_guard lock(s->mutex);
  s->lastAccess = Clock::now();
  if (s->game.finished()) return error(410, "game is over");
  int opened = 0;
  try {
    opened = s->game.uncover(*cell);
  } catch (const engine::IllegalMoveError& e) {
    return error(409, e.what());
  }
  ++s->revision;
  Json out = game_json(s->game, s->revision);
  out["opened"] = opened;
  return {200, out};
}

Response SessionStore::flag(const std::string& id, const Json& body) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  const auto cell = parse_cell(body);
  if (!cell) return error(400, "expected integer fields i and j");
  std::lock_guard lock(s->mutex);
  s->lastAccess = Clock::now();
  if (s->game.finished()) return error(410, "game is over");
  try {
    s->game.toggle_flag(*cell);
  } catch (const engine::IllegalMoveError& e) {
    return error(409, e.what());
  }
  ++s->revision;
  return {200, game_json(s->game, s->revision)};
}

Response SessionStore::hint(const std::string& id, const std::optional<std::string>& versionText) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  policy::VersionId version;
  try {
    version = versionText ? policy::parse_version(*versionText) : s->version;
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  if (!version_ready(version)) return error(400, "version " + policy::to_string(version) + " has no model");

  engine::BoardView view;
  std::uint64_t revision = 0;
  std::uint64_t seed = 0;
  {
    std::lock_guard lock(s->mutex);
    s->lastAccess = Clock::now();
    if (s->game.finished()) return error(409, "game is over");
    view = s->game.view();
    revision = s->revision;
    seed = s->game.config().seed;
  }

  // Everything below sees only the masked view, and the RNG depends on the
  // revision alone, so repeated hints agree.
  const std::uint64_t hintSeed = derive_seed(seed, revision, static_cast<std::uint64_t>(version));
  auto ctx = policy::PolicyContext::make(version, options_.models.for_version(version), hintSeed);
  ctx.limits = hint_limits(ctx.pipeline);
  const auto decision = policy::decide(view, ctx);

  Json safe = Json::array(), mines = Json::array(), probs = Json::array();
  bool truncated = decision.truncated;
  if (view.firstMoveDone) {
    try {
      auto system = csp::extract_constraints(view);
      auto residual = system;
      const auto determined = csp::dss(residual);
      std::vector<bool> fixed(system.cols(), false);
      for (const auto& d : determined) {
        fixed[static_cast<std::size_t>(d.variable)] = true;
        (d.value ? mines : safe).push_back(coord_json(system.variables[static_cast<std::size_t>(d.variable)].cell));
      }
      if (determined.size() < system.cols()) {
        Rng rng(derive_seed(hintSeed, 0x9B0B));
        const auto set = csp::enumerate_dsscsp(system, csp::TraversalLimits::dsscsp_capped(), rng);
        truncated = truncated || set.truncated;
        if (set.count() > 0) {
          const auto P = csp::probabilities(set);
          for (std::size_t j = 0; j < system.cols(); ++j) {
            if (fixed[j]) continue;
            Json entry = coord_json(system.variables[j].cell);
            entry["p"] = P[j];
            probs.push_back(std::move(entry));
          }
        }
      }
    } catch (const csp::ContradictionError&) {
      // Flags contradict the numbers; the recommendation is an unflag.
    }
  }

  Json recommended;
  if (!decision.unflags.empty()) {
    recommended = coord_json(decision.unflags.front());
    recommended["action"] = "unflag";
  } else if (!decision.uncovers.empty()) {
    recommended = coord_json(decision.uncovers.front());
    recommended["action"] = "uncover";
  } else if (!decision.flags.empty()) {
    recommended = coord_json(decision.flags.front());
    recommended["action"] = "flag";
  }
  recommended["rationale"] = policy::to_string(decision.rationale);

  return {200, Json{{"revision", revision},
                    {"version", policy::to_string(version)},
                    {"determinedSafe", std::move(safe)},
                    {"determinedMines", std::move(mines)},
                    {"probabilities", std::move(probs)},
                    {"recommended", std::move(recommended)},
                    {"truncated", truncated}}};
}

Response SessionStore::solver_move(const std::string& id) {
  auto s = find(id);
  if (!s) return error(404, "unknown session");
  std::lock_guard lock(s->mutex);
  s->lastAccess = Clock::now();
  if (s->game.finished()) return error(410, "game is over");
  const auto decision = policy::decide(s->game.view(), s->ctx);
  const int opened = policy::apply(s->game, decision);
  ++s->revision;
  Json out = game_json(s->game, s->revision);
  out["applied"] = decision_json(decision);
  out["opened"] = opened;
  return {200, out};
}

Response SessionStore::versions() const {
  Json list = Json::array();
  for (auto v : policy::all_versions()) {
    list.push_back(Json{{"version", policy::to_string(v)}, {"ready", version_ready(v)}});
  }
  return {200, Json{{"default", policy::to_string(defaultVersion_)}, {"versions", std::move(list)}}};
}

std::size_t SessionStore::evict_idle(Clock::time_point now) {
  std::unique_lock lock(mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    bool idle = false;
    {
      std::lock_guard sl(it->second->mutex);
      idle = now - it->second->lastAccess > options_.idleTimeout;
    }
    if (idle) {
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

void register_routes(httplib::Server& server, SessionStore& store) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<Json> {
    if (req.body.empty()) return Json::object();
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  const auto bad_json = Response{400, Json{{"error", "malformed JSON body"}}};

  server.Post("/games", [=, &store](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse(req);
    send(res, body ? store.create_game(*body) : bad_json);
  });
  server.Get(R"(/games/([0-9a-f]+))", [=, &store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.get_game(req.matches[1]));
  });
  server.Post(R"(/games/([0-9a-f]+)/uncover)", [=, &store](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse(req);
    send(res, body ? store.uncover(req.matches[1], *body) : bad_json);
  });
  server.Post(R"(/games/([0-9a-f]+)/flag)", [=, &store](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse(req);
    send(res, body ? store.flag(req.matches[1], *body) : bad_json);
  });
  server.Get(R"(/games/([0-9a-f]+)/hint)", [=, &store](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> version;
    if (req.has_param("version")) version = req.get_param_value("version");
    send(res, store.hint(req.matches[1], version));
  });
  server.Post(R"(/games/([0-9a-f]+)/solver-move)", [=, &store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.solver_move(req.matches[1]));
  });
  server.Get("/versions", [=, &store](const httplib::Request&, httplib::Response& res) {
    send(res, store.versions());
  });
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

void serve(SessionStore& store, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, store);
  if (!server.listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace msolver::service
