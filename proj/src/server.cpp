#include "blochgame/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <optional>
#include <stdexcept>

#include "blochgame/ddpg.hpp"

namespace blochgame {

using nlohmann::json;

// One connection's game; sessions never share state.
class Session {
 public:
  Session(const ServerConfig& cfg, std::uint64_t default_seed)
      : cfg_(cfg), default_seed_(default_seed) {}

  json reset(std::optional<std::uint64_t> seed) {
    env_.emplace(cfg_.game, seed.value_or(default_seed_));
    MagnitudeImage obs = env_->reset();
    json r{{"ok", true}, {"done", false}};
    r["obs"] = obs_json(obs);
    return r;
  }

  json step(const RawAction& a) {
    if (!env_) return error("no_session");
    if (env_->done()) return error("done");
    const ScaledAction s = scale_action(a);
    StepResult sr = env_->step(s.acq, s.guess);
    json r{{"ok", true}, {"reward", sr.reward}, {"done", sr.done}};
    r["obs"] = obs_json(sr.observation);
    json info{{"clock_s", sr.info.clock},
              {"lines_acquired", sr.info.lines_acquired},
              {"episode_score", sr.info.episode_score},
              {"guess", static_cast<int>(sr.info.guess)}};
    if (sr.done) info["true_shape"] = static_cast<int>(sr.info.true_shape);
    r["info"] = std::move(info);
    return r;
  }

  static json error(const char* what) { return json{{"ok", false}, {"error", what}}; }

 private:
  static json obs_json(const MagnitudeImage& img) {
    // floats round-trip 32-bit precision in decimal (<= 9 significant digits)
    json arr = json::array();
    for (int i = 0; i < kGridSize; ++i)
      for (int j = 0; j < kGridSize; ++j) arr.push_back(static_cast<float>(img(i, j)));
    return arr;
  }

  ServerConfig cfg_;
  std::uint64_t default_seed_;
  std::optional<BlochGame> env_;
};

std::string EnvServer::handle_request(const std::string& line, Session& session) {
  json req = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (req.is_discarded() || !req.is_object()) return Session::error("parse").dump();
  const std::string cmd = req.value("cmd", "");

  if (cmd == "reset") {
    std::optional<std::uint64_t> seed;
    if (req.contains("seed") && req["seed"].is_number()) seed = req["seed"].get<std::uint64_t>();
    return session.reset(seed).dump();
  }
  if (cmd == "step") {
    if (!req.contains("action") || !req["action"].is_array() || req["action"].size() != 5)
      return Session::error("range").dump();
    RawAction a;
    for (int i = 0; i < 5; ++i) {
      if (!req["action"][i].is_number()) return Session::error("range").dump();
      const double v = req["action"][i].get<double>();
      if (!std::isfinite(v) || v < -1.0 || v > 1.0) return Session::error("range").dump();
      a[i] = static_cast<float>(v);
    }
    return session.step(a).dump();
  }
  if (cmd == "close") return json{{"ok", true}, {"closing", true}}.dump();
  return Session::error("parse").dump();
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("address must be host:port");
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

EnvServer::EnvServer(const std::string& host, int port, const ServerConfig& cfg) : cfg_(cfg) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("server: socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw std::invalid_argument("server: bad host " + host);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw std::runtime_error("server: cannot bind " + host + ":" + std::to_string(port));
  if (::listen(listen_fd_, 16) != 0) throw std::runtime_error("server: listen() failed");

  socklen_t len = sizeof(sa);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

EnvServer::~EnvServer() { stop(); }

void EnvServer::start() {
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void EnvServer::stop() {
  if (!running_.exchange(false)) {
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
  } else {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void EnvServer::wait() {
  if (accept_thread_.joinable()) accept_thread_.join();
}

void EnvServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;  // listener closed
    workers_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void EnvServer::handle_connection(int fd) {
  // idle sessions are reaped by the receive timeout; no message is sent
  timeval tv{};
  tv.tv_sec = static_cast<long>(cfg_.idle_timeout_s);
  tv.tv_usec = static_cast<long>((cfg_.idle_timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

  Session session(cfg_, Rng(cfg_.seed).child("session", session_counter_++).seed());
  std::string pending;
  char buf[4096];

  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n <= 0) break;  // peer closed, error, or idle timeout
    pending.append(buf, static_cast<std::size_t>(n));

    std::size_t pos;
    bool closing = false;
    while ((pos = pending.find('\n')) != std::string::npos) {
      const std::string line = pending.substr(0, pos);
      pending.erase(0, pos + 1);
      if (line.empty()) continue;
      const std::string reply = handle_request(line, session);
      closing = reply.find("\"closing\"") != std::string::npos;
      std::string out = reply + "\n";
      std::size_t sent = 0;
      while (sent < out.size()) {
        const ssize_t w = ::send(fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
        if (w <= 0) {
          closing = true;
          break;
        }
        sent += static_cast<std::size_t>(w);
      }
      if (closing) break;
    }
    if (closing) break;
  }
  ::close(fd);
}

}  // namespace blochgame
