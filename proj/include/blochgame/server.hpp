// TCP environment server: newline-delimited JSON, one session per
// connection.
//
// Requests:  {"cmd":"reset","seed":7}
//            {"cmd":"step","action":[a0..a4]}   (raw action in [-1,1]^5)
//            {"cmd":"close"}
// Responses: {"ok":true,"obs":[1024 floats],"reward":..,"done":..,"info":{..}}
//            {"ok":false,"error":"parse"|"no_session"|"range"|"done"}
//
// A session created with reset(seed) plays exactly like an in-process
// BlochGame constructed with the same seed; actions go through the same
// scale_action. Sessions share no state; idle connections are closed
// silently after the configured timeout.
#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "blochgame/game.hpp"

namespace blochgame {

struct ServerConfig {
  GameConfig game;
  std::uint64_t seed = 1;        // base for sessions that omit a seed
  double idle_timeout_s = 300.0;
};

class EnvServer {
 public:
  // host:port; port 0 binds an ephemeral port (see port())
  EnvServer(const std::string& host, int port, const ServerConfig& cfg);
  ~EnvServer();

  EnvServer(const EnvServer&) = delete;
  EnvServer& operator=(const EnvServer&) = delete;

  void start();  // accept loop on a background thread
  void stop();
  void wait();   // blocks until the listener quits

  int port() const { return port_; }

  // one request -> one response line; exposed for protocol tests
  static std::string handle_request(const std::string& line, class Session& session);

 private:
  void accept_loop();
  void handle_connection(int fd);

  ServerConfig cfg_;
  int listen_fd_{-1};
  int port_{0};
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> session_counter_{0};
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
};

// Parse host:port strings like "127.0.0.1:5555".
std::pair<std::string, int> parse_addr(const std::string& addr);

}  // namespace blochgame
