// Command-line driver: train, eval, replay, baseline, serve.
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "blochgame/harness.hpp"
#include "blochgame/server.hpp"

using namespace blochgame;

int main(int argc, char** argv) {
  CLI::App app{"BlochGame: a virtual MRI scanner played by a DDPG agent"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train an agent");
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  train_cmd->add_option("--config", config_path, "key=value config file");
  train_cmd->add_option("--seed", seed, "master seed (overrides config)")->each([&](const std::string&) {
    seed_set = true;
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (epsilon = 0)");
  std::string checkpoint, out_path = "report.json";
  int games = 1000;
  std::uint64_t eval_seed = 1;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--games", games, "number of evaluation games");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
  eval_cmd->add_option("--out", out_path, "report JSON path");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "record one game as PGM frames + action log");
  std::string replay_ckpt, replay_dir = "replay";
  std::uint64_t replay_seed = 1;
  replay_cmd->add_option("--checkpoint", replay_ckpt, "checkpoint directory")->required();
  replay_cmd->add_option("--seed", replay_seed, "game seed");
  replay_cmd->add_option("--out-dir", replay_dir, "output directory");

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "evaluate a scripted policy");
  std::string policy = "random", base_out;
  int base_games = 1000;
  std::uint64_t base_seed = 1;
  base_cmd->add_option("--policy", policy, "random | center-out | edge-only")->required();
  base_cmd->add_option("--games", base_games, "number of games");
  base_cmd->add_option("--seed", base_seed, "evaluation seed");
  base_cmd->add_option("--out", base_out, "report JSON path");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "expose the environment over TCP (JSON lines)");
  std::string addr = "127.0.0.1:5555";
  std::uint64_t serve_seed = 1;
  double idle_timeout = 300.0;
  serve_cmd->add_option("--addr", addr, "host:port to bind");
  serve_cmd->add_option("--seed", serve_seed, "base seed for sessions without one");
  serve_cmd->add_option("--idle-timeout", idle_timeout, "seconds before idle sessions are reaped");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
      if (seed_set) cfg.seed = seed;
      const TrainResult r = train(cfg);
      std::printf("trained %d games (%ld env steps, %ld updates); last-window mean score %.2f\n",
                  r.games, r.env_steps, r.train_steps, r.mean_score_last_window);
      if (!r.final_checkpoint.empty())
        std::printf("final checkpoint: %s\nmetrics: %s\n", r.final_checkpoint.c_str(),
                    cfg.metrics_path.c_str());
    } else if (*eval_cmd) {
      const EvalReport rep = evaluate(checkpoint, games, eval_seed, GameConfig{});
      rep.write_json(out_path);
      std::printf("eval: %d games, accuracy %.4f, mean score %.2f, mean lines %.2f\n",
                  rep.n_games, rep.accuracy, rep.mean_score, rep.mean_lines);
      std::printf("report: %s\n", out_path.c_str());
    } else if (*replay_cmd) {
      const ReplayResult r = replay(replay_ckpt, replay_seed, replay_dir, GameConfig{});
      std::printf("replay: %d steps, score %.2f; frames and log in %s\n", r.steps, r.score,
                  replay_dir.c_str());
    } else if (*base_cmd) {
      const EvalReport rep = baseline(policy, base_games, base_seed, GameConfig{});
      if (!base_out.empty()) rep.write_json(base_out);
      std::printf("baseline %s: %d games, accuracy %.4f, mean score %.2f, mean lines %.2f\n",
                  policy.c_str(), rep.n_games, rep.accuracy, rep.mean_score, rep.mean_lines);
    } else if (*serve_cmd) {
      const auto [host, port] = parse_addr(addr);
      ServerConfig cfg;
      cfg.seed = serve_seed;
      cfg.idle_timeout_s = idle_timeout;
      EnvServer server(host, port, cfg);
      server.start();
      std::printf("serving BlochGame on %s:%d\n", host.c_str(), server.port());
      std::fflush(stdout);
      server.wait();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
