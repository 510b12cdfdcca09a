#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace casemix {

struct ServiceConfig {
  // Seeds the working scenario at start-up. When empty the copy already in
  // state_dir is used.
  std::filesystem::path scenario_file;
  // Holds scenario.json (with cached bounds) and sessions/*.json.
  std::filesystem::path state_dir = "casemix-state";
  std::string host = "127.0.0.1";
  int port = 8080;
};

// JSON-over-HTTP front end for the planning engine:
//   GET  /api/health                 liveness
//   GET  /api/scenario               current scenario with fingerprint
//   PUT  /api/scenario               replace and validate the scenario
//   GET  /api/bounds                 bound analysis as server-sent events
//   POST /api/solve                  maximum throughput for a type mix
//   POST /api/feasible               feasibility of a given case mix
//   POST /api/session                open a session
//   GET  /api/session/{id}           session state and history
//   POST /api/alter                  propose an alteration
//   POST /api/alter-subtype          same, targeting a sub-type
//   POST /api/decision               accept or reject a proposal
//   POST /api/sweep                  alterations over a list of deltas
//   POST /api/compare                gains against losses of two mixes
//   POST /api/similarity             per-type significance and similarity level
//   POST /api/proximity              closeness to an ideal mix
//   POST /api/boundary               similarity intervals around a mix
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds to config.port (0 picks a free port) and returns the bound port,
  // or -1 on failure.
  int bind();
  // Serves until stop() is called. Requires a successful bind().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace casemix
