#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/json.hpp"
#include "vesselgen/generative/hierarchical.hpp"
#include "vesselgen/geometry/io.hpp"

namespace vg::service {

/// Unknown session, job or branch.
class NotFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Request valid in form but not in the current state (e.g. exporting a running job).
class ConflictError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class PromptKind { point, contour, patch };
PromptKind prompt_kind_from_string(const std::string& s);
std::string to_string(PromptKind k);

struct Prompt {
  int index = 0;  // server-assigned, never reused within a session
  PromptKind kind = PromptKind::point;
  Points points;
  std::string label;
};

Json prompt_to_json(const Prompt& p);
/// Validates shape: at least one point, three for contours, finite coordinates.
Prompt prompt_from_json(const Json& j);
generative::PromptBundle to_bundle(const std::vector<Prompt>& prompts);

struct JobConfig {
  int K = 5;
  int L = 5;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  int mesh_res_u = 0;  // 0: branch preset
  int mesh_res_v = 0;
};

Json job_config_to_json(const JobConfig& c);
JobConfig job_config_from_json(const Json& j);

/// Per-section spread of an ensemble: std of the section center position (root mean
/// squared distance to the mean center) and std of the section mean radius.
struct Uncertainty {
  std::vector<double> position_std;
  std::vector<double> radius_std;
  double total = 0.0;  // sum of both over sections
};

Uncertainty ensemble_uncertainty(const std::vector<geometry::Latent>& ensemble);
Json uncertainty_to_json(const Uncertainty& u);

/// Completed-job snapshot: latents, meshes and the uncertainty summary.
Json ensemble_summary(const std::string& branch, const std::vector<geometry::Latent>& ensemble, int res_u, int res_v);

/// Session and job state with a FIFO-per-session worker pool. Thread-safe.
class SessionService {
 public:
  struct Options {
    int workers = 1;
    std::filesystem::path store;  // empty: in-memory only
  };

  SessionService(std::map<std::string, std::shared_ptr<const generative::BranchModel>> models, Options opt);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Loads <dir>/<branch>.json checkpoints for every known branch present.
  static std::map<std::string, std::shared_ptr<const generative::BranchModel>> load_models(
      const std::filesystem::path& dir);

  std::vector<std::string> branches() const;

  std::string create_session(const std::string& branch);
  Json get_session(const std::string& id) const;
  Json add_prompt(const std::string& id, const Json& prompt);
  Json remove_prompt(const std::string& id, int index);

  std::string submit_job(const std::string& session, const Json& config);
  /// {id, session, status, config, prompts[, summary | error]}.
  Json get_job(const std::string& id) const;
  /// Blocks until the job leaves the queue; returns its final status.
  std::string wait(const std::string& id) const;
  /// format: "obj" (one ensemble member, `sample`) or "latent". ConflictError unless done.
  std::string export_job(const std::string& id, const std::string& format, int sample = 0) const;

 private:
  struct Session {
    std::string id;
    std::string branch;
    std::vector<Prompt> prompts;
    int next_index = 0;
    std::vector<std::string> jobs;
  };
  enum class Status { queued, running, done, failed };
  struct Job {
    std::string id;
    std::string session;
    std::string branch;
    JobConfig config;
    std::vector<Prompt> prompts;
    Status status = Status::queued;
    std::string error;
    std::vector<geometry::Latent> latents;
    std::string summary;  // serialized once, immutable afterwards
  };

  static std::string status_name(Status s);
  Json job_json_locked(const Job& j) const;
  std::string new_id(const char* prefix);
  void worker_loop();
  void run(const std::string& job_id);
  void persist_session_locked(const Session& s) const;
  void persist_job_locked(const Job& j) const;
  void load_store();

  std::map<std::string, std::shared_ptr<const generative::BranchModel>> models_;
  Options opt_;
  mutable std::mutex mu_;
  mutable std::condition_variable changed_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::deque<std::string>> pending_;  // per session
  std::deque<std::string> ready_;                            // sessions with runnable work
  std::map<std::string, bool> busy_;                         // session has a running job
  std::uint64_t counter_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace vg::service
