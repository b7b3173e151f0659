#include "vesselgen/service/session.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "vesselgen/cohort/encode.hpp"
#include "vesselgen/core/random.hpp"
#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/geometry/bspline.hpp"
#include "vesselgen/geometry/io.hpp"

namespace vg::service {

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "point") return PromptKind::point;
  if (s == "contour") return PromptKind::contour;
  if (s == "patch") return PromptKind::patch;
  throw ValidationError("unknown prompt kind '" + s + "'");
}

std::string to_string(PromptKind k) {
  switch (k) {
    case PromptKind::point: return "point";
    case PromptKind::contour: return "contour";
    case PromptKind::patch: return "patch";
  }
  return "point";
}

Json prompt_to_json(const Prompt& p) {
  return Json{{"index", p.index}, {"kind", to_string(p.kind)}, {"points", to_json(p.points)}, {"label", p.label}};
}

Prompt prompt_from_json(const Json& j) {
  require(j.is_object(), "a prompt must be a JSON object");
  Prompt p;
  p.kind = prompt_kind_from_string(j.value("kind", std::string("point")));
  require(j.contains("points") && j.at("points").is_array(), "a prompt needs a points array");
  try {
    p.points = points_from_json(j.at("points"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed prompt points: ") + e.what());
  }
  p.label = j.value("label", std::string());
  require(!p.points.empty(), "a prompt needs at least one point");
  if (p.kind == PromptKind::contour) require(p.points.size() >= 3, "a contour prompt needs at least 3 points");
  for (const auto& x : p.points) require(x.allFinite(), "prompt coordinates must be finite");
  return p;
}

generative::PromptBundle to_bundle(const std::vector<Prompt>& prompts) {
  generative::PromptBundle b;
  for (const auto& p : prompts) switch (p.kind) {
      case PromptKind::point: b.points.insert(b.points.end(), p.points.begin(), p.points.end()); break;
      case PromptKind::contour: b.contours.push_back(p.points); break;
      case PromptKind::patch: b.patches.push_back(p.points); break;
    }
  return b;
}

Json job_config_to_json(const JobConfig& c) {
  return Json{{"K", c.K}, {"L", c.L}, {"gamma", c.gamma}, {"seed", c.seed}, {"mesh_res_u", c.mesh_res_u},
              {"mesh_res_v", c.mesh_res_v}};
}

JobConfig job_config_from_json(const Json& j) {
  require(j.is_object() || j.is_null(), "job config must be a JSON object");
  JobConfig c;
  if (j.is_null()) return c;
  try {
    c.K = j.value("K", c.K);
    c.L = j.value("L", c.L);
    c.gamma = j.value("gamma", c.gamma);
    c.seed = j.value("seed", c.seed);
    c.mesh_res_u = j.value("mesh_res_u", c.mesh_res_u);
    c.mesh_res_v = j.value("mesh_res_v", c.mesh_res_v);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed job config: ") + e.what());
  }
  require(c.K >= 1 && c.K <= 256 && c.L >= 1 && c.L <= 256, "K and L must lie in [1, 256]");
  require(std::isfinite(c.gamma), "gamma must be finite");
  require(c.mesh_res_u == 0 || c.mesh_res_u >= 2, "mesh_res_u must be 0 or at least 2");
  require(c.mesh_res_v == 0 || c.mesh_res_v >= 3, "mesh_res_v must be 0 or at least 3");
  return c;
}

Uncertainty ensemble_uncertainty(const std::vector<geometry::Latent>& ensemble) {
  require(!ensemble.empty(), "uncertainty of an empty ensemble");
  const int n = static_cast<int>(ensemble.front().control_points.size());
  const auto params = geometry::uniform_params(n);
  const auto knots = geometry::KnotVector::averaged(params, 3);
  const Matrix B = geometry::basis_matrix(knots, params);
  const auto E = static_cast<double>(ensemble.size());

  std::vector<Points> centers;
  std::vector<Vector> radii;
  for (const auto& z : ensemble) {
    require(static_cast<int>(z.control_points.size()) == n, "ensemble members must share n");
    Points q(static_cast<std::size_t>(n), Vec3::Zero());
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) q[static_cast<std::size_t>(i)] += B(i, k) * z.control_points[static_cast<std::size_t>(k)];
    centers.push_back(std::move(q));
    radii.push_back(z.radii.rowwise().mean());
  }
  Uncertainty u;
  for (int i = 0; i < n; ++i) {
    Vec3 mc = Vec3::Zero();
    double mr = 0;
    for (std::size_t e = 0; e < ensemble.size(); ++e) mc += centers[e][static_cast<std::size_t>(i)], mr += radii[e](i);
    mc /= E;
    mr /= E;
    double vc = 0, vr = 0;
    for (std::size_t e = 0; e < ensemble.size(); ++e) {
      vc += (centers[e][static_cast<std::size_t>(i)] - mc).squaredNorm();
      vr += (radii[e](i) - mr) * (radii[e](i) - mr);
    }
    u.position_std.push_back(std::sqrt(vc / E));
    u.radius_std.push_back(std::sqrt(vr / E));
    u.total += u.position_std.back() + u.radius_std.back();
  }
  return u;
}

Json uncertainty_to_json(const Uncertainty& u) {
  return Json{{"position_std", u.position_std}, {"radius_std", u.radius_std}, {"total", u.total}};
}

Json ensemble_summary(const std::string& branch, const std::vector<geometry::Latent>& ensemble, int res_u, int res_v) {
  Json latents = Json::array(), meshes = Json::array();
  for (const auto& z : ensemble) {
    latents.push_back(geometry::latent_to_json(z));
    const auto mesh = cohort::decode_vessel(z, res_u, res_v);
    Json faces = Json::array();
    for (const auto& q : mesh.quads) faces.push_back({q[0], q[1], q[2], q[3]});
    meshes.push_back(Json{{"vertices", to_json(mesh.vertices)}, {"faces", faces}, {"res_u", res_u}, {"res_v", res_v}});
  }
  return Json{{"branch", branch},
              {"count", ensemble.size()},
              {"latents", latents},
              {"meshes", meshes},
              {"uncertainty", uncertainty_to_json(ensemble_uncertainty(ensemble))}};
}

// ---------------------------------------------------------------------------

SessionService::SessionService(std::map<std::string, std::shared_ptr<const generative::BranchModel>> models,
                               Options opt)
    : models_(std::move(models)), opt_(std::move(opt)) {
  require(opt_.workers >= 1, "the service needs at least one worker");
  if (!opt_.store.empty()) load_store();
  for (int w = 0; w < opt_.workers; ++w) workers_.emplace_back([this] { worker_loop(); });
}

SessionService::~SessionService() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  changed_.notify_all();
  for (auto& t : workers_) t.join();
}

std::map<std::string, std::shared_ptr<const generative::BranchModel>> SessionService::load_models(
    const std::filesystem::path& dir) {
  std::map<std::string, std::shared_ptr<const generative::BranchModel>> out;
  std::vector<std::string> names(cohort::kBranches.begin(), cohort::kBranches.end());
  names.push_back("aorta32");
  for (const auto& b : names) {
    const auto p = dir / (b + ".json");
    if (std::filesystem::exists(p))
      out[b] = std::make_shared<const generative::BranchModel>(generative::load_branch_model(p));
  }
  return out;
}

std::vector<std::string> SessionService::branches() const {
  std::vector<std::string> out;
  for (const auto& [b, m] : models_) out.push_back(b);
  return out;
}

std::string SessionService::new_id(const char* prefix) {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu-%08llx", prefix, static_cast<unsigned long long>(++counter_),
                static_cast<unsigned long long>(rng() & 0xffffffffULL));
  return buf;
}

std::string SessionService::create_session(const std::string& branch) {
  if (!models_.count(branch)) throw NotFoundError("no model loaded for branch '" + branch + "'");
  std::lock_guard lock(mu_);
  Session s;
  s.id = new_id("s");
  s.branch = branch;
  persist_session_locked(s);
  const auto id = s.id;
  sessions_.emplace(id, std::move(s));
  return id;
}

Json SessionService::get_session(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  Json prompts = Json::array();
  for (const auto& p : it->second.prompts) prompts.push_back(prompt_to_json(p));
  return Json{{"id", id}, {"branch", it->second.branch}, {"prompts", prompts}, {"jobs", it->second.jobs}};
}

Json SessionService::add_prompt(const std::string& id, const Json& prompt) {
  Prompt p = prompt_from_json(prompt);
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    p.index = it->second.next_index++;
    it->second.prompts.push_back(std::move(p));
    persist_session_locked(it->second);
  }
  return get_session(id);
}

Json SessionService::remove_prompt(const std::string& id, int index) {
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    auto& ps = it->second.prompts;
    const auto pos = std::find_if(ps.begin(), ps.end(), [&](const Prompt& p) { return p.index == index; });
    if (pos == ps.end()) throw NotFoundError("session has no prompt with index " + std::to_string(index));
    ps.erase(pos);
    persist_session_locked(it->second);
  }
  return get_session(id);
}

std::string SessionService::submit_job(const std::string& session, const Json& config) {
  const JobConfig cfg = job_config_from_json(config);
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session + "'");
  Job j;
  j.id = new_id("j");
  j.session = session;
  j.branch = it->second.branch;
  j.config = cfg;
  j.prompts = it->second.prompts;
  it->second.jobs.push_back(j.id);
  persist_session_locked(it->second);
  persist_job_locked(j);
  const auto id = j.id;
  jobs_.emplace(id, std::move(j));
  pending_[session].push_back(id);
  if (!busy_[session]) {
    busy_[session] = true;
    ready_.push_back(session);
  }
  changed_.notify_all();
  return id;
}

std::string SessionService::status_name(Status s) {
  switch (s) {
    case Status::queued: return "queued";
    case Status::running: return "running";
    case Status::done: return "done";
    case Status::failed: return "failed";
  }
  return "queued";
}

Json SessionService::job_json_locked(const Job& j) const {
  Json prompts = Json::array();
  for (const auto& p : j.prompts) prompts.push_back(prompt_to_json(p));
  Json out{{"id", j.id},
           {"session", j.session},
           {"branch", j.branch},
           {"status", status_name(j.status)},
           {"config", job_config_to_json(j.config)},
           {"prompts", prompts}};
  if (j.status == Status::done) out["summary"] = Json::parse(j.summary);
  if (j.status == Status::failed) out["error"] = j.error;
  return out;
}

Json SessionService::get_job(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  return job_json_locked(it->second);
}

std::string SessionService::wait(const std::string& id) const {
  std::unique_lock lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  changed_.wait(lock, [&] { return it->second.status == Status::done || it->second.status == Status::failed; });
  return status_name(it->second.status);
}

std::string SessionService::export_job(const std::string& id, const std::string& format, int sample) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  const Job& j = it->second;
  if (j.status != Status::done) throw ConflictError("job '" + id + "' is " + status_name(j.status));
  if (format == "latent") {
    Json arr = Json::array();
    for (const auto& z : j.latents) arr.push_back(geometry::latent_to_json(z));
    return Json{{"branch", j.branch}, {"latents", arr}}.dump();
  }
  require(format == "obj", "export format must be obj or latent");
  require(sample >= 0 && sample < static_cast<int>(j.latents.size()), "sample index out of range");
  const auto& p = cohort::preset(j.branch);
  const int ru = j.config.mesh_res_u ? j.config.mesh_res_u : p.res_u;
  const int rv = j.config.mesh_res_v ? j.config.mesh_res_v : p.res_v;
  return geometry::mesh_to_obj(cohort::decode_vessel(j.latents[static_cast<std::size_t>(sample)], ru, rv));
}

void SessionService::worker_loop() {
  for (;;) {
    std::string job_id;
    {
      std::unique_lock lock(mu_);
      changed_.wait(lock, [&] { return stopping_ || !ready_.empty(); });
      if (stopping_) return;
      const std::string session = ready_.front();
      ready_.pop_front();
      job_id = pending_[session].front();
      pending_[session].pop_front();
      jobs_.at(job_id).status = Status::running;
    }
    run(job_id);
    {
      std::lock_guard lock(mu_);
      const std::string& session = jobs_.at(job_id).session;
      if (!pending_[session].empty())
        ready_.push_back(session);
      else
        busy_[session] = false;
    }
    changed_.notify_all();
  }
}

void SessionService::run(const std::string& job_id) {
  Job snapshot;
  {
    std::lock_guard lock(mu_);
    snapshot = jobs_.at(job_id);
  }
  std::vector<geometry::Latent> latents;
  std::string summary, error;
  try {
    const auto& model = *models_.at(snapshot.branch);
    generative::HierarchicalConfig hc;
    hc.K = snapshot.config.K;
    hc.L = snapshot.config.L;
    hc.centerline.seed = stream_seed(snapshot.config.seed, 1);
    hc.radii.seed = stream_seed(snapshot.config.seed, 2);
    hc.radii.gamma = snapshot.config.gamma;
    const auto s = generative::sample_hierarchical(model, to_bundle(snapshot.prompts), hc);
    for (std::size_t k = 0; k < s.radii.size(); ++k) latents.push_back({s.centerline_of(k), s.radii[k]});
    const auto& p = cohort::preset(snapshot.branch);
    summary = ensemble_summary(snapshot.branch, latents, snapshot.config.mesh_res_u ? snapshot.config.mesh_res_u : p.res_u,
                               snapshot.config.mesh_res_v ? snapshot.config.mesh_res_v : p.res_v)
                  .dump();
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::lock_guard lock(mu_);
  Job& j = jobs_.at(job_id);
  if (error.empty()) {
    j.latents = std::move(latents);
    j.summary = std::move(summary);
    j.status = Status::done;
  } else {
    j.error = std::move(error);
    j.status = Status::failed;
  }
  persist_job_locked(j);
}

void SessionService::persist_session_locked(const Session& s) const {
  if (opt_.store.empty()) return;
  Json prompts = Json::array();
  for (const auto& p : s.prompts) prompts.push_back(prompt_to_json(p));
  write_json(opt_.store / "sessions" / (s.id + ".json"),
             Json{{"id", s.id}, {"branch", s.branch}, {"prompts", prompts}, {"next_index", s.next_index}, {"jobs", s.jobs}});
}

void SessionService::persist_job_locked(const Job& j) const {
  if (opt_.store.empty()) return;
  Json out = job_json_locked(j);
  out.erase("summary");
  if (j.status == Status::done) {
    Json arr = Json::array();
    for (const auto& z : j.latents) arr.push_back(geometry::latent_to_json(z));
    out["latents"] = arr;
  }
  write_json(opt_.store / "jobs" / (j.id + ".json"), out);
}

void SessionService::load_store() {
  namespace fs = std::filesystem;
  fs::create_directories(opt_.store / "sessions");
  fs::create_directories(opt_.store / "jobs");
  for (const auto& entry : fs::directory_iterator(opt_.store / "sessions")) {
    const Json j = read_json(entry.path());
    Session s;
    s.id = j.at("id").get<std::string>();
    s.branch = j.at("branch").get<std::string>();
    for (const auto& p : j.at("prompts")) {
      Prompt pr = prompt_from_json(p);
      pr.index = p.at("index").get<int>();
      s.prompts.push_back(std::move(pr));
    }
    s.next_index = j.value("next_index", 0);
    s.jobs = j.value("jobs", std::vector<std::string>{});
    sessions_.emplace(s.id, std::move(s));
    ++counter_;
  }
  for (const auto& entry : fs::directory_iterator(opt_.store / "jobs")) {
    const Json j = read_json(entry.path());
    Job job;
    job.id = j.at("id").get<std::string>();
    job.session = j.at("session").get<std::string>();
    job.branch = j.at("branch").get<std::string>();
    job.config = job_config_from_json(j.at("config"));
    for (const auto& p : j.at("prompts")) {
      Prompt pr = prompt_from_json(p);
      pr.index = p.at("index").get<int>();
      job.prompts.push_back(std::move(pr));
    }
    const std::string status = j.at("status").get<std::string>();
    if (status == "done") {
      for (const auto& z : j.at("latents")) job.latents.push_back(geometry::latent_from_json(z));
      const auto& p = cohort::preset(job.branch);
      job.summary = ensemble_summary(job.branch, job.latents, job.config.mesh_res_u ? job.config.mesh_res_u : p.res_u,
                                     job.config.mesh_res_v ? job.config.mesh_res_v : p.res_v)
                        .dump();
      job.status = Status::done;
    } else {
      // Work lost in a restart is reported, not silently re-run.
      job.status = Status::failed;
      job.error = status == "failed" ? j.value("error", std::string("failed")) : "interrupted by a service restart";
    }
    jobs_.emplace(job.id, std::move(job));
    ++counter_;
  }
}

}  // namespace vg::service
