#include "vesselgen/cli/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "vesselgen/baselines/pca.hpp"
#include "vesselgen/cohort/biomarkers.hpp"
#include "vesselgen/cohort/encode.hpp"
#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/cohort/synthetic.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"
#include "vesselgen/generative/hierarchical.hpp"
#include "vesselgen/geometry/io.hpp"
#include "vesselgen/service/session.hpp"

namespace vg::cli {

namespace {

constexpr const char* kManifestName = "run_manifest.json";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << text;
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw ValidationError(what + " not found: " + p.string());
}

std::string numbered(const std::string& stem, int k, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03d", k);
  return stem + buf + ext;
}

struct BranchLatents {
  std::vector<std::string> ids;
  std::vector<geometry::Latent> latents;
};

BranchLatents load_latents(const fs::path& latents_dir, const std::string& branch) {
  const fs::path dir = latents_dir / branch;
  require_dir(dir, "latents for " + branch);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  BranchLatents out;
  for (const auto& f : files) {
    out.ids.push_back(f.stem().string());
    out.latents.push_back(geometry::latent_from_json(read_json(f)));
  }
  if (out.latents.size() < 2) throw ValidationError("need at least two latents for " + branch);
  return out;
}

cohort::EncodeOptions encode_options(const Json& cfg) {
  cohort::EncodeOptions o;
  const Json f = cfg.value("fit", Json::object());
  o.fit.max_iters = f.value("max_iters", o.fit.max_iters);
  o.fit.step_size = f.value("step_size", o.fit.step_size);
  o.fit.tolerance = f.value("tolerance", o.fit.tolerance);
  o.fit.res_u = f.value("res_u", o.fit.res_u);
  o.fit.res_v = f.value("res_v", o.fit.res_v);
  o.max_target_points = f.value("max_target_points", o.max_target_points);
  return o;
}

generative::PromptBundle read_prompts(const fs::path& file) {
  const Json j = read_json(file);
  const Json& list = j.is_object() ? j.at("prompts") : j;
  if (!list.is_array()) throw ValidationError("prompts file must hold an array of prompts");
  std::vector<service::Prompt> prompts;
  for (const auto& p : list) prompts.push_back(service::prompt_from_json(p));
  return service::to_bundle(prompts);
}

Matrix joint_rows(const std::vector<geometry::Latent>& zs) {
  const auto& z0 = zs.front();
  const Eigen::Index dc = 3 * static_cast<Eigen::Index>(z0.control_points.size()), dr = z0.radii.size();
  Matrix X(static_cast<Eigen::Index>(zs.size()), dc + dr);
  for (std::size_t k = 0; k < zs.size(); ++k) {
    X.row(static_cast<Eigen::Index>(k)) << flatten(zs[k].control_points).transpose(), flatten(zs[k].radii).transpose();
  }
  return X;
}

geometry::Latent split_joint(const Vector& v, int n, int m) {
  return {unflatten(v.head(3 * n)), unflatten(v.tail(static_cast<Eigen::Index>(n) * m), n, m)};
}

std::vector<geometry::Latent> baseline_latents(const std::vector<geometry::Latent>& train, const std::string& method,
                                               int count, std::uint64_t seed) {
  const int n = static_cast<int>(train.front().control_points.size());
  const int m = static_cast<int>(train.front().radii.cols());
  std::vector<geometry::Latent> out;
  if (method == "pca-g") {
    const auto pca = baselines::pca_fit(joint_rows(train));
    const Matrix S = baselines::sample_pca_gaussian(pca, count, seed);
    for (Eigen::Index k = 0; k < S.rows(); ++k) out.push_back(split_joint(S.row(k).transpose(), n, m));
  } else if (method == "pca-g-d") {
    Matrix C(static_cast<Eigen::Index>(train.size()), 3 * n), R(static_cast<Eigen::Index>(train.size()), n * m);
    for (std::size_t k = 0; k < train.size(); ++k) {
      C.row(static_cast<Eigen::Index>(k)) = flatten(train[k].control_points).transpose();
      R.row(static_cast<Eigen::Index>(k)) = flatten(train[k].radii).transpose();
    }
    const auto d = baselines::sample_pca_decoupled(baselines::pca_fit(C), baselines::pca_fit(R), count, seed);
    for (Eigen::Index k = 0; k < d.centerlines.rows(); ++k)
      out.push_back({unflatten(d.centerlines.row(k).transpose()), unflatten(d.radii.row(k).transpose(), n, m)});
  } else {
    throw ValidationError("unknown baseline '" + method + "' (expected pca-g or pca-g-d)");
  }
  return out;
}

// Latent JSON per sample, plus the OBJ mesh unless `preset` is null.
void write_samples(const std::vector<geometry::Latent>& zs, const cohort::BranchPreset* preset, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const int i = static_cast<int>(k);
    write_json(dir / numbered("sample", i, ".json"), geometry::latent_to_json(zs[k]));
    if (preset) geometry::write_obj(dir / numbered("sample", i, ".obj"), cohort::decode_vessel(zs[k], *preset));
  }
}

std::vector<geometry::Latent> diffusion_latents(const generative::BranchModel& model,
                                                const generative::PromptBundle& prompts,
                                                const generative::HierarchicalConfig& h) {
  const auto s = generative::sample_hierarchical(model, prompts, h);
  std::vector<geometry::Latent> out;
  for (std::size_t k = 0; k < s.radii.size(); ++k) out.push_back({s.centerline_of(k), s.radii[k]});
  return out;
}

fs::path checkpoint_path(const fs::path& models_dir, const std::string& branch) {
  const fs::path p = models_dir / (branch + ".json");
  if (!fs::is_regular_file(p)) throw ValidationError("no checkpoint for " + branch + " in " + models_dir.string());
  return p;
}

}  // namespace

generative::BranchTrainingConfig training_config(const Json& cfg) {
  generative::BranchTrainingConfig b;
  Json j = cfg.value("model", Json::object());
  j["train"] = cfg.at("train");
  j["T"] = cfg.at("schedule").value("T", b.T);
  return generative::branch_training_config_from_json(j, b);
}

generative::HierarchicalConfig sampling_config(const Json& cfg) {
  auto h = generative::hierarchical_config_from_json(cfg.at("sampling"));
  const auto seed = cfg.value("seed", std::uint64_t{0});
  h.centerline.seed = stream_seed(seed, 1);
  h.radii.seed = stream_seed(seed, 2);
  return h;
}

std::string sha1_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha1_file(const fs::path& path) { return sha1_hex(read_file(path)); }

RunManifest::RunManifest(std::string command, Json config, std::uint64_t seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed) {}

void RunManifest::input(const fs::path& p) { inputs_.push_back(p); }
void RunManifest::output(const fs::path& p) { outputs_.push_back(p); }

// Files keyed by their path relative to p, so identical content in another directory
// hashes the same. The manifest itself is skipped.
Json RunManifest::hash_entries(const fs::path& p) {
  Json files = Json::object();
  if (fs::is_regular_file(p)) {
    files[p.filename().string()] = sha1_file(p);
  } else if (fs::is_directory(p)) {
    std::vector<fs::path> all;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file() && e.path().filename() != kManifestName) all.push_back(e.path());
    std::sort(all.begin(), all.end());
    for (const auto& f : all) files[fs::relative(f, p).generic_string()] = sha1_file(f);
  }
  return Json{{"path", p.string()}, {"files", files}, {"digest", sha1_hex(files.dump())}};
}

Json RunManifest::to_json() const {
  Json in = Json::array(), out = Json::array();
  for (const auto& p : inputs_) in.push_back(hash_entries(p));
  for (const auto& p : outputs_) out.push_back(hash_entries(p));
  return Json{{"command", command_}, {"seed", seed_}, {"config", config_}, {"inputs", in}, {"outputs", out}};
}

Json RunManifest::write(const fs::path& dir) const {
  const Json j = to_json();
  fs::create_directories(dir);
  write_json(dir / kManifestName, j);
  return j;
}

Json resolve_config(const std::optional<fs::path>& file, const Overrides& flags) {
  Json cfg = cohort::default_pipeline_config();
  if (file) cfg = cohort::merge_config(cfg, read_json(*file));
  if (flags.seed) cfg["seed"] = *flags.seed;
  if (flags.gamma) cfg["sampling"]["radii"]["gamma"] = *flags.gamma;
  if (flags.batch) {
    if (*flags.batch < 1) throw ValidationError("batch must be positive");
    cfg["train"]["batch_size"] = *flags.batch;
  }
  return cfg;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const Json::exception*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

std::vector<std::string> parse_branches(const std::string& csv) {
  std::vector<std::string> out;
  if (csv.empty() || csv == "all") return {cohort::kBranches.begin(), cohort::kBranches.end()};
  std::stringstream ss(csv);
  for (std::string b; std::getline(ss, b, ',');) {
    if (!cohort::is_branch(b)) throw ValidationError("unknown branch '" + b + "'");
    out.push_back(b);
  }
  return out;
}

Json synth_data(std::uint64_t seed, int count, const fs::path& out) {
  if (count < cohort::kMinCohortSize)
    throw ValidationError("cohort needs at least " + std::to_string(cohort::kMinCohortSize) + " members");
  const auto c = cohort::make_synthetic_cohort(seed, count);
  cohort::save_cohort(c, out);
  RunManifest m("synth-data", Json{{"count", count}}, seed);
  m.output(out);
  return m.write(out);
}

Json encode(const fs::path& cohort_dir, const std::vector<std::string>& branches, const Json& config,
            const fs::path& out) {
  require_dir(cohort_dir, "cohort directory");
  const auto c = cohort::load_cohort(cohort_dir);
  const auto opt = encode_options(config);
  Json reports = Json::object();
  for (const auto& b : branches) {
    const auto& p = cohort::preset(b);
    for (const auto& r : c.branch(b)) {
      const auto e = cohort::encode_vessel(r, p, opt);
      write_json(out / b / (r.id + ".json"), geometry::latent_to_json(e.latent));
      reports[b][r.id] = fitting::fit_report_to_json(e.report);
    }
  }
  write_json(out / "fit_reports.json", reports);
  RunManifest m("encode", config, config.value("seed", std::uint64_t{0}));
  m.input(cohort_dir);
  m.output(out);
  return m.write(out);
}

Json train(const fs::path& latents_dir, const std::string& branch, const std::string& component, const Json& config,
           const fs::path& out) {
  const auto data = load_latents(latents_dir, branch);
  const auto comp = generative::train_component_from_string(component);
  auto tc = training_config(config);
  tc.train.seed = config.value("seed", tc.train.seed);
  std::vector<Points> C;
  std::vector<Matrix> R;
  for (const auto& z : data.latents) {
    C.push_back(z.control_points);
    R.push_back(z.radii);
  }
  const fs::path ckpt = out / (branch + ".json");
  std::optional<generative::BranchModel> base;
  if (comp != generative::TrainComponent::both) {
    if (!fs::is_regular_file(ckpt)) throw ValidationError("training one component needs " + ckpt.string());
    base = generative::load_branch_model(ckpt);
  }
  generative::BranchTrainingLog log;
  const auto model = generative::train_branch_model(branch, C, R, tc, &log, comp, base ? &*base : nullptr);
  generative::save_branch_model(ckpt, model);
  if (!log.centerline.epoch_loss.empty()) write_file(out / (branch + "_cl_loss.csv"), log.centerline.to_csv());
  if (!log.radii.epoch_loss.empty()) write_file(out / (branch + "_rad_loss.csv"), log.radii.to_csv());

  RunManifest m("train", Json{{"branch", branch}, {"component", component}, {"config", config}}, tc.train.seed);
  m.input(latents_dir / branch);
  m.output(ckpt);
  return m.write(out);
}

Json condition(const fs::path& models_dir, const std::string& branch, const std::optional<fs::path>& prompts_file,
               const Json& config, const fs::path& out) {
  const fs::path ckpt = checkpoint_path(models_dir, branch);
  const auto model = generative::load_branch_model(ckpt);
  const auto prompts = prompts_file ? read_prompts(*prompts_file) : generative::PromptBundle{};
  const auto zs = diffusion_latents(model, prompts, sampling_config(config));
  const fs::path dir = out / "samples";
  write_samples(zs, &cohort::preset(branch), dir);
  write_json(out / "uncertainty.json", service::uncertainty_to_json(service::ensemble_uncertainty(zs)));

  RunManifest m(prompts_file ? "condition" : "sample", Json{{"branch", branch}, {"config", config}},
                config.value("seed", std::uint64_t{0}));
  m.input(ckpt);
  if (prompts_file) m.input(*prompts_file);
  m.output(dir);
  return m.write(out);
}

Json baseline(const fs::path& latents_dir, const std::string& branch, const std::string& method, int count,
              const Json& config, const fs::path& out) {
  if (count < 1) throw ValidationError("count must be positive");
  const auto data = load_latents(latents_dir, branch);
  const auto seed = config.value("seed", std::uint64_t{0});
  const auto zs = baseline_latents(data.latents, method, count, seed);
  const fs::path dir = out / "samples";
  write_samples(zs, &cohort::preset(branch), dir);
  RunManifest m("baseline", Json{{"branch", branch}, {"method", method}, {"count", count}}, seed);
  m.input(latents_dir / branch);
  m.output(dir);
  return m.write(out);
}

Json biomarkers(const fs::path& input_dir, const fs::path& out) {
  require_dir(input_dir, "input directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input_dir)) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || e.path().filename() == kManifestName) continue;
    if (ext == ".json") {
      files.push_back(e.path());
    } else if (ext == ".obj") {
      auto twin = e.path();
      twin.replace_extension(".json");
      if (!fs::exists(twin)) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no latents or meshes in " + input_dir.string());
  std::vector<cohort::BiomarkerTable> rows;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    rows.push_back(f.extension() == ".json" ? cohort::biomarkers(geometry::latent_from_json(read_json(f)))
                                            : cohort::biomarkers(geometry::read_obj(f)));
    ids.push_back(f.stem().string());
  }
  const fs::path csv = out / "biomarkers.csv";
  write_file(csv, cohort::biomarkers_to_csv(rows, ids));
  RunManifest m("biomarkers", Json::object(), 0);
  m.input(input_dir);
  m.output(csv);
  return m.write(out);
}

Json benchmark(const fs::path& models_dir, const fs::path& latents_dir, const std::string& branch, int count,
               const Json& config, const fs::path& out) {
  if (count < 5) throw ValidationError("benchmark needs at least five samples per method");
  const auto data = load_latents(latents_dir, branch);
  const fs::path ckpt = checkpoint_path(models_dir, branch);
  const auto model = generative::load_branch_model(ckpt);
  const auto seed = config.value("seed", std::uint64_t{0});

  auto h = sampling_config(config);
  h.L = std::max(1, h.L);
  h.K = (count + h.L - 1) / h.L;
  auto diff = diffusion_latents(model, {}, h);
  diff.resize(static_cast<std::size_t>(count));

  std::map<std::string, std::vector<geometry::Latent>> methods{
      {"diffusion", std::move(diff)},
      {"pca-g", baseline_latents(data.latents, "pca-g", count, seed)},
      {"pca-g-d", baseline_latents(data.latents, "pca-g-d", count, seed)}};

  const auto span = baselines::pca_fit(joint_rows(data.latents));
  std::vector<cohort::BiomarkerTable> ref;
  for (const auto& z : data.latents) ref.push_back(cohort::biomarkers(z));

  // Shared histogram edges over all methods.
  std::map<std::string, std::vector<double>> dist;
  double hi = 0.0;
  for (const auto& [name, zs] : methods) {
    const Matrix X = joint_rows(zs);
    for (Eigen::Index k = 0; k < X.rows(); ++k) dist[name].push_back(baselines::subspace_distance(X.row(k).transpose(), span));
    hi = std::max(hi, *std::max_element(dist[name].begin(), dist[name].end()));
  }
  const int bins = 20;
  const double width = hi > 0 ? hi / bins : 1.0;
  std::string hist = "method,bin_lo,bin_hi,count\n";
  Json report{{"branch", branch}, {"samples_per_method", count}, {"training_latents", data.latents.size()},
              {"span_modes", span.modes()}, {"methods", Json::object()}};
  for (const auto& [name, zs] : methods) {
    std::vector<int> counts(bins, 0);
    for (double d : dist[name]) ++counts[std::min(bins - 1, static_cast<int>(d / width))];
    for (int b = 0; b < bins; ++b) {
      std::ostringstream row;
      row << name << ',' << b * width << ',' << (b + 1) * width << ',' << counts[b] << '\n';
      hist += row.str();
    }
    std::vector<cohort::BiomarkerTable> gen;
    for (const auto& z : zs) gen.push_back(cohort::biomarkers(z));
    const auto cmp = cohort::compare_distributions(ref, gen);
    write_file(out / ("biomarkers_" + name + ".csv"), cohort::comparison_to_csv(cmp));
    write_samples(zs, nullptr, out / "samples" / name);
    report["methods"][name] = Json{{"subspace_distance_median", cohort::quantile(dist[name], 0.5)},
                                   {"subspace_distance_p90", cohort::quantile(dist[name], 0.9)},
                                   {"biomarkers", cohort::comparison_to_json(cmp)}};
  }
  write_file(out / "subspace_histogram.csv", hist);
  write_json(out / "report.json", report);

  RunManifest m("benchmark", Json{{"branch", branch}, {"count", count}, {"config", config}}, seed);
  m.input(ckpt);
  m.input(latents_dir / branch);
  m.output(out / "report.json");
  m.output(out / "subspace_histogram.csv");
  return m.write(out);
}

}  // namespace vg::cli
