// Batch entry points for the vessel pipeline and the local HTTP server.
#include <csignal>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "vesselgen/cli/commands.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/service/session.hpp"
// httplib after the Eigen-based headers (resolv.h defines _res).
#include "vesselgen/service/http.hpp"

namespace {

vg::service::HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace vg;

  CLI::App app{"vesselgen: vessel latents, diffusion sampling and baselines"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<int> batch;
  std::optional<fs::path> config_file;
  fs::path out = "out";
  std::string branch = "aorta";

  auto common = [&](CLI::App* c, bool with_branch) {
    c->add_option("--seed", seed, "random seed");
    c->add_option("--config", config_file, "JSON config overlay")->check(CLI::ExistingFile);
    c->add_option("--out", out, "output directory");
    c->add_option("--gamma", gamma, "guidance weight of the radii model");
    c->add_option("--batch", batch, "training batch size");
    if (with_branch) c->add_option("--branch", branch, "vessel branch");
  };

  int count = 30;
  auto* synth = app.add_subcommand("synth-data", "write a synthetic cohort");
  common(synth, false);
  synth->add_option("--count", count, "cohort members");

  fs::path cohort_dir, latents_dir, models_dir, input_dir;
  std::string branches = "all";
  auto* enc = app.add_subcommand("encode", "fit latents to a cohort directory");
  common(enc, false);
  enc->add_option("cohort", cohort_dir)->required();
  enc->add_option("--branches", branches, "comma-separated branches or 'all'");

  std::string component = "both";
  auto* tr = app.add_subcommand("train", "train a branch model");
  common(tr, true);
  tr->add_option("latents", latents_dir)->required();
  tr->add_option("--component", component, "both | cl | rad")->check(CLI::IsMember({"both", "cl", "rad"}));

  auto* smp = app.add_subcommand("sample", "unconditional ensemble");
  common(smp, true);
  smp->add_option("models", models_dir)->required();

  std::optional<fs::path> prompts;
  auto* cond = app.add_subcommand("condition", "prompt-conditioned ensemble");
  common(cond, true);
  cond->add_option("models", models_dir)->required();
  cond->add_option("--prompts", prompts, "prompts JSON")->check(CLI::ExistingFile);

  std::string method = "pca-g";
  int n_samples = 500;
  auto* base = app.add_subcommand("baseline", "PCA-Gaussian samples");
  common(base, true);
  base->add_option("latents", latents_dir)->required();
  base->add_option("--method", method, "pca-g | pca-g-d")->check(CLI::IsMember({"pca-g", "pca-g-d"}));
  base->add_option("--count", n_samples, "samples");

  auto* bio = app.add_subcommand("biomarkers", "biomarker CSV for a directory of samples");
  common(bio, false);
  bio->add_option("input", input_dir)->required();

  auto* bench = app.add_subcommand("benchmark", "diffusion vs baselines report");
  common(bench, true);
  bench->add_option("models", models_dir)->required();
  bench->add_option("latents", latents_dir)->required();
  bench->add_option("--count", n_samples, "samples per method");

  std::string host = "127.0.0.1";
  int port = 8080, workers = 1;
  std::optional<fs::path> store;
  auto* serve = app.add_subcommand("serve", "HTTP session server; models from VESSELGEN_MODEL_DIR");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--workers", workers);
  serve->add_option("--store", store, "directory for sessions and jobs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const cli::Overrides flags{seed, gamma, batch};
    auto cfg = [&] { return cli::resolve_config(config_file, flags); };
    if (*synth) {
      cli::synth_data(seed.value_or(0), count, out);
    } else if (*enc) {
      cli::encode(cohort_dir, cli::parse_branches(branches), cfg(), out);
    } else if (*tr) {
      cli::train(latents_dir, branch, component, cfg(), out);
    } else if (*smp) {
      cli::sample(models_dir, branch, cfg(), out);
    } else if (*cond) {
      cli::condition(models_dir, branch, prompts, cfg(), out);
    } else if (*base) {
      cli::baseline(latents_dir, branch, method, n_samples, cfg(), out);
    } else if (*bio) {
      cli::biomarkers(input_dir, out);
    } else if (*bench) {
      cli::benchmark(models_dir, latents_dir, branch, n_samples, cfg(), out);
    } else if (*serve) {
      const char* dir = std::getenv("VESSELGEN_MODEL_DIR");
      if (!dir) throw ValidationError("VESSELGEN_MODEL_DIR is not set");
      service::SessionService svc(service::SessionService::load_models(dir), {.workers = workers, .store = store.value_or(fs::path{})});
      service::HttpServer http(svc);
      g_server = &http;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ':' << port << '\n';
      http.listen(host, port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code(e);
  }
  return 0;
}
