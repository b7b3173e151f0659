#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "vesselgen/cohort/encode.hpp"
#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/cohort/record.hpp"
#include "vesselgen/cohort/synthetic.hpp"
#include "vesselgen/geometry/bspline.hpp"
#include "vesselgen/service/http.hpp"

// After the project headers: resolv.h, pulled in here, defines a macro named _res.
#include <httplib.h>

using namespace vg;
using namespace vg::service;

namespace {

constexpr const char* kBranch = "RCCA";

struct Fixture {
  std::map<std::string, std::shared_ptr<const generative::BranchModel>> models;
  geometry::QuadMesh held_out;  // decoded truth of a vessel outside the training set
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto cohort = cohort::make_synthetic_cohort(11, 30);
    const auto members = cohort.branch(kBranch);
    std::vector<Points> C;
    std::vector<Matrix> R;
    for (int k = 0; k < 25; ++k) {
      C.push_back(members[k].latent->control_points);
      R.push_back(members[k].latent->radii);
    }
    generative::BranchTrainingConfig tc;
    tc.centerline_net.hidden = tc.radii_net.hidden = 64;
    tc.centerline_net.layers = tc.radii_net.layers = 2;
    tc.centerline_net.output = tc.radii_net.output = "x0";
    tc.train.learning_rate = 1e-3;
    tc.train.epochs = 3000;
    tc.train.seed = 3;
    Fixture out;
    out.models[kBranch] = std::make_shared<generative::BranchModel>(
        generative::train_branch_model(kBranch, C, R, tc, nullptr));
    out.held_out = cohort::decode_vessel(*members[27].latent, cohort::preset(kBranch));
    return out;
  }();
  return f;
}

/// Contour prompt from the section of the held-out mesh at the given row fraction.
Json contour_at(double frac) {
  const auto& mesh = fixture().held_out;
  const int row = static_cast<int>(std::lround(frac * (mesh.res_u - 1)));
  Json pts = Json::array();
  for (int j = 0; j < mesh.res_v; j += 4) {
    const Vec3& p = mesh.vertices[static_cast<std::size_t>(row * mesh.res_v + j)];
    pts.push_back({p.x(), p.y(), p.z()});
  }
  return Json{{"kind", "contour"}, {"points", pts}, {"label", "section"}};
}

struct Server {
  explicit Server(SessionService::Options opt = {}) : service(fixture().models, opt), http(service) {
    port = http.start("127.0.0.1", 0);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
  SessionService service;
  HttpServer http;
  int port = 0;
};

Json body(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

std::string post(httplib::Client& c, const std::string& path, const Json& j, int expect) {
  auto r = c.Post(path, j.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == expect);
  return r->body;
}

std::string new_session(httplib::Client& c) {
  return Json::parse(post(c, "/sessions", {{"branch", kBranch}}, 201)).at("id").get<std::string>();
}

std::string run_job(httplib::Client& c, const std::string& sid, const Json& cfg) {
  const std::string jid = Json::parse(post(c, "/sessions/" + sid + "/jobs", cfg, 202)).at("id").get<std::string>();
  for (;;) {
    const Json j = body(c.Get("/jobs/" + jid));
    const std::string st = j.at("status").get<std::string>();
    if (st == "done") return jid;
    REQUIRE_MESSAGE(st != "failed", j.value("error", std::string()));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

const Json kSmallJob{{"K", 2}, {"L", 2}, {"gamma", 1.0}, {"seed", 7}};

}  // namespace

TEST_CASE("sessions echo, get distinct ids and reject unknown branches") {
  Server s;
  auto c = s.client();
  const std::string a = new_session(c), b = new_session(c);
  CHECK(a != b);
  const Json got = body(c.Get("/sessions/" + a));
  CHECK(got.at("branch") == kBranch);
  CHECK(got.at("prompts").empty());

  auto r = c.Post("/sessions", Json{{"branch", "femoral"}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 404);
  CHECK(Json::parse(r->body).contains("error"));
  CHECK(c.Get("/sessions/nope")->status == 404);
  CHECK(c.Post("/sessions", "{not json", "application/json")->status == 400);
  CHECK(c.Get("/jobs/nope")->status == 404);
}

TEST_CASE("prompts are indexed, validated and removable") {
  Server s;
  auto c = s.client();
  const std::string sid = new_session(c);
  const Json before = body(c.Get("/sessions/" + sid));

  const Json point{{"kind", "point"}, {"points", {{1.0, 2.0, 3.0}}}, {"label", "tip"}};
  const Json after = Json::parse(post(c, "/sessions/" + sid + "/prompts", point, 201));
  REQUIRE(after.at("prompts").size() == 1);
  const Json& echoed = after.at("prompts")[0];
  CHECK(echoed.at("index") == 0);
  CHECK(echoed.at("kind") == "point");
  CHECK(echoed.at("points") == point.at("points"));
  CHECK(echoed.at("label") == "tip");

  const Json second = Json::parse(post(c, "/sessions/" + sid + "/prompts", contour_at(0.5), 201));
  CHECK(second.at("prompts")[1].at("index") == 1);
  body(c.Delete("/sessions/" + sid + "/prompts/1"));
  const Json removed = body(c.Delete("/sessions/" + sid + "/prompts/0"));
  CHECK(removed == before);

  // Indices are never reused.
  CHECK(Json::parse(post(c, "/sessions/" + sid + "/prompts", point, 201)).at("prompts")[0].at("index") == 2);

  const Json short_contour{{"kind", "contour"}, {"points", {{0, 0, 0}, {1, 0, 0}}}};
  post(c, "/sessions/" + sid + "/prompts", short_contour, 400);
  post(c, "/sessions/" + sid + "/prompts", Json{{"kind", "blob"}, {"points", {{0, 0, 0}}}}, 400);
  post(c, "/sessions/" + sid + "/prompts", Json{{"kind", "point"}, {"points", {{0, 0}}}}, 400);
  CHECK(c.Delete("/sessions/" + sid + "/prompts/99")->status == 404);
  CHECK(c.Delete("/sessions/" + sid + "/prompts/x")->status == 400);
}

TEST_CASE("jobs are deterministic, immutable and exportable") {
  Server s;
  auto c = s.client();
  const std::string a = new_session(c), b = new_session(c);
  for (const auto& sid : {a, b})
    for (double f : {0.2, 0.6}) post(c, "/sessions/" + sid + "/prompts", contour_at(f), 201);

  const std::string ja = run_job(c, a, kSmallJob), jb = run_job(c, b, kSmallJob);
  const Json da = body(c.Get("/jobs/" + ja)), db = body(c.Get("/jobs/" + jb));
  CHECK(da.at("summary") == db.at("summary"));
  CHECK(da.at("prompts").size() == 2);

  const auto& p = cohort::preset(kBranch);
  const Json& summary = da.at("summary");
  CHECK(summary.at("count") == 4);
  const auto& u = summary.at("uncertainty");
  CHECK(u.at("position_std").size() == static_cast<std::size_t>(p.n));
  for (const auto& v : u.at("position_std")) CHECK(v.get<double>() >= 0.0);
  for (const auto& v : u.at("radius_std")) CHECK(v.get<double>() >= 0.0);
  CHECK(summary.at("meshes")[0].at("vertices").size() == static_cast<std::size_t>(p.res_u * p.res_v));

  // Re-polling returns the same bytes, and later prompt edits do not leak into the snapshot.
  const std::string first = c.Get("/jobs/" + ja)->body;
  post(c, "/sessions/" + a + "/prompts", contour_at(0.9), 201);
  CHECK(c.Get("/jobs/" + ja)->body == first);

  // Latent export decodes to the summary meshes.
  const Json lat = body(c.Get("/jobs/" + ja + "/export?format=latent"));
  REQUIRE(lat.at("latents").size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto mesh = cohort::decode_vessel(geometry::latent_from_json(lat.at("latents")[k]), p);
    const Points ref = points_from_json(summary.at("meshes")[k].at("vertices"));
    REQUIRE(mesh.vertices.size() == ref.size());
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, (mesh.vertices[i] - ref[i]).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-10);
  }

  // OBJ export re-ingests.
  auto obj = c.Get("/jobs/" + ja + "/export?format=obj&sample=1");
  REQUIRE(obj);
  REQUIRE(obj->status == 200);
  const auto dir = std::filesystem::temp_directory_path() / "vg_service_export";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "s.obj") << obj->body;
    const auto z = geometry::latent_from_json(lat.at("latents")[1]);
    const auto poly = geometry::make_polygon(z.control_points);
    Points cl;
    for (double u : geometry::mesh_u_params(p.res_u)) cl.push_back(geometry::eval_curve(poly, u));
    std::ofstream(dir / "s.csv") << geometry::polyline_to_csv(cl);
  }
  const auto rec = cohort::ingest(dir / "s.csv", dir / "s.obj", kBranch);
  const Points ref = points_from_json(summary.at("meshes")[1].at("vertices"));
  REQUIRE(rec.surface.vertices.size() == ref.size());
  CHECK(rec.surface.res_u == p.res_u);
  CHECK(rec.surface.quads.size() == summary.at("meshes")[1].at("faces").size());
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    err = std::max(err, (rec.surface.vertices[i] + rec.offset - ref[i]).cwiseAbs().maxCoeff());
  CHECK(err <= 1e-9);
  std::filesystem::remove_all(dir);

  CHECK(c.Get("/jobs/" + ja + "/export?format=stl")->status == 400);
  CHECK(c.Get("/jobs/" + ja + "/export?format=obj&sample=9")->status == 400);
}

TEST_CASE("unconditional jobs run and unfinished jobs cannot be exported") {
  Server s;
  auto c = s.client();
  const std::string sid = new_session(c);
  // Jobs in one session run in order, so the second is still queued or running here.
  post(c, "/sessions/" + sid + "/jobs", Json{{"K", 3}, {"L", 3}, {"seed", 1}}, 202);
  const std::string queued =
      Json::parse(post(c, "/sessions/" + sid + "/jobs", kSmallJob, 202)).at("id").get<std::string>();
  CHECK(c.Get("/jobs/" + queued + "/export?format=obj")->status == 409);
  CHECK(s.service.wait(queued) == "done");
  CHECK(c.Get("/jobs/" + queued + "/export?format=obj")->status == 200);
  CHECK(body(c.Get("/jobs/" + queued)).at("prompts").empty());
  post(c, "/sessions/" + sid + "/jobs", Json{{"K", 0}}, 400);
}

TEST_CASE("a fourth contour does not raise ensemble uncertainty") {
  // One 25-member ensemble is noisy; compare totals summed over sampler seeds.
  Server s;
  auto c = s.client();
  double three = 0.0, four = 0.0;
  for (int seed = 21; seed < 26; ++seed) {
    const Json cfg{{"K", 5}, {"L", 5}, {"gamma", 1.0}, {"seed", seed}};
    const std::string sid = new_session(c);
    for (double f : {0.15, 0.45, 0.75}) post(c, "/sessions/" + sid + "/prompts", contour_at(f), 201);
    three += body(c.Get("/jobs/" + run_job(c, sid, cfg))).at("summary").at("uncertainty").at("total").get<double>();
    post(c, "/sessions/" + sid + "/prompts", contour_at(0.95), 201);
    four += body(c.Get("/jobs/" + run_job(c, sid, cfg))).at("summary").at("uncertainty").at("total").get<double>();
  }
  MESSAGE("summed total uncertainty with 3 contours " << three << ", with 4 " << four);
  CHECK(four <= three);
}

TEST_CASE("interleaved sessions stay isolated") {
  Server s({.workers = 2, .store = {}});
  const int rounds = 20;
  std::string ids[2];
  {
    auto c = s.client();
    ids[0] = new_session(c);
    ids[1] = new_session(c);
  }
  auto writer = [&](int w) {
    auto c = s.client();
    for (int k = 0; k < rounds; ++k) {
      const Json p{{"kind", "point"}, {"points", {{double(w), double(k), 0.0}}}, {"label", "w" + std::to_string(w)}};
      auto r = c.Post("/sessions/" + ids[w] + "/prompts", p.dump(), "application/json");
      REQUIRE(r);
    }
  };
  std::thread t0(writer, 0), t1(writer, 1);
  t0.join();
  t1.join();
  auto c = s.client();
  for (int w = 0; w < 2; ++w) {
    const Json got = body(c.Get("/sessions/" + ids[w]));
    REQUIRE(got.at("prompts").size() == static_cast<std::size_t>(rounds));
    int k = 0;
    for (const auto& p : got.at("prompts")) {
      CHECK(p.at("label") == "w" + std::to_string(w));
      CHECK(p.at("points")[0][1].get<double>() == k++);
    }
  }
}

TEST_CASE("a restarted service reloads sessions and summaries from its store") {
  const auto store = std::filesystem::temp_directory_path() / "vg_service_store";
  std::filesystem::remove_all(store);
  std::string sid, jid, before, session_before;
  {
    Server s({.workers = 1, .store = store});
    auto c = s.client();
    sid = new_session(c);
    post(c, "/sessions/" + sid + "/prompts", contour_at(0.3), 201);
    jid = run_job(c, sid, kSmallJob);
    before = c.Get("/jobs/" + jid)->body;
    session_before = c.Get("/sessions/" + sid)->body;
  }
  {
    Server s({.workers = 1, .store = store});
    auto c = s.client();
    CHECK(c.Get("/jobs/" + jid)->body == before);
    CHECK(c.Get("/sessions/" + sid)->body == session_before);
    // New ids do not collide with reloaded ones.
    CHECK(new_session(c) != sid);
  }
  std::filesystem::remove_all(store);
}
