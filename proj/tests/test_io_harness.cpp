#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "riccilab/acceptance.hpp"
#include "riccilab/harness.hpp"
#include "riccilab/json_io.hpp"

using namespace riccilab;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = std::numbers::pi;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "riccilab_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

ScenarioConfig small_scenario(const std::string& out) {
  ScenarioConfig cfg;
  cfg.name = "unit";
  cfg.seed = 7;
  cfg.backend = "warped-circle";
  cfg.length = 2.0 * kPi;
  cfg.psi0 = 1.0;
  cfg.perturb_amplitude = 0.06;
  cfg.perturb_max_mode = 2;
  cfg.mesh_n = 64;
  cfg.flow.dt = 1e-3;
  cfg.flow.t_final = 0.05;
  BackwardSpec b;
  b.kind = BackwardKind::ConjugateHeat;
  b.tau0 = 0.4;
  b.w0_amplitude = 0.3;
  b.w0_max_mode = 2;
  cfg.backward = {b};
  cfg.reports.comparison = false;
  cfg.reports.hopf_cole = false;
  cfg.transport.enabled = false;
  cfg.out_dir = out;
  return cfg;
}
}  // namespace

TEST_CASE("serialization round trips preserve states and runs") {
  const MetricState st = make_random_warped_sphere(32, kPi, {0.05, 3, 9});
  const MetricState st2 = state_from_json(json_of(st));
  CHECK(st2.backend == st.backend);
  REQUIRE(st2.phi.size() == st.phi.size());
  for (size_t i = 0; i < st.phi.size(); ++i) {
    CHECK(st2.phi[i] == st.phi[i]);
    CHECK(st2.psi[i] == st.psi[i]);
  }
  CHECK(st2.mesh.topology == st.mesh.topology);
  CHECK(st2.mesh.extent == st.mesh.extent);

  FlowConfig fc;
  fc.dt = 2.5e-4;
  fc.t_final = 0.125;
  fc.scheme = Scheme::SemiImplicit;
  fc.renormalize = false;
  const FlowConfig fc2 = flow_config_from_json(json_of(fc));
  CHECK(fc2.dt == fc.dt);
  CHECK(fc2.t_final == fc.t_final);
  CHECK(fc2.scheme == fc.scheme);
  CHECK(fc2.renormalize == fc.renormalize);

  FlowConfig short_run;
  short_run.dt = 1e-3;
  short_run.t_final = 0.02;
  const Trajectory traj =
      run_flow(make_random_warped_circle(32, 2.0 * kPi, 1.0, {0.06, 2, 7}), short_run);
  const Trajectory traj2 = trajectory_from_json(json_of(traj));
  REQUIRE(traj2.times.size() == traj.times.size());
  CHECK(traj2.times.back() == traj.times.back());
  CHECK(traj2.volume0 == traj.volume0);
  CHECK(traj2.singular == traj.singular);
  CHECK(traj2.states.back().phi == traj.states.back().phi);
  CHECK(traj2.summaries.back().mean_R == traj.summaries.back().mean_R);

  const auto w0 = make_random_density(traj.states.back(), 0.3, 2, 11);
  BackwardConfig bc;
  bc.tau0 = 0.4;
  const BackwardRun run = run_backward(traj, w0, BackwardKind::ConjugateHeat, bc);
  const BackwardRun run2 = backward_run_from_json(json_of(run));
  REQUIRE(run2.t.size() == run.t.size());
  CHECK(run2.kind == run.kind);
  CHECK(run2.t == run.t);
  CHECK(run2.tau == run.tau);
  CHECK(run2.w.front() == run.w.front());
  CHECK(run2.w.back() == run.w.back());
  CHECK(run2.mass_drift == run.mass_drift);
}

TEST_CASE("scenario config survives a serialize/parse cycle unchanged") {
  const ScenarioConfig cfg = small_scenario("out/unit");
  const Json j1 = json_of(cfg);
  const ScenarioConfig cfg2 = scenario_from_json(j1);
  const Json j2 = json_of(cfg2);
  CHECK(j1.dump() == j2.dump());
}

TEST_CASE("malformed scenarios are rejected with the offending field named") {
  const Json base = json_of(small_scenario("out/unit"));

  Json bad = base;
  bad["colour"] = "red";
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("colour"), std::invalid_argument);

  bad = base;
  bad["mesh"]["spacing"] = 0.1;
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("scenario.mesh"), std::invalid_argument);

  bad = base;
  bad["backend"] = "moebius";
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("moebius"), std::invalid_argument);

  bad = base;
  bad["mesh"]["n"] = 4;
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("scenario.mesh.n"), std::invalid_argument);

  bad = base;
  bad["backward"] = Json{{"kind", "conjugate-heat"}};
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("scenario.backward"), std::invalid_argument);

  bad = base;
  bad["flow"]["scheme"] = "leapfrog";
  CHECK_THROWS_WITH_AS(scenario_from_json(bad),
                       doctest::Contains("leapfrog"), std::invalid_argument);

  bad = base;
  bad["seed"] = "not-a-number";
  CHECK_THROWS_AS(scenario_from_json(bad), std::invalid_argument);
}

TEST_CASE("repeated runs are byte-identical and the digest ignores the out dir") {
  ScenarioConfig a = small_scenario(fresh_dir("det_a"));
  ScenarioConfig b = small_scenario(fresh_dir("det_b"));
  const RunManifest ma = command_flow(a);
  const RunManifest mb = command_flow(b);
  CHECK(ma.all_passed());
  CHECK(mb.all_passed());
  CHECK(ma.config_digest == mb.config_digest);
  CHECK(ma.output_digest == mb.output_digest);
  CHECK(slurp(fs::path(a.out_dir) / "manifest.json") ==
        slurp(fs::path(b.out_dir) / "manifest.json"));
  CHECK(slurp(fs::path(a.out_dir) / "flow.csv") == slurp(fs::path(b.out_dir) / "flow.csv"));

  ScenarioConfig c = small_scenario(fresh_dir("det_c"));
  c.seed = 8;
  const RunManifest mc = command_flow(c);
  CHECK(mc.config_digest != ma.config_digest);
  CHECK(mc.output_digest != ma.output_digest);
}

TEST_CASE("export rebuilds the functional panel from stored runs") {
  ScenarioConfig cfg = small_scenario(fresh_dir("export"));
  const RunManifest ran = command_perelman(cfg);
  CHECK(ran.all_passed());
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "backward_0.json"));

  const RunManifest ex = command_export(cfg, "all");
  CHECK(ex.errors.empty());
  const fs::path dir(cfg.out_dir);
  REQUIRE(fs::exists(dir / "export_0.csv"));
  REQUIRE(fs::exists(dir / "export_0.json"));
  REQUIRE(fs::exists(dir / "export_0.gp"));

  const std::string csv = slurp(dir / "export_0.csv");
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "t,S,I,W,tau,tau_hat,tauhatR,residual_coupling,residual_entropy,residual_w,"
        "residual_curvature");
  // One row per stored snapshot.
  const size_t rows = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  const BackwardRun run =
      backward_run_from_json(read_json_file((dir / "backward_0.json").string()));
  CHECK(rows == run.t.size());

  CHECK_THROWS_AS(command_export(cfg, "yaml"), std::invalid_argument);

  ScenarioConfig empty = small_scenario(fresh_dir("export_empty"));
  const RunManifest none = command_export(empty, "csv");
  REQUIRE_FALSE(none.errors.empty());
  CHECK(none.errors.front().message.find("backward_0.json") != std::string::npos);
  CHECK_FALSE(none.all_passed());
}

TEST_CASE("plot scripts only reference columns their table has") {
  ScenarioConfig cfg = small_scenario(fresh_dir("plots"));
  cfg.transport.enabled = true;
  cfg.transport.times = {0.0, 0.05};
  cfg.transport.chain_segments = 6;
  const RunManifest man = run_scenario(cfg);
  CHECK(man.all_passed());
  const fs::path dir(cfg.out_dir);
  int scripts = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".gp") continue;
    ++scripts;
    const std::string gp = slurp(entry.path());
    // Extract the CSV the script plots and the highest column index it uses.
    const size_t q0 = gp.find("plot \"");
    REQUIRE(q0 != std::string::npos);
    const size_t q1 = gp.find('"', q0 + 6);
    const std::string csv_name = gp.substr(q0 + 6, q1 - q0 - 6);
    const std::string csv = slurp(dir / csv_name);
    const std::string header = csv.substr(0, csv.find('\n'));
    const size_t ncols = static_cast<size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    size_t pos = 0;
    while ((pos = gp.find("using 1:", pos)) != std::string::npos) {
      pos += 8;
      const size_t col = std::stoul(gp.substr(pos));
      CHECK(col >= 2);
      CHECK(col <= ncols);
    }
  }
  CHECK(scripts >= 3);  // flow, functionals, transport at minimum
}

TEST_CASE("digests are stable and canonical") {
  CHECK(digest_hex("") == "cbf29ce484222325");
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(digest_hex("ab") != digest_hex("ba"));
  const Json j1{{"b", 1}, {"a", 2}};
  const Json j2{{"a", 2}, {"b", 1}};
  CHECK(digest_of(j1) == digest_of(j2));
  CHECK(code_version().find("riccilab") != std::string::npos);
}

TEST_CASE("thread-count variable is parsed defensively") {
  const char* saved = std::getenv("RICCILAB_THREADS");
  const std::string keep = saved ? saved : "";

  unsetenv("RICCILAB_THREADS");
  CHECK(env_thread_count(7) == 7);
  setenv("RICCILAB_THREADS", "abc", 1);
  CHECK(env_thread_count(7) == 7);
  setenv("RICCILAB_THREADS", "16", 1);
  CHECK(env_thread_count(7) == 16);
  setenv("RICCILAB_THREADS", "200", 1);
  CHECK(env_thread_count(7) == 64);
  setenv("RICCILAB_THREADS", "0", 1);
  CHECK(env_thread_count(7) == 7);  // nonpositive counts are ignored

  if (saved)
    setenv("RICCILAB_THREADS", keep.c_str(), 1);
  else
    unsetenv("RICCILAB_THREADS");
}
