// Command-line laboratory driver: scenario pipelines (flow, backward
// diffusions, functional panels, transport), the verification suite, and
// artifact export.  Exit code 0 means every enabled check passed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "riccilab/acceptance.hpp"
#include "riccilab/harness.hpp"
#include "riccilab/json_io.hpp"

namespace {

riccilab::ScenarioConfig load_config(const std::string& path, const std::string& out_dir,
                                     long long seed, bool has_seed) {
  riccilab::ScenarioConfig cfg =
      riccilab::scenario_from_json(riccilab::read_json_file(path));
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (has_seed) cfg.seed = static_cast<unsigned long long>(seed);
  return cfg;
}

int report(const riccilab::RunManifest& man, const std::string& dir) {
  for (const auto& c : man.checks)
    std::printf("%s  %s (value %.6g, require %s %.6g)\n", c.passed ? "ok  " : "FAIL",
                c.name.c_str(), c.value, c.relation.c_str(), c.threshold);
  for (const auto& e : man.errors)
    std::printf("error [%s]: %s\n", e.context.c_str(), e.message.c_str());
  std::printf("manifest: %s/manifest.json (config %s, output %s)\n", dir.c_str(),
              man.config_digest.c_str(), man.output_digest.c_str());
  const bool ok = man.all_passed();
  std::printf("%s: %s\n", man.command.c_str(), ok ? "ALL CHECKS PASSED" : "FAILURES");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for normalized intrinsic curvature flow,\n"
               "backward diffusions, entropy functionals, and optimal transport"};
  app.require_subcommand(1);

  std::string config_path, out_dir, level = "fast", format = "all";
  long long seed = 0;
  bool deterministic = false;

  const auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "scenario configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    cmd->add_option("--seed", seed, "random seed (overrides the config)");
    cmd->add_flag("--deterministic", deterministic,
                  "single-threaded, byte-reproducible outputs");
    return cmd;
  };

  auto* c_flow = add_common(app.add_subcommand("flow", "forward normalized flow"), true);
  auto* c_per = add_common(
      app.add_subcommand("perelman", "conjugate-heat run and entropy panel"), true);
  auto* c_fp = add_common(
      app.add_subcommand("fokker-planck", "drift-diffusion run and decay panel"), true);
  auto* c_cmp = add_common(
      app.add_subcommand("compare-perelman", "comparison identities of the two diffusions"),
      true);
  auto* c_tra = add_common(
      app.add_subcommand("transport", "transport distances and inequality panel"), true);
  auto* c_ent = add_common(
      app.add_subcommand("entropy-report", "functional table along the coupled run"), true);
  auto* c_ver = add_common(app.add_subcommand("verify", "verification suite"), false);
  c_ver->add_option("--level", level, "fast (closed forms) or full (numbered criteria)")
      ->check(CLI::IsMember({"fast", "full"}));
  auto* c_exp = add_common(app.add_subcommand("export", "re-emit artifacts of a stored run"),
                           true);
  c_exp->add_option("--format", format, "csv, json, plot, or all")
      ->check(CLI::IsMember({"csv", "json", "plot", "all"}));

  CLI11_PARSE(app, argc, argv);

  try {
    bool has_seed = false;
    for (const CLI::App* sub : app.get_subcommands())
      if (sub->count("--seed") > 0) has_seed = true;
    if (c_ver->parsed()) {
      riccilab::AcceptanceOptions options;
      options.level = level;
      options.threads = deterministic ? 1 : riccilab::env_thread_count(4);
      const auto results = riccilab::run_acceptance(options);
      const std::string text = riccilab::format_acceptance(results, true);
      std::fputs(text.c_str(), stdout);
      const bool ok = riccilab::acceptance_passed(results);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream txt(out_dir + "/verify.txt");
        txt << text << (ok ? "ALL PASSED\n" : "FAILURES\n");
        riccilab::Json j;
        j["level"] = level;
        j["passed"] = ok;
        riccilab::Json arr = riccilab::Json::array();
        for (const auto& r : results) {
          riccilab::Json cj;
          cj["id"] = r.id;
          cj["name"] = r.name;
          cj["passed"] = r.passed();
          cj["seconds"] = r.seconds;
          riccilab::Json checks = riccilab::Json::array();
          for (const auto& c : r.checks) {
            riccilab::Json one;
            one["name"] = c.name;
            one["passed"] = c.passed;
            one["value"] = c.value;
            one["relation"] = c.relation;
            one["threshold"] = c.threshold;
            checks.push_back(one);
          }
          cj["checks"] = checks;
          arr.push_back(cj);
        }
        j["criteria"] = arr;
        std::ofstream js(out_dir + "/verify.json");
        js << j.dump(2) << "\n";
      }
      std::printf("verify (%s): %s\n", level.c_str(), ok ? "ALL CHECKS PASSED" : "FAILURES");
      return ok ? 0 : 1;
    }

    const riccilab::ScenarioConfig cfg = load_config(config_path, out_dir, seed, has_seed);
    riccilab::RunManifest man;
    if (c_flow->parsed()) man = riccilab::command_flow(cfg);
    else if (c_per->parsed()) man = riccilab::command_perelman(cfg);
    else if (c_fp->parsed()) man = riccilab::command_fokker_planck(cfg);
    else if (c_cmp->parsed()) man = riccilab::command_compare(cfg);
    else if (c_tra->parsed()) man = riccilab::command_transport(cfg);
    else if (c_ent->parsed()) man = riccilab::command_entropy_report(cfg);
    else if (c_exp->parsed()) man = riccilab::command_export(cfg, format);
    return report(man, cfg.out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
