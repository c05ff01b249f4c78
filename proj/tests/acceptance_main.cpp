// Acceptance driver: runs the numbered verification suite (or the fast
// closed-form subset) and prints one pass/fail line per criterion.
// Exit code 0 iff every check of every criterion passed.

#include <cstdio>
#include <cstring>
#include <string>

#include "riccilab/acceptance.hpp"

int main(int argc, char** argv) {
  riccilab::AcceptanceOptions options;
  options.threads = riccilab::env_thread_count(4);
  bool verbose = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--level" && i + 1 < argc) {
      options.level = argv[++i];
    } else if (arg == "--tolerance-scale" && i + 1 < argc) {
      options.tolerance_scale = std::atof(argv[++i]);
    } else if (arg == "--threads" && i + 1 < argc) {
      options.threads = std::atoi(argv[++i]);
    } else if (arg == "--verbose" || arg == "-v") {
      verbose = true;
    } else if (arg == "--help" || arg == "-h") {
      std::printf(
          "usage: %s [--level fast|full] [--tolerance-scale X] [--threads N] [--verbose]\n",
          argv[0]);
      return 0;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", arg.c_str());
      return 2;
    }
  }
  try {
    const auto results = riccilab::run_acceptance(options);
    std::fputs(riccilab::format_acceptance(results, verbose).c_str(), stdout);
    const bool ok = riccilab::acceptance_passed(results);
    std::printf("acceptance: %s\n", ok ? "ALL PASSED" : "FAILURES");
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return 2;
  }
}
