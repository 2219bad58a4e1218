// Runs the eight acceptance criteria and prints one PASS/FAIL line for each.
// Criterion 7 additionally runs the verify command twice and compares the
// written reports byte for byte.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "slowfast/acceptance.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_verify(const fs::path& out) {
  const std::string command =
      std::string(SLOWFAST_CLI_PATH) + " verify --out '" + out.string() + "' > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  slowfast::AcceptanceSettings settings;
  const auto result = slowfast::run_acceptance(settings);
  bool all = true;
  for (const auto& r : result.results) {
    bool passed = r.passed;
    std::string detail = r.detail;
    if (r.id == 7) {
      const fs::path base = fs::current_path() / "acceptance_verify";
      fs::remove_all(base);
      const int first = run_verify(base / "first");
      const int second = run_verify(base / "second");
      const std::string a = slurp(base / "first" / "acceptance_report.txt");
      const std::string b = slurp(base / "second" / "acceptance_report.txt");
      const bool identical = !a.empty() && a == b;
      passed = passed && identical;
      detail += "; verify exit codes " + std::to_string(first) + "," + std::to_string(second) +
                " report_bytes=" + std::to_string(a.size()) +
                " byte_identical=" + (identical ? "true" : "false");
    }
    all = all && passed;
    std::printf("criterion %d (%s): %s [%.1fs] %s\n", r.id, r.name.c_str(), passed ? "PASS" : "FAIL",
                r.seconds, detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
