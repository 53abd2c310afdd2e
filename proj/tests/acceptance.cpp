// Runs every shipped preset and prints one verdict line per acceptance criterion.

#include "bergman/bergman.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>

using namespace bergman;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::vector<std::string> presets;
  std::function<bool(const Check&)> select;
};

bool is_trend(const Check& c) { return c.name.find("trend_ok") != std::string::npos; }

}  // namespace

int main() {
  const std::string dir = BERGMAN_PRESET_DIR;
  auto all = [](const Check&) { return true; };
  auto no_trend = [](const Check& c) { return !is_trend(c); };
  const std::vector<Criterion> criteria = {
      {1, "reproducing property", {"c01_reproducing"}, all},
      {2, "kernel closed form", {"c02_kernel"}, all},
      {3, "radial commutativity", {"c03_radial"}, no_trend},
      {4, "hyperbolic and parabolic commutativity", {"c04_hyperbolic_parabolic"}, all},
      {5, "real form SO0(2,1)", {"c05_real_form"}, all},
      {6, "K-invariant commutativity on the 2x2 matrix ball", {"c06_k_invariant"}, all},
      {7, "torus census", {"c07_census"}, all},
      {8, "torus non-commutativity", {"c08_torus"}, no_trend},
      {9, "commutant criterion", {"c09_commutant"}, all},
      {10, "intertwining and averaging", {"c10_intertwine", "c10_average"}, all},
      {11, "Toeplitz eigenvalue law", {"c11_norms"}, all},
      {12, "truncation trend", {"c03_radial", "c08_torus"}, is_trend},
  };

  std::map<std::string, Report> reports;
  std::map<std::string, double> seconds;
  int failures = 0;
  for (const auto& c : criteria) {
    bool ok = true;
    std::size_t used = 0;
    std::string detail;
    double elapsed = 0.0;
    for (const auto& p : c.presets) {
      if (!reports.count(p)) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          reports[p] = run(parse_config(load_config_file(dir + "/" + p + ".toml")));
        } catch (const Error& e) {
          Report r;
          r.experiment = "config";
          r.name = p;
          r.error = std::make_pair(std::string(to_string(e.code())), std::string(e.what()));
          reports[p] = r;
        }
        seconds[p] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      elapsed += seconds[p];
      const Report& r = reports[p];
      if (r.error) {
        ok = false;
        detail += " " + p + ": " + r.error->second;
      }
      for (const auto& chk : r.checks) {
        if (!c.select(chk)) continue;
        ++used;
        if (!chk.pass) {
          ok = false;
          detail += " " + chk.name;
        }
      }
    }
    if (used == 0) ok = false;
    failures += !ok;
    std::printf("criterion %2d  %-4s  %-50s  checks %3zu  %.1fs%s\n", c.number, ok ? "PASS" : "FAIL", c.title.c_str(),
                used, elapsed, detail.empty() ? "" : ("  failed:" + detail).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures ? 1 : 0;
}
