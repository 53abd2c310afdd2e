// bergman: run experiment configs and compare exported matrices.

#include "bergman/bergman.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#ifndef BERGMAN_PRESET_DIR
#define BERGMAN_PRESET_DIR "presets"
#endif

namespace {

using namespace bergman;

std::string resolve_preset(const std::string& name) {
  namespace fs = std::filesystem;
  const std::string file = name.ends_with(".toml") ? name : name + ".toml";
  for (const fs::path dir : {fs::path("presets"), fs::path(BERGMAN_PRESET_DIR)}) {
    const auto p = dir / file;
    if (fs::exists(p)) return p.string();
  }
  fail(ErrorCode::config, "unknown preset '" + name + "'");
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(out, text.empty() || text.back() == '\n' ? text : text + "\n");
  }
}

void print_error(const Error& e) {
  std::cerr << canonical_json({{"error", {{"code", std::string(to_string(e.code())), }, {"message", e.what()}}}}) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toeplitz operators on weighted Bergman spaces: experiment runner"};
  app.require_subcommand(0, 1);

  std::string config, preset, out, format = "json", export_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> cutoff;
  auto* group = app.add_option_group("source");
  group->add_option("--config", config, "experiment config (TOML)");
  group->add_option("--preset", preset, "named preset under presets/");
  group->require_option(0, 1);
  app.add_option("--out", out, "output file (default stdout)");
  app.add_option("--format", format, "json, csv or human")->check(CLI::IsMember({"json", "csv", "human"}));
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--cutoff", cutoff, "override every case cutoff");
  app.add_option("--export-dir", export_dir, "write assembled matrices as JSON here");

  auto* diff = app.add_subcommand("diff", "compare two exported operator matrices");
  std::string lhs, rhs;
  double tol = 1e-10;
  diff->add_option("a", lhs, "first matrix JSON")->required();
  diff->add_option("b", rhs, "second matrix JSON")->required();
  diff->add_option("--tol", tol, "entrywise tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (diff->parsed()) {
      const auto a = operator_from_json(read_json_file(lhs));
      const auto b = operator_from_json(read_json_file(rhs));
      const MatrixDiff d = diff_matrices(a, b, tol);
      emit(canonical_json(to_json(d)), out);
      return d.pass ? 0 : 1;
    }
    if (config.empty() && preset.empty()) {
      std::cerr << app.help();
      return 2;
    }
    const std::string path = config.empty() ? resolve_preset(preset) : config;
    const Json raw = apply_overrides(load_config_file(path), {seed, cutoff, export_dir});
    const ExperimentConfig cfg = parse_config(raw);
    const Report report = run(cfg, {seed, cutoff, export_dir});
    emit(report_render(report, parse_format(format)), out);
    if (report.error) std::cerr << "error: " << report.error->first << ": " << report.error->second << "\n";
    return exit_code(report);
  } catch (const Error& e) {
    print_error(e);
    return e.code() == ErrorCode::config || e.code() == ErrorCode::invalid_argument ? 2 : 1;
  } catch (const Json::exception& e) {
    print_error(Error(ErrorCode::io, e.what()));
    return 2;
  }
}
