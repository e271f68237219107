// emhd <kind> --config <path> [--seed S] [--out DIR] [--threads K]

#include "emhd/errors.hpp"
#include "emhd/harness.hpp"
#include "emhd/io_util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

void report_error(const std::exception& e, const std::filesystem::path& out_dir) {
  const auto j = emhd::error_json(e);
  std::cerr << j.dump() << '\n';
  try {
    emhd::write_atomically(out_dir / "error.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  } catch (...) {
    // stderr already has it
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electron-MHD spectral lab"};
  std::string kind, config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("kind", kind, "simulate | picard | montecarlo | verify | inflate")->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::filesystem::path err_dir = out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(out_dir);
  try {
    emhd::ExperimentConfig cfg = emhd::load_config(config_path);
    const auto cli_kind = emhd::parse_kind(kind);
    cfg.kind = cli_kind;
    if (*seed_opt) cfg.seed = seed;
    if (*out_opt) cfg.output_dir = out_dir;
    if (*threads_opt) cfg.threads = threads;
    err_dir = cfg.output_dir;
    for (const auto& v : emhd::validate_config(cfg))
      if (!v.fatal) std::cerr << "warning: " << v.field << ": " << v.message << '\n';
    const emhd::RunResult res = emhd::run_experiment(cfg);
    std::cout << res.summary.dump(2) << '\n';
    return res.exit_code;
  } catch (const std::exception& e) {
    report_error(e, err_dir);
    return emhd::exit_code_for(e);
  }
}
