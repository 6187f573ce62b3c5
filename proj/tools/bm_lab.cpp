#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bmlab/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Matrix-weighted Bourgain-Morrey numerics"};
  std::string task;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  app.add_option("task", task, "norm | reduce | apclass | avgop | compactness | counterexample | embeddings")
      ->required();
  app.add_option("--config", config_path, "JSON scenario file")->required();
  app.add_option("--out", out_dir, "output directory for report.json and CSV curves");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--workers", workers, "worker threads (fallback: BM_LAB_WORKERS)")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bm::kExitConfig;
  }

  if (!workers) {
    if (const char* env = std::getenv("BM_LAB_WORKERS")) {
      try {
        const long v = std::stol(env);
        if (v <= 0) throw std::invalid_argument("nonpositive");
        workers = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        std::cerr << "bm-lab: BM_LAB_WORKERS must be a positive integer\n";
        return bm::kExitConfig;
      }
    }
  }

  bm::Json config;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "bm-lab: cannot open " << config_path << "\n";
      return bm::kExitConfig;
    }
    try {
      in >> config;
    } catch (const bm::Json::parse_error& e) {
      std::cerr << "bm-lab: " << config_path << ": " << e.what() << "\n";
      return bm::kExitConfig;
    }
  }

  const bm::ScenarioOutput out = bm::run_scenario(config, {task, seed, workers});
  try {
    bm::emit_report(out, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "bm-lab: " << e.what() << "\n";
    return bm::kExitNumeric;
  }
  const std::string status = out.report.value("status", "");
  if (out.exit_code != bm::kExitOk) std::cerr << "bm-lab: " << status << ": " << out.report.value("error", "") << "\n";
  else std::cout << task << ": " << status << " (" << out_dir << "/report.json)\n";
  return out.exit_code;
}
