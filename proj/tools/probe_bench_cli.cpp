// probe-bench: leave-one-out probing with permutation significance.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "probe_bench/commands.hpp"
#include "probe_bench/errors.hpp"
#include "probe_bench/parallel.hpp"

namespace pb = probe_bench;

int main(int argc, char** argv) {
  CLI::App app{"Frozen-embedding probe evaluation with LOOCV and permutation tests"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<int> n_perm;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run the encoder x probe study described by a config file");
  run->add_option("--config", config_path, "Study config (key = value)")->required();
  run->add_option("--n-perm", n_perm, "Label permutations per cell");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--workers", workers, "Worker threads (default: PROBE_BENCH_WORKERS or all cores)");
  run->add_option("--out", out_dir, "Output directory");

  std::string images;
  std::string manifest;
  std::string out_file;
  auto* extract = app.add_subcommand("extract-classical", "Compute the 14-dim classical baseline from images");
  extract->add_option("--images", images, "Image directory")->required();
  extract->add_option("--manifest", manifest, "Manifest CSV")->required();
  extract->add_option("--out", out_file, "Output embedding CSV")->required();

  long long gauss_n = 0;
  long long gauss_d = 0;
  std::uint64_t gauss_seed = 0;
  auto* gaussian = app.add_subcommand("gaussian", "Write i.i.d. standard normal control embeddings");
  gaussian->add_option("--n", gauss_n, "Rows")->required();
  gaussian->add_option("--d", gauss_d, "Dimension")->required();
  gaussian->add_option("--seed", gauss_seed, "Seed")->required();
  gaussian->add_option("--out", out_file, "Output embedding CSV")->required();

  std::string embeddings;
  std::string perturb_out;
  std::optional<std::string> probe_config;
  auto* perturb = app.add_subcommand("perturb", "Eye-clean margin drop over clean/perturbed pairs");
  perturb->add_option("--manifest", manifest, "Paired manifest CSV")->required();
  perturb->add_option("--embeddings", embeddings, "Embeddings covering both sides of every pair")->required();
  perturb->add_option("--out", perturb_out, "Output directory")->required();
  perturb->add_option("--probe-config", probe_config, "logistic.* settings file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      auto cfg = pb::load_study_config(config_path);
      if (n_perm) cfg.n_perm = *n_perm;
      if (seed) cfg.seed = *seed;
      if (workers) cfg.workers = *workers;
      if (out_dir) cfg.out_dir = *out_dir;
      pb::cmd_run(cfg, std::cout);
    } else if (*extract) {
      pb::cmd_extract_classical(images, manifest, out_file);
    } else if (*gaussian) {
      if (gauss_n < 1 || gauss_d < 1) throw pb::ConfigError("gaussian needs --n >= 1 and --d >= 1");
      pb::cmd_gaussian(gauss_n, gauss_d, gauss_seed, out_file);
    } else if (*perturb) {
      std::optional<std::filesystem::path> pc;
      if (probe_config) pc = *probe_config;
      pb::cmd_perturb(manifest, embeddings, perturb_out, pc, std::cout);
    }
  } catch (const pb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pb::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const pb::ProbeError& e) {
    std::cerr << "probe failure: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
