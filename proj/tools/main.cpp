// cryobayes: latent Gaussian inference for glaciological source separation
// and spatial prediction. Batch CLI over a JSON run config.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O failure.

#include <chrono>
#include <iostream>

#include "CLI11.hpp"

#include "cryobayes/config.hpp"
#include "cryobayes/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cryobayes: sparse latent-Gaussian inference for glaciology"};
  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  int threads_override = 0;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--seed", seed_override, "Override the config seed");
  app.add_option("--threads", threads_override, "Override the thread count");
  app.add_option("--out", out_override, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  using cryobayes::RunMode;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    cryobayes::RunConfig config = cryobayes::parse_config(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) config.threads = threads_override;
    if (!out_override.empty()) config.output_dir = out_override;

    cryobayes::OutputDir out(config.output_dir);
    switch (config.mode) {
      case RunMode::SmbStudy: cryobayes::run_smb_mode(config, out); break;
      case RunMode::RatesStudy: cryobayes::run_rates_mode(config, out); break;
      case RunMode::Fit: cryobayes::run_fit_mode(config, out); break;
      case RunMode::Simulate: cryobayes::run_simulate_mode(config, out); break;
      case RunMode::Transport: cryobayes::run_transport_mode(config, out); break;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.write_manifest(cryobayes::echo_config(config), config.seed, wall, config.threads);
    std::cout << "done: " << out.path() << " (" << wall << " s)\n";
    return 0;
  } catch (const cryobayes::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const cryobayes::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cryobayes::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
