#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "slepwave/pipeline.hpp"

namespace {

using slepwave::PipelineConfig;

// Config keys exposed as flags, flag name -> config key.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"-L,--bandlimit", "L"},
    {"--kind", "kind"},
    {"--opening-deg", "opening_deg"},
    {"--center-theta-deg", "center_theta_deg"},
    {"--center-phi-deg", "center_phi_deg"},
    {"--threshold-field", "threshold_field"},
    {"--mask-file", "mask_file"},
    {"--lambda", "lambda"},
    {"--J0", "J0"},
    {"--n-sigma", "n_sigma"},
    {"--snr-db", "snr_db"},
    {"--seed", "seed"},
    {"--cache-dir", "cache_dir"},
    {"--output-dir", "output_dir"},
    {"--signal", "signal"},
    {"--smoothing-fwhm-deg", "smoothing_fwhm_deg"},
    {"--truncation", "truncation"},
};

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& [flag, key] : kConfigFlags) {
      app.add_option(flag, values[key], "config key " + key);
    }
  }

  PipelineConfig resolve(const CLI::App& app) const {
    PipelineConfig cfg;
    if (!config_file.empty()) cfg = slepwave::load_config(config_file);
    for (const auto& [flag, key] : kConfigFlags) {
      const auto name = flag.substr(flag.rfind(',') == std::string::npos ? 0 : flag.rfind(',') + 1);
      if (app.get_option(name)->count() > 0) {
        try {
          slepwave::apply_setting(cfg, key, values.at(key), "--" + key);
        } catch (const slepwave::DataError& e) {
          throw std::invalid_argument(e.what());
        }
      }
    }
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slepian wavelets on regions of the sphere"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    ConfigFlags flags;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const std::string& name, const std::string& help) -> Sub& {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.flags.attach(*s.app);
    return s;
  };

  add("basis", "build or load the Slepian basis and print N and the leading eigenvalues");
  add("shannon", "print the region area and Shannon number");
  add("tiling", "write the filter bank for the configured tiling");
  add("analyze", "wavelet analysis of a signal using a cached basis");
  Sub& synth = add("synth", "reconstruct Slepian coefficients from analysis output");
  std::string input_dir;
  synth.app->add_option("--input-dir", input_dir, "directory written by analyze")->required();
  add("denoise", "add noise at a target SNR and hard-threshold denoise");
  Sub& sht = add("sht", "spherical harmonic transform between field and coefficient files");
  std::string input, output;
  bool inverse = false;
  sht.app->add_option("--input", input, "input file")->required();
  sht.app->add_option("--output", output, "output file")->required();
  sht.app->add_flag("--inverse", inverse, "coefficients to field");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? slepwave::exit_ok : slepwave::exit_usage;
  }

  return slepwave::run_guarded(
      [&] {
        for (auto& [name, sub] : subs) {
          if (!sub.app->parsed()) continue;
          const PipelineConfig cfg = sub.flags.resolve(*sub.app);
          if (name == "basis") slepwave::cmd_basis(cfg, std::cout, std::cerr);
          else if (name == "shannon") slepwave::cmd_shannon(cfg, std::cout);
          else if (name == "tiling") slepwave::cmd_tiling(cfg, std::cout);
          else if (name == "analyze") slepwave::cmd_analyze(cfg, std::cout, std::cerr);
          else if (name == "synth") slepwave::cmd_synth(cfg, input_dir, std::cout);
          else if (name == "denoise") slepwave::cmd_denoise(cfg, std::cout, std::cerr);
          else if (name == "sht") slepwave::cmd_sht(input, output, inverse, std::cout);
        }
      },
      std::cerr);
}
