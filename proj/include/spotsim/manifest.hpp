#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spotsim/orchestrator.hpp"
#include "spotsim/revpred.hpp"

namespace spotsim::manifest {

inline constexpr const char* kConfigEnvVar = "SPOTSIM_CONFIG";

// Resolved run configuration: config-file values with command-line overrides
// already applied. The hash of the resolved form is embedded in every output
// so identical manifests reproduce identical files.
struct RunManifest {
  std::filesystem::path config_path;  // empty when running on pure defaults
  std::uint64_t seed = 1;

  orchestrator::SimConfig sim;
  revpred::TrainConfig train;
  long dataset_stride = 60;
  bool literal_trim_denominator = false;

  std::filesystem::path trace_dir;
  std::filesystem::path bundle;
  std::filesystem::path predictor_dir;
  std::filesystem::path output_dir;
  std::filesystem::path catalog;

  // Canonical JSON of the resolved configuration.
  std::string resolved_json() const;
  std::string config_hash() const;
};

// Loads a config file (nested key/value JSON); missing keys keep defaults.
RunManifest load_config(const std::filesystem::path& path);

// Manifest from defaults plus the environment-variable config when set.
RunManifest default_manifest();

void require_exists(const std::filesystem::path& path, const std::string& what);

}  // namespace spotsim::manifest
