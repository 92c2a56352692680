#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ips {

struct ExperimentConfig;

struct Manifest {
  std::string config_hash;  // hex FNV-1a of the canonical config
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::pair<std::string, std::string>> checksums;  // file -> hex hash
  std::string to_json() const;
};

Manifest make_manifest(const ExperimentConfig& cfg,
                       const std::vector<std::pair<std::string, std::string>>& files);

// Writes every output file plus manifest.json into cfg.out_dir. The
// directory must already exist; nothing is written when it does not, and the
// manifest carries no timestamps so a rerun is byte-identical.
Manifest persist_run(const ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace ips
