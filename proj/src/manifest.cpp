#include "ips/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/experiments.hpp"
#include "ips/text.hpp"
#include "ips/version.hpp"

namespace ips {

namespace fs = std::filesystem;

std::string Manifest::to_json() const {
  std::ostringstream os;
  os << "{\n";
  os << "  \"config_hash\": \"" << config_hash << "\",\n";
  os << "  \"seed\": " << seed << ",\n";
  os << "  \"version\": \"" << version << "\",\n";
  os << "  \"outputs\": {";
  for (std::size_t i = 0; i < checksums.size(); ++i) {
    os << (i ? ", " : "") << "\"" << checksums[i].first << "\": \"" << checksums[i].second
       << "\"";
  }
  os << "}\n}\n";
  return os.str();
}

Manifest make_manifest(const ExperimentConfig& cfg,
                       const std::vector<std::pair<std::string, std::string>>& files) {
  Manifest m;
  m.config_hash = hex64(fnv1a64(cfg.config_text));
  m.seed = cfg.seed;
  m.version = kVersion;
  for (const auto& [name, content] : files) {
    m.checksums.push_back({name, hex64(fnv1a64(content))});
  }
  return m;
}

Manifest persist_run(const ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& files) {
  if (cfg.out_dir.empty()) throw io_error("no output directory configured");
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw io_error("output directory does not exist: " + cfg.out_dir);

  const Manifest m = make_manifest(cfg, files);
  auto write_file = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw io_error("write failed for " + (dir / name).string());
  };
  for (const auto& [name, content] : files) write_file(name, content);
  write_file("manifest.json", m.to_json());
  return m;
}

}  // namespace ips
