#include <fstream>
#include <sstream>

#include "ips/errors.hpp"
#include "ips/experiments.hpp"
#include "json.hpp"

namespace ips {

namespace {

using nlohmann::json;

std::vector<double> grid_from(const json& run, const char* scalar_key, const char* grid_key,
                              double fallback) {
  if (run.contains(grid_key)) return run.at(grid_key).get<std::vector<double>>();
  if (run.contains(scalar_key)) return {run.at(scalar_key).get<double>()};
  return {fallback};
}

Site site_from(const json& arr, int d) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != d)
    throw config_error("site must be an array of d coordinates");
  Site s;
  for (int i = 0; i < d; ++i) s.c[i] = arr.at(static_cast<std::size_t>(i)).get<std::int32_t>();
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed configuration document: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.spec = parse_rate_spec(text);
  try {
    const json run = doc.value("run", json::object());
    cfg.m = run.value("m", 1);
    cfg.t_grid = grid_from(run, "T", "T_grid", 1.0);
    cfg.h_grid = grid_from(run, "h", "h_grid", 0.0);
    cfg.reps = run.value("reps", std::uint64_t{10000});
    cfg.seed = run.value("seed", std::uint64_t{1});
    cfg.threads = run.value("threads", 1);

    const json output = doc.value("output", json::object());
    cfg.out_dir = output.value("dir", std::string{});
    cfg.format = output.value("format", std::string{"csv"});
    if (cfg.format != "csv" && cfg.format != "json")
      throw config_error("output.format must be csv or json");

    cfg.russo_samples = run.value("russo_samples", std::uint64_t{100000});
    const json osss = doc.value("osss", json::object());
    cfg.osss_t_points = osss.value("t_points", 8);
    cfg.osss_infl_reps = osss.value("influence_reps", std::uint64_t{2000});
    const json sharp = doc.value("sharpness", json::object());
    cfg.sharp_eps = sharp.value("eps", 0.1);
    cfg.noise_floor_factor = sharp.value("noise_floor_factor", 10.0);
    const json diff = doc.value("diff_ineq", json::object());
    cfg.diff_ineq_mc = diff.value("monte_carlo", false);
    const json brw = doc.value("brw", json::object());
    cfg.brw_reps = brw.value("reps", cfg.reps);
    const json tail = doc.value("tail", json::object());
    cfg.tail_reps = tail.value("reps", cfg.reps);
    cfg.epsilon = run.value("epsilon", 0.0);

    if (doc.contains("pivotal")) {
      const json piv = doc.at("pivotal");
      cfg.pivotal_query.x = site_from(piv.at("x"), cfg.spec.d);
      cfg.pivotal_query.t = piv.at("t").get<double>();
      cfg.pivotal_query.u = piv.at("u").get<double>();
      cfg.pivotal_query.T = cfg.t_grid.back();
      cfg.pivotal_query.m = cfg.m;
      cfg.pivotal_query.h = cfg.h_grid.front();
    }
    if (doc.contains("explore")) {
      const json ex = doc.at("explore");
      if (ex.contains("sites")) {
        for (const auto& s : ex.at("sites")) cfg.explore_sites.push_back(site_from(s, cfg.spec.d));
      }
      if (ex.contains("times")) cfg.explore_times = ex.at("times").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("bad configuration: ") + e.what());
  }

  validate_grids(cfg);
  cfg.config_text = doc.dump();  // canonical: object keys are sorted
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

}  // namespace ips
