#include "bdris/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bdris/linalg.hpp"

namespace bdris {

using nlohmann::json;

int ScenarioConfig::ris_elements() const {
  int m = 0;
  for (const auto& s : surfaces) m += s.elements;
  return m;
}

std::vector<int> ScenarioConfig::surface_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(surfaces.size());
  for (const auto& s : surfaces) sizes.push_back(s.elements);
  return sizes;
}

void ScenarioConfig::set_tx_power_dbm(double dbm) {
  tx_power_mw.assign(static_cast<std::size_t>(num_cells), dbm_to_mw(dbm));
}

void ScenarioConfig::set_ris_elements(int m) {
  if (surfaces.size() != 1) {
    throw ConfigError("set_ris_elements: only valid for a single surface");
  }
  surfaces.front().elements = m;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (num_cells < 1 || users_per_cell < 1 || tx_antennas < 1 ||
      rx_antennas < 1 || num_streams < 1) {
    fail("cell/user/antenna/stream counts must be positive");
  }
  if (num_streams > std::min(tx_antennas, rx_antennas)) {
    fail("num_streams must not exceed min(tx_antennas, rx_antennas)");
  }
  if (tx_power_mw.size() != static_cast<std::size_t>(num_cells)) {
    fail("tx power list must have one entry per cell");
  }
  for (double p : tx_power_mw) {
    if (!std::isfinite(p) || p < 0.0) fail("tx powers must be finite");
  }
  if (!std::isfinite(noise_power_mw) || noise_power_mw <= 0.0) {
    fail("noise power must be finite and positive");
  }
  if (weights.size() != static_cast<std::size_t>(num_users())) {
    fail("weights must have one entry per user");
  }
  for (double a : weights) {
    if (!std::isfinite(a) || a < 0.0) fail("weights must be nonnegative");
  }
  if (bs_positions.size() != static_cast<std::size_t>(num_cells)) {
    fail("bs_positions must have one entry per cell");
  }
  if (user_disk_centers.size() != static_cast<std::size_t>(num_cells)) {
    fail("user_disk_centers must have one entry per cell");
  }
  if (!(user_disk_radius >= 0.0)) fail("user_disk_radius must be >= 0");
  if (surfaces.empty()) fail("at least one RIS surface is required");
  for (const auto& s : surfaces) {
    if (s.elements < 1) fail("every RIS surface needs at least one element");
  }
  if (!(pathloss_exp_direct > 0.0) || !(pathloss_exp_ris > 0.0)) {
    fail("path loss exponents must be positive");
  }
  if (!std::isfinite(pathloss_ref_db)) fail("pathloss_ref_db must be finite");
  if (!(rician_factor >= 0.0)) fail("rician_factor must be nonnegative");
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.set_tx_power_dbm(30.0);
  c.noise_power_mw = dbm_to_mw(-104.0);
  c.weights.assign(static_cast<std::size_t>(c.num_users()), 1.0);
  c.bs_positions = {Point(0.0, 0.0), Point(600.0, 0.0)};
  c.surfaces = {RisSurface{Point(300.0, 0.0), 20}};
  c.user_disk_centers = {Point(280.0, 0.0), Point(320.0, 0.0)};
  return c;
}

ScenarioConfig distributed_scenario(const ScenarioConfig& base) {
  const int m = base.ris_elements();
  if (m % 2 != 0) {
    throw ConfigError("distributed deployment requires an even element count");
  }
  ScenarioConfig c = base;
  c.surfaces = {RisSurface{Point(5.0, 0.0), m / 2},
                RisSurface{Point(595.0, 0.0), m / 2}};
  return c;
}

namespace {

Point parse_point(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(key + ": expected a [x, y] pair");
  }
  return Point(j[0].get<double>(), j[1].get<double>());
}

std::vector<Point> parse_points(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError(key + ": expected a list of [x, y]");
  std::vector<Point> pts;
  for (const auto& e : j) pts.push_back(parse_point(e, key));
  return pts;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  ScenarioConfig c = default_scenario();
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  try {
    if (doc.contains("cells")) {
      const auto& j = doc["cells"];
      read_if(j, "count", c.num_cells);
      read_if(j, "users_per_cell", c.users_per_cell);
    }
    if (doc.contains("antennas")) {
      const auto& j = doc["antennas"];
      read_if(j, "tx", c.tx_antennas);
      read_if(j, "rx", c.rx_antennas);
      read_if(j, "streams", c.num_streams);
    }
    double tx_dbm = 30.0;
    std::vector<double> tx_list;
    double noise_dbm = -104.0;
    if (doc.contains("power")) {
      const auto& j = doc["power"];
      if (j.contains("tx_dbm")) {
        if (j["tx_dbm"].is_array()) {
          tx_list = j["tx_dbm"].get<std::vector<double>>();
        } else {
          tx_dbm = j["tx_dbm"].get<double>();
        }
      }
      read_if(j, "noise_dbm", noise_dbm);
    }
    if (tx_list.empty()) {
      c.set_tx_power_dbm(tx_dbm);
    } else {
      c.tx_power_mw.clear();
      for (double p : tx_list) c.tx_power_mw.push_back(dbm_to_mw(p));
    }
    c.noise_power_mw = dbm_to_mw(noise_dbm);

    c.weights.assign(static_cast<std::size_t>(c.num_users()), 1.0);
    if (doc.contains("weights")) {
      const auto& j = doc["weights"];
      if (j.is_number()) {
        c.weights.assign(static_cast<std::size_t>(c.num_users()),
                         j.get<double>());
      } else {
        c.weights.clear();
        for (const auto& row : j) {
          for (const auto& a : row) c.weights.push_back(a.get<double>());
        }
      }
    }
    if (doc.contains("geometry")) {
      const auto& j = doc["geometry"];
      if (j.contains("bs_positions")) {
        c.bs_positions = parse_points(j["bs_positions"], "bs_positions");
      }
      if (j.contains("user_disk_centers")) {
        c.user_disk_centers =
            parse_points(j["user_disk_centers"], "user_disk_centers");
      }
      read_if(j, "user_disk_radius", c.user_disk_radius);
    }
    if (doc.contains("ris")) {
      const auto& j = doc["ris"];
      if (j.contains("surfaces")) {
        c.surfaces.clear();
        for (const auto& s : j["surfaces"]) {
          RisSurface surf;
          surf.position = parse_point(s.at("position"), "ris.position");
          surf.elements = s.at("elements").get<int>();
          c.surfaces.push_back(surf);
        }
      }
    }
    if (doc.contains("propagation")) {
      const auto& j = doc["propagation"];
      read_if(j, "pathloss_ref_db", c.pathloss_ref_db);
      read_if(j, "pathloss_exp_direct", c.pathloss_exp_direct);
      read_if(j, "pathloss_exp_ris", c.pathloss_exp_ris);
      read_if(j, "rician_factor", c.rician_factor);
    }
    read_if(doc, "rng_seed", c.rng_seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario schema error: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open scenario file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace bdris
