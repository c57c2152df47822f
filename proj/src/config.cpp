#include "wgpdc/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wgpdc/errors.hpp"

namespace wgpdc {

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw config_error(std::string("config is missing ") + where + "." + key);
  return *it;
}

ModeLabel parse_label(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw config_error("mode labels are written 'm,n', got '" + s + "'");
  try {
    const int m = std::stoi(s.substr(0, comma));
    const int n = std::stoi(s.substr(comma + 1));
    if (m < 0 || n < 0) throw config_error("mode labels are non-negative");
    return ModeLabel{m, n};
  } catch (const std::invalid_argument&) {
    throw config_error("mode labels are written 'm,n', got '" + s + "'");
  }
}

}  // namespace

JsaGrid RunConfig::default_grid() const {
  const double ldeg = pump.degeneracy_nm();
  return JsaGrid::regular(ldeg - grid_half_width_nm, ldeg + grid_half_width_nm,
                          ldeg - grid_half_width_nm, ldeg + grid_half_width_nm,
                          grid_points, grid_points);
}

std::array<double, 2> RunConfig::discovery_window_nm() const {
  const double ldeg = pump.degeneracy_nm();
  return {ldeg - discovery_half_width_nm, ldeg + discovery_half_width_nm};
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig c;
  const json& wgj = need(j, "waveguide", "");
  c.waveguide.width_um = need(wgj, "width_um", "waveguide").get<double>();
  c.waveguide.depth_um = need(wgj, "depth_um", "waveguide").get<double>();
  c.waveguide.delta_n = need(wgj, "delta_n", "waveguide").get<double>();
  c.waveguide.poling.period_um =
      need(wgj, "poling_period_um", "waveguide").get<double>();
  c.waveguide.length_mm = need(wgj, "length_mm", "waveguide").get<double>();
  if (const auto it = wgj.find("orientation"); it != wgj.end()) {
    const std::string o = it->get<std::string>();
    if (o == "width-horizontal")
      c.waveguide.orientation = WaveguideSpec::Orientation::WidthHorizontal;
    else if (o == "width-vertical")
      c.waveguide.orientation = WaveguideSpec::Orientation::WidthVertical;
    else
      throw config_error("unknown waveguide orientation: " + o);
  }
  c.waveguide.validate();

  const json& pj = need(j, "pump", "");
  c.pump.center_nm = need(pj, "center_nm", "pump").get<double>();
  c.pump.fwhm_nm = need(pj, "fwhm_nm", "pump").get<double>();
  for (const auto& [key, val] : need(pj, "mode_fractions", "pump").items())
    c.pump.mode_fractions[parse_label(key)] = val.get<double>();
  c.pump.validate();

  namespace fs = std::filesystem;
  fs::path disp = need(j, "dispersion_file", "").get<std::string>();
  if (disp.is_relative()) disp = fs::path(path).parent_path() / disp;
  c.dispersion_path = disp.lexically_normal().string();
  c.dispersion = SellmeierModel::load(c.dispersion_path);

  if (const auto it = j.find("grid"); it != j.end()) {
    c.grid_points = need(*it, "points", "grid").get<int>();
    c.grid_half_width_nm = need(*it, "half_width_nm", "grid").get<double>();
    if (c.grid_points < 16 || c.grid_points > 4096)
      throw config_error("grid.points must lie in [16, 4096]");
    if (!(c.grid_half_width_nm > 0.0))
      throw config_error("grid.half_width_nm must be positive");
  }

  if (const auto it = j.find("filters"); it != j.end()) {
    const std::string shape = need(*it, "shape", "filters").get<std::string>();
    if (shape == "rectangular")
      c.filter_shape = SpectralFilter::Shape::Rectangular;
    else if (shape == "gaussian")
      c.filter_shape = SpectralFilter::Shape::Gaussian;
    else
      throw config_error("filters.shape must be rectangular or gaussian");
    c.signal_filter_fwhm_nm = need(*it, "signal_fwhm_nm", "filters").get<double>();
    c.idler_filter_fwhm_nm = need(*it, "idler_fwhm_nm", "filters").get<double>();
    if (!(c.signal_filter_fwhm_nm > 0.0) || !(c.idler_filter_fwhm_nm > 0.0))
      throw config_error("filter bandwidths must be positive");
  }

  if (const auto it = j.find("triplets"); it != j.end()) {
    c.overlap_threshold =
        need(*it, "overlap_threshold", "triplets").get<double>();
    const auto win = need(*it, "signal_window_nm", "triplets");
    if (!win.is_array() || win.size() != 2)
      throw config_error("triplets.signal_window_nm must be [lo, hi]");
    c.signal_window_nm = {win[0].get<double>(), win[1].get<double>()};
    if (!(c.signal_window_nm[0] < c.signal_window_nm[1]))
      throw config_error("triplets.signal_window_nm must be ordered");
    if (const auto d = it->find("discovery_half_width_nm"); d != it->end())
      c.discovery_half_width_nm = d->get<double>();
    if (!(c.discovery_half_width_nm > 0.0))
      throw config_error("triplets.discovery_half_width_nm must be positive");
    c.max_label.m = need(*it, "max_label_m", "triplets").get<int>();
    c.max_label.n = need(*it, "max_label_n", "triplets").get<int>();
    if (c.max_label.m < 0 || c.max_label.m > 8 || c.max_label.n < 0 ||
        c.max_label.n > 8)
      throw config_error("triplets.max_label_* must lie in [0, 8]");
    if (!(c.overlap_threshold >= 0.0))
      throw config_error("triplets.overlap_threshold must be >= 0");
  }

  if (const auto it = j.find("fit"); it != j.end()) {
    c.fit_max_evaluations = need(*it, "max_evaluations", "fit").get<int>();
    const json& b = need(*it, "bounds", "fit");
    const auto bound = [&](const char* key) {
      const auto arr = need(b, key, "fit.bounds");
      if (!arr.is_array() || arr.size() != 2)
        throw config_error(std::string("fit.bounds.") + key + " must be [lo, hi]");
      return std::array<double, 2>{arr[0].get<double>(), arr[1].get<double>()};
    };
    const auto period = bound("poling_period_um");
    const auto width = bound("width_um");
    const auto depth = bound("depth_um");
    const auto dn = bound("delta_n");
    c.fit_lower = {period[0], width[0], depth[0], dn[0]};
    c.fit_upper = {period[1], width[1], depth[1], dn[1]};
  }

  if (const auto it = j.find("output_dir"); it != j.end())
    c.output_dir = it->get<std::string>();
  if (c.output_dir.empty()) throw config_error("output_dir must not be empty");
  return c;
}

}  // namespace wgpdc
