#include "wgpdc/dispersion.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wgpdc {

const char* to_string(Polarization pol) {
  return pol == Polarization::Y ? "y" : "z";
}

namespace {

SellmeierBand parse_band(const nlohmann::json& entry) {
  SellmeierBand band;
  const auto& coeffs = entry.at("coefficients");
  if (coeffs.size() != 5)
    throw config_error("Sellmeier entry needs exactly 5 coefficients");
  for (int k = 0; k < 5; ++k) band.coefficients[k] = coeffs.at(k).get<double>();
  const auto& range = entry.at("valid_range_nm");
  band.lo_nm = range.at(0).get<double>();
  band.hi_nm = range.at(1).get<double>();
  if (!(band.lo_nm > 0.0 && band.hi_nm > band.lo_nm))
    throw config_error("Sellmeier valid_range_nm must be an ordered positive interval");
  return band;
}

}  // namespace

SellmeierModel SellmeierModel::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw config_error("cannot open dispersion file: " + file.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("bad dispersion file " + file.string() + ": " + e.what());
  }
  bool have_y = false, have_z = false;
  SellmeierBand y, z;
  for (const auto& entry : doc.at("entries")) {
    const std::string pol = entry.at("polarization").get<std::string>();
    if (pol == "y") {
      y = parse_band(entry);
      have_y = true;
    } else if (pol == "z") {
      z = parse_band(entry);
      have_z = true;
    } else {
      throw config_error("unknown polarization '" + pol + "' in " + file.string());
    }
  }
  if (!have_y || !have_z)
    throw config_error("dispersion file must provide entries for both y and z: " +
                       file.string());
  return from_bands(y, z);
}

SellmeierModel SellmeierModel::from_bands(SellmeierBand y, SellmeierBand z) {
  SellmeierModel m;
  m.y_ = y;
  m.z_ = z;
  return m;
}

const SellmeierBand& SellmeierModel::band(Polarization pol) const {
  return pol == Polarization::Y ? y_ : z_;
}

std::pair<double, double> SellmeierModel::valid_range_nm(Polarization pol) const {
  const auto& b = band(pol);
  return {b.lo_nm, b.hi_nm};
}

double SellmeierModel::index(Polarization pol, double lambda_nm) const {
  const auto& b = band(pol);
  if (!(lambda_nm >= b.lo_nm && lambda_nm <= b.hi_nm)) {
    std::ostringstream msg;
    msg << "wavelength " << lambda_nm << " nm outside valid range [" << b.lo_nm
        << ", " << b.hi_nm << "] nm for polarization " << to_string(pol);
    throw std::out_of_range(msg.str());
  }
  const double n2 = sellmeier_n2(b.coefficients, lambda_nm * 1e-3);
  if (!(n2 > 1.0))
    throw numeric_error("Sellmeier evaluation gave non-physical index");
  return std::sqrt(n2);
}

double SellmeierModel::index_derivative(Polarization pol, double lambda_nm) const {
  const double n = index(pol, lambda_nm);
  const double lam_um = lambda_nm * 1e-3;
  const double dn2 = sellmeier_dn2(band(pol).coefficients, lam_um);
  // dn/dlam_nm = dn/dlam_um * 1e-3
  return dn2 / (2.0 * n) * 1e-3;
}

double grating_wavevector(const PolingGrating& g) {
  if (!(g.period_um > 0.0)) throw config_error("poling period must be positive");
  if (g.order <= 0 || g.order % 2 == 0)
    throw config_error("QPM order must be a positive odd integer");
  return 2.0 * std::numbers::pi * static_cast<double>(g.order) / g.period_um;
}

}  // namespace wgpdc
