#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <utility>

#include "wgpdc/errors.hpp"

namespace wgpdc {

// Crystal-frame polarizations. For the type-II process modeled here the pump
// and signal are y-polarized, the idler z-polarized.
enum class Polarization { Y, Z };

inline constexpr Polarization kPumpPolarization = Polarization::Y;
inline constexpr Polarization kSignalPolarization = Polarization::Y;
inline constexpr Polarization kIdlerPolarization = Polarization::Z;

const char* to_string(Polarization pol);

// Two-pole Sellmeier form n^2 = c0 + c1/(L^2 - c2) + c3/(L^2 - c4), L in um.
template <class Scalar>
Scalar sellmeier_n2(const std::array<double, 5>& c, Scalar lam_um) {
  const Scalar L2 = lam_um * lam_um;
  return Scalar(c[0]) + Scalar(c[1]) / (L2 - Scalar(c[2])) +
         Scalar(c[3]) / (L2 - Scalar(c[4]));
}

// d(n^2)/dL with L in um.
template <class Scalar>
Scalar sellmeier_dn2(const std::array<double, 5>& c, Scalar lam_um) {
  const Scalar L2 = lam_um * lam_um;
  const Scalar p1 = L2 - Scalar(c[2]);
  const Scalar p2 = L2 - Scalar(c[4]);
  return Scalar(-2) * lam_um *
         (Scalar(c[1]) / (p1 * p1) + Scalar(c[3]) / (p2 * p2));
}

struct SellmeierBand {
  std::array<double, 5> coefficients{};
  double lo_nm = 0.0;
  double hi_nm = 0.0;
};

// Material dispersion for both crystal polarizations, loaded from a JSON
// coefficient file (never hardcoded).
class SellmeierModel {
public:
  // Default model is empty: every index lookup is out of range until loaded.
  SellmeierModel() = default;

  static SellmeierModel load(const std::filesystem::path& file);
  static SellmeierModel from_bands(SellmeierBand y, SellmeierBand z);

  // n(lambda). Throws std::out_of_range outside the band's valid range.
  double index(Polarization pol, double lambda_nm) const;

  // dn/dlambda in 1/nm, closed form.
  double index_derivative(Polarization pol, double lambda_nm) const;

  std::pair<double, double> valid_range_nm(Polarization pol) const;
  const SellmeierBand& band(Polarization pol) const;

private:
  SellmeierBand y_;
  SellmeierBand z_;
};

struct PolingGrating {
  double period_um = 0.0;
  int order = 1;
};

// K = 2*pi*order / Lambda, in 1/um. Throws config_error for invalid gratings.
double grating_wavevector(const PolingGrating& g);

}  // namespace wgpdc
