#pragma once

#include <compare>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wgpdc/dispersion.hpp"
#include "wgpdc/errors.hpp"

namespace wgpdc {

struct WaveguideSpec {
  double width_um = 0.0;   // horizontal extent by default
  double depth_um = 0.0;   // vertical extent: air above, substrate below
  double delta_n = 0.0;    // core index = substrate index + delta_n, both pols
  double length_mm = 0.0;
  PolingGrating poling;

  // Which physical dimension runs horizontally. The vertical dimension always
  // carries the air/substrate asymmetry.
  enum class Orientation { WidthHorizontal, WidthVertical };
  Orientation orientation = Orientation::WidthHorizontal;

  double horizontal_um() const {
    return orientation == Orientation::WidthHorizontal ? width_um : depth_um;
  }
  double vertical_um() const {
    return orientation == Orientation::WidthHorizontal ? depth_um : width_um;
  }

  void validate() const;
};

struct ModeLabel {
  int m = 0;  // node count along x (horizontal)
  int n = 0;  // node count along y (vertical)
  friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

// Labels appearing in the five labeled emission peaks. Anything else counts
// as higher order.
inline bool is_low_order(ModeLabel l) {
  return (l.m == 0 && l.n <= 2) || (l.m == 1 && l.n == 0);
}

// One bound slab mode. Lengths in um, transverse rates in 1/um.
// Field: cos(kappa*xi - phase_lo) across the core (xi in [0, thickness],
// xi = 0 on the "lo" side), exponential decay with gamma_lo / gamma_hi
// outside. phase_lo = atan(gamma_lo / kappa).
struct SlabMode {
  double n_eff = 0.0;
  double kappa = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  double thickness = 0.0;
  int nodes = 0;

  double phase_lo() const { return std::atan2(gamma_lo, kappa); }
  // Integral of the squared field over the full line for a unit-amplitude
  // core oscillation (closed form).
  double norm_integral() const;
};

// Roots of the asymmetric-slab dispersion relation, descending n_eff.
// Empty when no mode is guided (not an error).
std::vector<double> solve_slab(double n_left, double n_core, double n_right,
                               double thickness_um, double lambda_nm);

// Same roots with the derived field parameters.
std::vector<SlabMode> solve_slab_modes(double n_left, double n_core,
                                       double n_right, double thickness_um,
                                       double lambda_nm);

// Phase function G(n_eff) = kappa*t - atan2(gamma_l, kappa) - atan2(gamma_r,
// kappa); guided modes solve G = nodes * pi. Monotone decreasing in n_eff.
double slab_phase_function(double n_eff, double n_left, double n_core,
                           double n_right, double thickness_um,
                           double lambda_nm);

// Mode count from the standard V-parameter cutoff condition (used as an
// independent cross-check of solve_slab in tests).
int slab_mode_count_vparam(double n_left, double n_core, double n_right,
                           double thickness_um, double lambda_nm);

// A channel mode at one wavelength: vertical slab solved at full contrast,
// horizontal symmetric slab solved with the vertical effective index as core.
struct GuidedMode {
  ModeLabel label;
  Polarization pol = Polarization::Y;
  double lambda_nm = 0.0;
  double n_eff = 0.0;
  double n_core = 0.0;
  double n_substrate = 0.0;
  SlabMode vertical;
  SlabMode horizontal;
};

struct ProfileGrid {
  // x spans the horizontal direction (core centered on 0), y the vertical
  // (air interface at y = 0, core in [-depth, 0]). Samples at pixel centers.
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  int nx = 0, ny = 0;

  Eigen::ArrayXd xs() const;
  Eigen::ArrayXd ys() const;
  double cell_area() const {
    return (x_max - x_min) / nx * (y_max - y_min) / ny;
  }
};

class ChannelWaveguide {
public:
  ChannelWaveguide(WaveguideSpec spec, SellmeierModel dispersion);

  // All guided modes with label.m <= max_label.m and label.n <= max_label.n,
  // sorted by descending n_eff. Unguided labels are absent.
  std::vector<GuidedMode> solve(Polarization pol, double lambda_nm,
                                ModeLabel max_label) const;

  std::optional<GuidedMode> mode(ModeLabel label, Polarization pol,
                                 double lambda_nm) const;

  // beta = 2*pi*n_eff/lambda in 1/um. Throws numeric_error naming the mode
  // and wavelength when the mode is cut off.
  double beta_um(ModeLabel label, Polarization pol, double lambda_nm) const;

  double substrate_index(Polarization pol, double lambda_nm) const;
  double core_index(Polarization pol, double lambda_nm) const;

  const WaveguideSpec& spec() const { return spec_; }
  const SellmeierModel& dispersion() const { return dispersion_; }

private:
  WaveguideSpec spec_;
  SellmeierModel dispersion_;
};

// Separable profile samples X_m(x) * Y_n(y), analytically unit-normalized
// then rescaled so the discretized L2 norm is exactly 1. Rows index y,
// columns index x. Throws config_error when the grid covers less than
// 3 decay lengths of any cladding side.
Eigen::ArrayXXd mode_profile(const GuidedMode& mode, const ProfileGrid& grid);

// 1D factors with analytic normalization (exact continuous unit norm); the
// product X*Y integrates to 1 over the plane in closed form.
Eigen::ArrayXd profile_x(const GuidedMode& mode, const Eigen::ArrayXd& xs);
Eigen::ArrayXd profile_y(const GuidedMode& mode, const Eigen::ArrayXd& ys);

// Grid covering the core plus pad_decay_lengths / gamma on every cladding
// side, for the given modes jointly.
ProfileGrid bounding_grid(const std::vector<GuidedMode>& modes,
                          double pad_decay_lengths, int nx, int ny);

}  // namespace wgpdc
