#include "wgpdc/modesolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace wgpdc {

namespace {

constexpr double kPi = std::numbers::pi;

double wavenumber_um(double lambda_nm) { return 2.0 * kPi / (lambda_nm * 1e-3); }

struct SlabSetup {
  double n_lo;  // max(n_left, n_right): lower bound of the guided interval
  double n_hi;  // n_core
  double k0;
  double t;
  double n_left, n_right;
};

double phase_fn(const SlabSetup& s, double n) {
  const double kappa = s.k0 * std::sqrt(std::max(0.0, s.n_hi * s.n_hi - n * n));
  const double gl = s.k0 * std::sqrt(std::max(0.0, n * n - s.n_left * s.n_left));
  const double gr = s.k0 * std::sqrt(std::max(0.0, n * n - s.n_right * s.n_right));
  return kappa * s.t - std::atan2(gl, kappa) - std::atan2(gr, kappa);
}

// G is strictly decreasing in n_eff (kappa falls, both gammas rise), so each
// branch G = nu*pi has exactly one root when G(lo) >= nu*pi and none
// otherwise; plain bisection per branch needs no scan.
std::vector<double> slab_roots(const SlabSetup& s) {
  std::vector<double> roots;
  const double lo = s.n_lo * (1.0 + 1e-13);
  const double hi = s.n_hi * (1.0 - 1e-13);
  if (!(hi > lo)) return roots;

  const double g_top = phase_fn(s, lo);  // maximum of G on the interval
  if (g_top <= 0.0) return roots;
  const int branches = static_cast<int>(std::floor(g_top / kPi)) + 1;

  roots.reserve(branches);
  for (int nu = 0; nu < branches; ++nu) {
    const double target = nu * kPi;
    // G(lo) >= target by construction, G(hi) = -pi < target.
    double a = lo, b = hi;
    // Bisection to machine precision; the residual contract needs ~1e-14 in
    // n_eff given |dG/dn| ~ 1e3..1e4.
    for (int it = 0; it < 200 && (b - a) > 1e-16 * s.n_hi; ++it) {
      const double mid = 0.5 * (a + b);
      if (phase_fn(s, mid) - target >= 0.0)
        a = mid;
      else
        b = mid;
    }
    roots.push_back(0.5 * (a + b));
  }
  // Branch order nu ascending already gives descending n_eff.
  return roots;
}

SlabMode make_slab_mode(const SlabSetup& s, double n_eff, int nodes) {
  SlabMode m;
  m.n_eff = n_eff;
  m.kappa = s.k0 * std::sqrt(std::max(0.0, s.n_hi * s.n_hi - n_eff * n_eff));
  m.gamma_lo = s.k0 * std::sqrt(std::max(0.0, n_eff * n_eff - s.n_left * s.n_left));
  m.gamma_hi = s.k0 * std::sqrt(std::max(0.0, n_eff * n_eff - s.n_right * s.n_right));
  m.thickness = s.t;
  m.nodes = nodes;
  return m;
}

SlabSetup make_setup(double n_left, double n_core, double n_right,
                     double thickness_um, double lambda_nm) {
  if (!(thickness_um > 0.0)) throw config_error("slab thickness must be positive");
  if (!(n_core > std::max(n_left, n_right)))
    throw config_error("slab core index must exceed both claddings");
  SlabSetup s;
  s.n_left = n_left;
  s.n_right = n_right;
  s.n_lo = std::max(n_left, n_right);
  s.n_hi = n_core;
  s.k0 = wavenumber_um(lambda_nm);
  s.t = thickness_um;
  return s;
}

}  // namespace

double slab_phase_function(double n_eff, double n_left, double n_core,
                           double n_right, double thickness_um,
                           double lambda_nm) {
  return phase_fn(make_setup(n_left, n_core, n_right, thickness_um, lambda_nm),
                  n_eff);
}

std::vector<double> solve_slab(double n_left, double n_core, double n_right,
                               double thickness_um, double lambda_nm) {
  return slab_roots(make_setup(n_left, n_core, n_right, thickness_um, lambda_nm));
}

std::vector<SlabMode> solve_slab_modes(double n_left, double n_core,
                                       double n_right, double thickness_um,
                                       double lambda_nm) {
  const SlabSetup s = make_setup(n_left, n_core, n_right, thickness_um, lambda_nm);
  const std::vector<double> roots = slab_roots(s);
  std::vector<SlabMode> modes;
  modes.reserve(roots.size());
  for (std::size_t nu = 0; nu < roots.size(); ++nu)
    modes.push_back(make_slab_mode(s, roots[nu], static_cast<int>(nu)));
  return modes;
}

int slab_mode_count_vparam(double n_left, double n_core, double n_right,
                           double thickness_um, double lambda_nm) {
  const double k0 = wavenumber_um(lambda_nm);
  const double n_lo = std::max(n_left, n_right);
  const double n_other = std::min(n_left, n_right);
  if (!(n_core > n_lo)) return 0;
  const double kappa_c = k0 * std::sqrt(n_core * n_core - n_lo * n_lo);
  const double gamma_c = k0 * std::sqrt(n_lo * n_lo - n_other * n_other);
  const double v = kappa_c * thickness_um - std::atan2(gamma_c, kappa_c);
  if (v < 0.0) return 0;
  return static_cast<int>(std::floor(v / kPi)) + 1;
}

double SlabMode::norm_integral() const {
  const double phi = phase_lo();
  const double core = 0.5 * thickness +
                      (std::sin(2.0 * (kappa * thickness - phi)) +
                       std::sin(2.0 * phi)) /
                          (4.0 * kappa);
  const double lo = std::cos(phi);
  const double hi = std::cos(kappa * thickness - phi);
  return core + lo * lo / (2.0 * gamma_lo) + hi * hi / (2.0 * gamma_hi);
}

void WaveguideSpec::validate() const {
  if (!(width_um > 0.0 && depth_um > 0.0 && length_mm > 0.0))
    throw config_error("waveguide dimensions and length must be positive");
  if (!(delta_n >= 0.0 && delta_n < 0.1))
    throw config_error("index contrast must lie in [0, 0.1)");
  if (!(poling.period_um > 0.0))
    throw config_error("poling period must be positive");
}

ChannelWaveguide::ChannelWaveguide(WaveguideSpec spec, SellmeierModel dispersion)
    : spec_(spec), dispersion_(std::move(dispersion)) {
  spec_.validate();
}

double ChannelWaveguide::substrate_index(Polarization pol, double lambda_nm) const {
  return dispersion_.index(pol, lambda_nm);
}

double ChannelWaveguide::core_index(Polarization pol, double lambda_nm) const {
  return dispersion_.index(pol, lambda_nm) + spec_.delta_n;
}

std::vector<GuidedMode> ChannelWaveguide::solve(Polarization pol, double lambda_nm,
                                                ModeLabel max_label) const {
  const double n_sub = substrate_index(pol, lambda_nm);
  const double n_core = n_sub + spec_.delta_n;
  const double d = spec_.vertical_um();
  const double w = spec_.horizontal_um();

  std::vector<GuidedMode> out;
  if (!(spec_.delta_n > 0.0)) return out;  // no contrast, nothing guided
  // Vertical slab first: air above (index 1), substrate below.
  const std::vector<SlabMode> vertical =
      solve_slab_modes(n_sub, n_core, 1.0, d, lambda_nm);
  for (const SlabMode& v : vertical) {
    if (v.nodes > max_label.n) break;
    if (!(v.n_eff > n_sub)) continue;  // horizontal step would not guide
    const std::vector<SlabMode> horizontal =
        solve_slab_modes(n_sub, v.n_eff, n_sub, w, lambda_nm);
    for (const SlabMode& h : horizontal) {
      if (h.nodes > max_label.m) break;
      GuidedMode mode;
      mode.label = ModeLabel{h.nodes, v.nodes};
      mode.pol = pol;
      mode.lambda_nm = lambda_nm;
      mode.n_eff = h.n_eff;
      mode.n_core = n_core;
      mode.n_substrate = n_sub;
      mode.vertical = v;
      mode.horizontal = h;
      out.push_back(mode);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const GuidedMode& a, const GuidedMode& b) { return a.n_eff > b.n_eff; });
  return out;
}

std::optional<GuidedMode> ChannelWaveguide::mode(ModeLabel label, Polarization pol,
                                                 double lambda_nm) const {
  for (const GuidedMode& m : solve(pol, lambda_nm, label))
    if (m.label == label) return m;
  return std::nullopt;
}

double ChannelWaveguide::beta_um(ModeLabel label, Polarization pol,
                                 double lambda_nm) const {
  const auto m = mode(label, pol, lambda_nm);
  if (!m) {
    std::ostringstream msg;
    msg << "mode (" << label.m << "," << label.n << ") " << to_string(pol)
        << " is cut off at " << lambda_nm << " nm";
    throw numeric_error(msg.str());
  }
  return wavenumber_um(lambda_nm) * m->n_eff;
}

Eigen::ArrayXd ProfileGrid::xs() const {
  const double h = (x_max - x_min) / nx;
  return x_min + h * (Eigen::ArrayXd::LinSpaced(nx, 0, nx - 1) + 0.5);
}

Eigen::ArrayXd ProfileGrid::ys() const {
  const double h = (y_max - y_min) / ny;
  return y_min + h * (Eigen::ArrayXd::LinSpaced(ny, 0, ny - 1) + 0.5);
}

Eigen::ArrayXd profile_x(const GuidedMode& mode, const Eigen::ArrayXd& xs) {
  const SlabMode& h = mode.horizontal;
  const double half = 0.5 * h.thickness;
  const bool odd = (mode.label.m % 2) != 0;
  const double edge = odd ? std::sin(h.kappa * half) : std::cos(h.kappa * half);
  double norm = 0.5 * h.thickness + edge * edge / h.gamma_lo;
  norm += (odd ? -1.0 : 1.0) * std::sin(h.kappa * h.thickness) / (2.0 * h.kappa);
  const double amp = 1.0 / std::sqrt(norm);

  Eigen::ArrayXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    double u;
    if (std::abs(x) <= half) {
      u = odd ? std::sin(h.kappa * x) : std::cos(h.kappa * x);
    } else {
      const double tail = std::exp(-h.gamma_lo * (std::abs(x) - half));
      u = edge * tail * (odd && x < 0.0 ? -1.0 : 1.0);
    }
    out[i] = amp * u;
  }
  return out;
}

Eigen::ArrayXd profile_y(const GuidedMode& mode, const Eigen::ArrayXd& ys) {
  const SlabMode& v = mode.vertical;
  const double d = v.thickness;
  const double phi = v.phase_lo();  // substrate-side phase
  const double amp = 1.0 / std::sqrt(v.norm_integral());
  const double a_sub = std::cos(phi);
  const double a_air = std::cos(v.kappa * d - phi);

  Eigen::ArrayXd out(ys.size());
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    const double y = ys[i];  // core occupies [-d, 0], air above y = 0
    double u;
    if (y >= 0.0) {
      u = a_air * std::exp(-v.gamma_hi * y);
    } else if (y <= -d) {
      u = a_sub * std::exp(v.gamma_lo * (y + d));
    } else {
      u = std::cos(v.kappa * (y + d) - phi);
    }
    out[i] = amp * u;
  }
  return out;
}

ProfileGrid bounding_grid(const std::vector<GuidedMode>& modes,
                          double pad_decay_lengths, int nx, int ny) {
  if (modes.empty()) throw config_error("bounding_grid needs at least one mode");
  double gx = std::numeric_limits<double>::infinity();
  double gsub = gx, gair = gx;
  const double w = modes.front().horizontal.thickness;
  const double d = modes.front().vertical.thickness;
  for (const GuidedMode& m : modes) {
    if (m.horizontal.thickness != w || m.vertical.thickness != d)
      throw config_error("modes live on mismatched waveguide cross sections");
    gx = std::min(gx, m.horizontal.gamma_lo);
    gsub = std::min(gsub, m.vertical.gamma_lo);
    gair = std::min(gair, m.vertical.gamma_hi);
  }
  ProfileGrid g;
  g.x_max = 0.5 * w + pad_decay_lengths / gx;
  g.x_min = -g.x_max;
  g.y_max = pad_decay_lengths / gair;
  g.y_min = -d - pad_decay_lengths / gsub;
  g.nx = nx;
  g.ny = ny;
  return g;
}

Eigen::ArrayXXd mode_profile(const GuidedMode& mode, const ProfileGrid& grid) {
  if (grid.nx < 2 || grid.ny < 2) throw config_error("profile grid too coarse");
  const double w = mode.horizontal.thickness;
  const double d = mode.vertical.thickness;
  const double need_x = 3.0 / mode.horizontal.gamma_lo;
  const double need_sub = 3.0 / mode.vertical.gamma_lo;
  const double need_air = 3.0 / mode.vertical.gamma_hi;
  if (grid.x_min > -0.5 * w - need_x || grid.x_max < 0.5 * w + need_x ||
      grid.y_min > -d - need_sub || grid.y_max < need_air)
    throw config_error("profile grid must cover the core plus 3 decay lengths");

  const Eigen::ArrayXd X = profile_x(mode, grid.xs());
  const Eigen::ArrayXd Y = profile_y(mode, grid.ys());
  Eigen::ArrayXXd u = (Y.matrix() * X.matrix().transpose()).array();
  const double discrete_norm = std::sqrt((u * u).sum() * grid.cell_area());
  return u / discrete_norm;
}

}  // namespace wgpdc
