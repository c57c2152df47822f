#include "wgpdc/pdc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "wgpdc/errors.hpp"

namespace wgpdc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sinc(double x) {
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// lambda_i from energy conservation, both in nm.
double conjugate_nm(double lambda_p, double lambda_s) {
  return 1.0 / (1.0 / lambda_p - 1.0 / lambda_s);
}

// Uniform Catmull-Rom table for the pump propagation constant; the pump
// dispersion over a sub-nm implied range is far smoother than the spline
// error floor (~1e-13 relative).
struct PumpBetaTable {
  double x0 = 0.0, h = 0.0;
  Eigen::ArrayXd beta;

  double eval(double lambda_nm) const {
    const double u = (lambda_nm - x0) / h;
    Eigen::Index j = static_cast<Eigen::Index>(std::floor(u));
    j = std::clamp<Eigen::Index>(j, 1, beta.size() - 3);
    const double s = u - static_cast<double>(j);
    const double p0 = beta[j - 1], p1 = beta[j], p2 = beta[j + 1],
                 p3 = beta[j + 2];
    return p1 + 0.5 * s *
                    (p2 - p0 +
                     s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                          s * (3.0 * (p1 - p2) + p3 - p0)));
  }
};

PumpBetaTable build_pump_table(const ChannelWaveguide& wg, ModeLabel pump_mode,
                               double lp_lo, double lp_hi, int points) {
  PumpBetaTable t;
  const double pad = 2.0 * (lp_hi - lp_lo) / (points - 1);
  t.x0 = lp_lo - pad;
  t.h = (lp_hi + pad - t.x0) / (points - 1);
  t.beta.resize(points);
  for (int j = 0; j < points; ++j)
    t.beta[j] = wg.beta_um(pump_mode, kPumpPolarization,
                           t.x0 + t.h * static_cast<double>(j));
  return t;
}

}  // namespace

void PumpSpec::validate() const {
  if (!(center_nm > 0.0) || !(fwhm_nm > 0.0))
    throw config_error("pump center and bandwidth must be positive");
  if (mode_fractions.empty())
    throw config_error("pump needs at least one mode fraction");
  double sum = 0.0;
  for (const auto& [label, frac] : mode_fractions) {
    if (!(frac >= 0.0))
      throw config_error("pump mode fractions must be non-negative");
    sum += frac;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw config_error("pump mode fractions must sum to one");
}

double PumpSpec::fraction(ModeLabel label) const {
  const auto it = mode_fractions.find(label);
  return it == mode_fractions.end() ? 0.0 : it->second;
}

double overlap_coefficient(const GuidedMode& pump, const GuidedMode& signal,
                           const GuidedMode& idler, const Quadrature& q) {
  const ProfileGrid g =
      bounding_grid({pump, signal, idler}, q.pad_decay_lengths, q.nx, q.ny);
  const Eigen::ArrayXd xs = g.xs();
  const Eigen::ArrayXd ys = g.ys();
  // Profiles separate as X(x) * Y(y), so the cross-section integral is a
  // product of two midpoint sums. The symmetric x grid cancels odd-parity
  // integrands to rounding noise.
  const double ix = (profile_x(pump, xs) * profile_x(signal, xs) *
                     profile_x(idler, xs))
                        .sum() *
                    (g.x_max - g.x_min) / g.nx;
  const double iy = (profile_y(pump, ys) * profile_y(signal, ys) *
                     profile_y(idler, ys))
                        .sum() *
                    (g.y_max - g.y_min) / g.ny;
  return ix * iy;
}

double phase_mismatch(const ChannelWaveguide& wg, ModeLabel pump,
                      ModeLabel signal, ModeLabel idler, double lambda_s_nm,
                      double lambda_p_nm) {
  if (!(lambda_s_nm > lambda_p_nm))
    throw config_error("signal wavelength must exceed the pump wavelength");
  const double lambda_i_nm = conjugate_nm(lambda_p_nm, lambda_s_nm);
  const double bp = wg.beta_um(pump, kPumpPolarization, lambda_p_nm);
  const double bs = wg.beta_um(signal, kSignalPolarization, lambda_s_nm);
  const double bi = wg.beta_um(idler, kIdlerPolarization, lambda_i_nm);
  return bp - bs - bi - grating_wavevector(wg.spec().poling);
}

std::vector<std::array<double, 2>> find_peak(const ChannelWaveguide& wg,
                                             ModeLabel pump, ModeLabel signal,
                                             ModeLabel idler,
                                             std::array<double, 2> window_nm,
                                             double lambda_p_nm,
                                             int scan_points) {
  if (!(window_nm[0] < window_nm[1]) || !(window_nm[0] > lambda_p_nm))
    throw config_error("search window must be ordered and above the pump");
  if (scan_points < 2) throw config_error("need at least two scan points");

  const double bp = wg.beta_um(pump, kPumpPolarization, lambda_p_nm);
  const double K = grating_wavevector(wg.spec().poling);
  const auto mism = [&](double ls) -> double {
    const double li = conjugate_nm(lambda_p_nm, ls);
    try {
      const auto ms = wg.mode(signal, kSignalPolarization, ls);
      const auto mi = wg.mode(idler, kIdlerPolarization, li);
      if (!ms || !mi) return kNaN;  // cut off: no phase match here
      return bp - 2.0 * kPi * (ms->n_eff / (ls * 1e-3) + mi->n_eff / (li * 1e-3)) -
             K;
    } catch (const std::out_of_range&) {
      return kNaN;  // conjugate wavelength left the dispersion fit range
    }
  };

  const Eigen::ArrayXd ls =
      Eigen::ArrayXd::LinSpaced(scan_points, window_nm[0], window_nm[1]);
  Eigen::ArrayXd gs(scan_points);
  for (int j = 0; j < scan_points; ++j) gs[j] = mism(ls[j]);

  std::vector<std::array<double, 2>> roots;
  for (int j = 0; j + 1 < scan_points; ++j) {
    if (std::isnan(gs[j]) || std::isnan(gs[j + 1])) continue;
    const bool crossing = (gs[j] == 0.0) || (gs[j] > 0.0) != (gs[j + 1] > 0.0);
    if (!crossing) continue;
    double a = ls[j], b = ls[j + 1], fa = gs[j];
    // Interval tolerance 1e-7 nm leaves the residual mismatch ~1e-10 1/um.
    while (b - a > 1e-7) {
      const double mid = 0.5 * (a + b);
      const double fm = mism(mid);
      if (std::isnan(fm)) break;
      if (fm == 0.0) {
        a = b = mid;
      } else if ((fm > 0.0) == (fa > 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    const double peak = 0.5 * (a + b);
    roots.push_back({peak, conjugate_nm(lambda_p_nm, peak)});
  }
  return roots;
}

std::vector<ModeTriplet> enumerate_triplets_for_pumps(
    const ChannelWaveguide& wg, const std::vector<ModeLabel>& pump_labels,
    double lambda_p_nm, double threshold, std::array<double, 2> window_nm,
    ModeLabel max_label, const Quadrature& q, int scan_points) {
  if (!(threshold >= 0.0)) throw config_error("overlap threshold must be >= 0");
  if (!(lambda_p_nm > 0.0)) throw config_error("pump wavelength must be positive");

  const double ldeg = 2.0 * lambda_p_nm;
  std::vector<GuidedMode> pumps;
  for (const ModeLabel& label : pump_labels) {
    auto m = wg.mode(label, kPumpPolarization, lambda_p_nm);
    if (!m) {
      std::ostringstream msg;
      msg << "pump mode (" << label.m << "," << label.n << ") is not guided at "
          << lambda_p_nm << " nm";
      throw config_error(msg.str());
    }
    pumps.push_back(*m);
  }
  const std::vector<GuidedMode> signals =
      wg.solve(kSignalPolarization, ldeg, max_label);
  const std::vector<GuidedMode> idlers =
      wg.solve(kIdlerPolarization, ldeg, max_label);

  std::vector<ModeTriplet> out;
  for (const GuidedMode& p : pumps) {
    for (const GuidedMode& s : signals) {
      for (const GuidedMode& i : idlers) {
        const double ov = overlap_coefficient(p, s, i, q);
        if (std::abs(ov) <= threshold) continue;
        auto peaks = find_peak(wg, p.label, s.label, i.label, window_nm,
                               lambda_p_nm, scan_points);
        if (peaks.empty()) continue;
        ModeTriplet t;
        t.pump = p.label;
        t.signal = s.label;
        t.idler = i.label;
        t.overlap = ov;
        t.peaks = std::move(peaks);
        out.push_back(std::move(t));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ModeTriplet& a, const ModeTriplet& b) {
    return a.peaks.front()[0] < b.peaks.front()[0];
  });
  return out;
}

std::vector<ModeTriplet> enumerate_triplets(const ChannelWaveguide& wg,
                                            const PumpSpec& pump,
                                            double threshold,
                                            std::array<double, 2> window_nm,
                                            ModeLabel max_label,
                                            const Quadrature& q,
                                            int scan_points) {
  pump.validate();
  std::vector<ModeLabel> labels;
  for (const auto& [label, frac] : pump.mode_fractions)
    if (frac > 0.0) labels.push_back(label);
  return enumerate_triplets_for_pumps(wg, labels, pump.center_nm, threshold,
                                      window_nm, max_label, q, scan_points);
}

JsaGrid JsaGrid::regular(double s_lo, double s_hi, double i_lo, double i_hi,
                         int ns, int ni) {
  if (!(s_lo < s_hi) || !(i_lo < i_hi) || ns < 2 || ni < 2)
    throw config_error("joint spectral grid must be ordered with >= 2 points");
  JsaGrid g;
  g.lambda_s = Eigen::ArrayXd::LinSpaced(ns, s_lo, s_hi);
  g.lambda_i = Eigen::ArrayXd::LinSpaced(ni, i_lo, i_hi);
  return g;
}

JointSpectralAmplitude build_jsa(
    const ChannelWaveguide& wg,
    const std::vector<std::pair<ModeTriplet, double>>& processes,
    const PumpSpec& pump, const JsaGrid& grid) {
  pump.validate();
  if (processes.empty()) throw config_error("joint amplitude needs processes");
  const ModeLabel pump_mode = processes.front().first.pump;
  for (const auto& [t, w] : processes)
    if (!(t.pump == pump_mode))
      throw config_error("coherent sum requires a common pump mode");
  const Eigen::Index ns = grid.lambda_s.size(), ni = grid.lambda_i.size();
  if (ns < 2 || ni < 2) throw config_error("joint spectral grid too small");

  // Fail fast when the grid leaves the dispersion fit range; the per-point
  // index calls below would throw the same way.
  const auto [ylo, yhi] = wg.dispersion().valid_range_nm(kSignalPolarization);
  const auto [zlo, zhi] = wg.dispersion().valid_range_nm(kIdlerPolarization);
  const double lp_lo = 1.0 / (1.0 / grid.lambda_s[0] + 1.0 / grid.lambda_i[0]);
  const double lp_hi =
      1.0 / (1.0 / grid.lambda_s[ns - 1] + 1.0 / grid.lambda_i[ni - 1]);
  if (grid.lambda_s[0] < ylo || grid.lambda_s[ns - 1] > yhi ||
      grid.lambda_i[0] < zlo || grid.lambda_i[ni - 1] > zhi || lp_lo < ylo)
    throw std::out_of_range("joint spectral grid leaves the dispersion range");

  ModeLabel smax{0, 0}, imax{0, 0};
  std::set<ModeLabel> slabels, ilabels;
  for (const auto& [t, w] : processes) {
    slabels.insert(t.signal);
    ilabels.insert(t.idler);
    smax = ModeLabel{std::max(smax.m, t.signal.m), std::max(smax.n, t.signal.n)};
    imax = ModeLabel{std::max(imax.m, t.idler.m), std::max(imax.n, t.idler.n)};
  }

  // Exact per-point propagation constants along both axes, one batched solve
  // per wavelength. NaN marks a cut-off label; its contribution vanishes.
  std::map<ModeLabel, Eigen::ArrayXd> beta_s, beta_i;
  for (const ModeLabel& l : slabels) beta_s[l] = Eigen::ArrayXd::Constant(ns, kNaN);
  for (const ModeLabel& l : ilabels) beta_i[l] = Eigen::ArrayXd::Constant(ni, kNaN);
  for (Eigen::Index j = 0; j < ns; ++j)
    for (const GuidedMode& m :
         wg.solve(kSignalPolarization, grid.lambda_s[j], smax))
      if (auto it = beta_s.find(m.label); it != beta_s.end())
        it->second[j] = 2.0 * kPi * m.n_eff / (grid.lambda_s[j] * 1e-3);
  for (Eigen::Index k = 0; k < ni; ++k)
    for (const GuidedMode& m : wg.solve(kIdlerPolarization, grid.lambda_i[k], imax))
      if (auto it = beta_i.find(m.label); it != beta_i.end())
        it->second[k] = 2.0 * kPi * m.n_eff / (grid.lambda_i[k] * 1e-3);

  const int table_points =
      std::clamp(static_cast<int>(2 * (ns + ni)), 256, 2048);
  const PumpBetaTable bp = build_pump_table(wg, pump_mode, lp_lo, lp_hi,
                                            table_points);

  const double K = grating_wavevector(wg.spec().poling);
  const double half_length_um = 0.5 * wg.spec().length_mm * 1e3;
  const double nu0 = 1.0 / pump.center_nm;
  // Intensity FWHM -> amplitude envelope exp(-(nu - nu0)^2 / (4 sigma^2)).
  const double sigma =
      (pump.fwhm_nm / (pump.center_nm * pump.center_nm)) /
      (2.0 * std::sqrt(2.0 * std::numbers::ln2_v<double>));

  JointSpectralAmplitude jsa;
  jsa.grid = grid;
  jsa.processes = processes;
  jsa.pump_mode = pump_mode;
  jsa.amplitude = Eigen::ArrayXXcd::Zero(ns, ni);

  const Eigen::ArrayXd nus = 1.0 / grid.lambda_s;
  const Eigen::ArrayXd nui = 1.0 / grid.lambda_i;
  for (const auto& [t, w] : processes) {
    const Eigen::ArrayXd& bs = beta_s.at(t.signal);
    const Eigen::ArrayXd& bi = beta_i.at(t.idler);
    const double scale = w * t.overlap;
    for (Eigen::Index j = 0; j < ns; ++j) {
      if (std::isnan(bs[j])) continue;
      for (Eigen::Index k = 0; k < ni; ++k) {
        if (std::isnan(bi[k])) continue;
        const double nusum = nus[j] + nui[k];
        const double dnu = nusum - nu0;
        const double alpha = std::exp(-dnu * dnu / (4.0 * sigma * sigma));
        const double dbeta = bp.eval(1.0 / nusum) - bs[j] - bi[k] - K;
        jsa.amplitude(j, k) += scale * alpha * sinc(dbeta * half_length_um);
      }
    }
  }
  jsa.empty_support = (jsa.amplitude.abs().maxCoeff() == 0.0);
  return jsa;
}

MarginalSpectra marginal_spectra(const std::vector<JointSpectralAmplitude>& jsas,
                                 const PumpSpec& pump) {
  if (jsas.empty()) throw config_error("marginals need at least one amplitude");
  const JsaGrid& g = jsas.front().grid;
  MarginalSpectra m;
  m.lambda_s = g.lambda_s;
  m.lambda_i = g.lambda_i;
  m.signal = Eigen::ArrayXd::Zero(g.lambda_s.size());
  m.idler = Eigen::ArrayXd::Zero(g.lambda_i.size());
  for (const JointSpectralAmplitude& jsa : jsas) {
    if (jsa.grid.lambda_s.size() != g.lambda_s.size() ||
        jsa.grid.lambda_i.size() != g.lambda_i.size() ||
        (jsa.grid.lambda_s != g.lambda_s).any() ||
        (jsa.grid.lambda_i != g.lambda_i).any())
      throw config_error("marginals require a shared joint spectral grid");
    const double frac = pump.fraction(jsa.pump_mode);
    const Eigen::ArrayXXd p = jsa.amplitude.abs2();
    m.signal += frac * p.rowwise().sum() * g.cell_i();
    m.idler += frac * p.colwise().sum().transpose() * g.cell_s();
  }
  return m;
}

std::vector<PeakEntry> flatten_peaks(const std::vector<ModeTriplet>& triplets) {
  std::vector<PeakEntry> out;
  for (const ModeTriplet& t : triplets)
    for (const auto& pk : t.peaks) out.push_back({t, pk[0], pk[1]});
  std::sort(out.begin(), out.end(), [](const PeakEntry& a, const PeakEntry& b) {
    return a.lambda_s < b.lambda_s;
  });
  return out;
}

std::vector<PeakCluster> cluster_peaks(const std::vector<PeakEntry>& entries,
                                       double linkage_nm) {
  std::vector<int> order(entries.size());
  for (std::size_t j = 0; j < entries.size(); ++j) order[j] = static_cast<int>(j);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return entries[a].lambda_s < entries[b].lambda_s;
  });

  std::vector<PeakCluster> clusters;
  for (int idx : order) {
    const double ls = entries[idx].lambda_s;
    if (clusters.empty() || ls - clusters.back().lambda_hi > linkage_nm) {
      PeakCluster c;
      c.lambda_lo = c.lambda_hi = ls;
      c.higher_order_only = true;
      clusters.push_back(c);
    }
    PeakCluster& c = clusters.back();
    c.members.push_back(idx);
    c.lambda_hi = ls;
    c.higher_order_only =
        c.higher_order_only && entries[idx].triplet.higher_order();
  }

  int letter = 0, extra = 0;
  for (PeakCluster& c : clusters) {
    if (c.higher_order_only) {
      c.label = "H" + std::to_string(++extra);
    } else {
      c.label = std::string(1, static_cast<char>('A' + letter++));
    }
  }
  return clusters;
}

const std::array<PeakDefinition, 5>& labeled_peaks() {
  static const std::array<PeakDefinition, 5> defs = {{
      {'A', {{{ModeLabel{0, 0}, ModeLabel{0, 0}, ModeLabel{0, 0}}}}},
      {'B',
       {{{ModeLabel{0, 1}, ModeLabel{0, 0}, ModeLabel{0, 1}}},
        {{ModeLabel{0, 1}, ModeLabel{0, 1}, ModeLabel{0, 0}}}}},
      {'C', {{{ModeLabel{0, 0}, ModeLabel{0, 1}, ModeLabel{0, 1}}}}},
      {'D',
       {{{ModeLabel{0, 1}, ModeLabel{0, 1}, ModeLabel{0, 2}}},
        {{ModeLabel{0, 1}, ModeLabel{0, 2}, ModeLabel{0, 1}}}}},
      {'E',
       {{{ModeLabel{0, 0}, ModeLabel{1, 0}, ModeLabel{1, 0}}},
        {{ModeLabel{0, 0}, ModeLabel{0, 2}, ModeLabel{0, 2}}}}},
  }};
  return defs;
}

}  // namespace wgpdc
