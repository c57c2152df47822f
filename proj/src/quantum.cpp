#include "wgpdc/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "wgpdc/errors.hpp"

namespace wgpdc {

double SpectralFilter::transmission(double lambda_nm) const {
  if (!(fwhm_nm > 0.0)) throw config_error("filter bandwidth must be positive");
  const double d = lambda_nm - center_nm;
  if (shape == Shape::Rectangular) return std::abs(d) <= 0.5 * fwhm_nm ? 1.0 : 0.0;
  return std::exp(-4.0 * std::numbers::ln2 * d * d / (fwhm_nm * fwhm_nm));
}

std::array<double, 2> SpectralFilter::support() const {
  // Gaussian wings reach 1e-16 of peak at 3.65 FWHM: below double rounding.
  const double half = (shape == Shape::Rectangular) ? 0.5 : 3.65;
  return {center_nm - half * fwhm_nm, center_nm + half * fwhm_nm};
}

JointSpectralAmplitude apply_filters(const JointSpectralAmplitude& jsa,
                                     const SpectralFilter& fs,
                                     const SpectralFilter& fi) {
  JointSpectralAmplitude out = jsa;
  const Eigen::Index ns = out.grid.lambda_s.size();
  const Eigen::Index ni = out.grid.lambda_i.size();
  Eigen::ArrayXd ts(ns), ti(ni);
  for (Eigen::Index j = 0; j < ns; ++j) ts[j] = fs.transmission(out.grid.lambda_s[j]);
  for (Eigen::Index k = 0; k < ni; ++k) ti[k] = fi.transmission(out.grid.lambda_i[k]);
  for (Eigen::Index j = 0; j < ns; ++j)
    for (Eigen::Index k = 0; k < ni; ++k) out.amplitude(j, k) *= ts[j] * ti[k];
  out.empty_support = (out.amplitude.abs().maxCoeff() == 0.0);
  return out;
}

SchmidtDecomposition schmidt(const JointSpectralAmplitude& jsa) {
  const Eigen::MatrixXcd A = jsa.amplitude.matrix();
  const double fro = A.norm();
  if (!(fro > 0.0))
    throw numeric_error("zero amplitude has no Schmidt decomposition");

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtDecomposition d;
  d.norm = fro;
  d.coefficients = svd.singularValues().array() / fro;
  d.signal_modes = svd.matrixU();
  d.idler_modes = svd.matrixV().conjugate();
  d.schmidt_number = 1.0 / d.coefficients.pow(4).sum();
  const Eigen::MatrixXcd recon =
      svd.matrixU() * svd.singularValues().asDiagonal() * svd.matrixV().adjoint();
  d.reconstruction_error = (A - recon).norm() / fro;
  return d;
}

BellResult bell_state(char peak, const std::vector<ModeTriplet>& triplets,
                      const std::vector<JointSpectralAmplitude>& jsas) {
  if (peak == 'A' || peak == 'C') {
    std::ostringstream msg;
    msg << "peak " << peak << " has a single contributing process and is not "
        << "spatially entangled";
    throw std::invalid_argument(msg.str());
  }
  if (peak != 'B' && peak != 'D' && peak != 'E')
    throw std::invalid_argument("unknown emission peak label");
  if (triplets.size() != 2 || jsas.size() != 2)
    throw std::invalid_argument("Bell construction needs exactly two processes");
  for (int k = 0; k < 2; ++k) {
    if (jsas[k].processes.size() != 1 ||
        !(jsas[k].processes.front().first.signal == triplets[k].signal) ||
        !(jsas[k].processes.front().first.idler == triplets[k].idler))
      throw std::invalid_argument("amplitudes must match the two processes");
  }
  const JsaGrid& g = jsas[0].grid;
  if (jsas[1].grid.lambda_s.size() != g.lambda_s.size() ||
      jsas[1].grid.lambda_i.size() != g.lambda_i.size() ||
      (jsas[1].grid.lambda_s != g.lambda_s).any() ||
      (jsas[1].grid.lambda_i != g.lambda_i).any())
    throw config_error("Bell construction requires a shared spectral grid");

  const ModeLabel s1 = triplets[0].signal, i1 = triplets[0].idler;
  const ModeLabel s2 = triplets[1].signal, i2 = triplets[1].idler;
  BellResult r;
  if (s1 == i2 && s2 == i1 && !(s1 == s2)) {
    r.state.form = "Psi+";
  } else if (s1 == i1 && s2 == i2 && !(s1 == s2)) {
    r.state.form = "Phi+";
  } else {
    throw std::invalid_argument("process pair does not form a Bell basis");
  }
  r.state.basis = {{s1, i1}, {s2, i2}};
  const double c = 1.0 / std::sqrt(2.0);
  r.state.coefficients = {c, c};

  const double n1 = jsas[0].norm(), n2 = jsas[1].norm();
  if (!(n1 > 0.0) || !(n2 > 0.0))
    throw numeric_error("zero process amplitude in Bell construction");
  const std::complex<double> inner =
      (jsas[0].amplitude.conjugate() * jsas[1].amplitude).sum();
  r.overlap = std::abs(inner) / (n1 * n2);
  r.fidelity = 0.5 * (1.0 + r.overlap);
  return r;
}

CoincidenceMatrix coincidence_matrix(
    const ChannelWaveguide& wg, const std::vector<ModeTriplet>& triplets,
    const PumpSpec& pump, const std::array<SpectralFilter, 5>& signal_filters,
    const std::array<SpectralFilter, 5>& idler_filters,
    const CoincidenceOptions& opt) {
  pump.validate();
  if (triplets.empty()) throw config_error("coincidence needs processes");
  if (opt.signal_points < 2 || opt.idler_points < 2)
    throw config_error("coincidence grid too coarse");

  std::map<ModeLabel, std::vector<std::pair<ModeTriplet, double>>> by_pump;
  for (const ModeTriplet& t : triplets) by_pump[t.pump].push_back({t, 1.0});

  CoincidenceMatrix m;
  m.labels = {"A", "B", "C", "D", "E"};
  m.signal_filters = signal_filters;
  m.idler_filters = idler_filters;
  // One coincidence term for one assignment of passbands to the two axes.
  const auto term = [&](const SpectralFilter& on_s, const SpectralFilter& on_i) {
    const auto [slo, shi] = on_s.support();
    const auto [ilo, ihi] = on_i.support();
    const JsaGrid grid = JsaGrid::regular(slo, shi, ilo, ihi, opt.signal_points,
                                          opt.idler_points);
    double rate = 0.0;
    for (const auto& [pump_mode, procs] : by_pump) {
      const double frac = pump.fraction(pump_mode);
      if (frac <= 0.0) continue;
      const JointSpectralAmplitude filtered =
          apply_filters(build_jsa(wg, procs, pump, grid), on_s, on_i);
      rate += frac * filtered.amplitude.abs2().sum() * grid.cell_s() *
              grid.cell_i();
    }
    return rate;
  };
  // Symmetrized over which arm carries which passband: swapping the filter
  // sets then transposes the matrix exactly.
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      m.values(i, j) = term(signal_filters[i], idler_filters[j]) +
                       term(idler_filters[j], signal_filters[i]);
  const double peak = m.values.maxCoeff();
  if (!(peak > 0.0))
    throw numeric_error("all coincidence rates vanished under these filters");
  m.values /= peak;
  return m;
}

std::pair<std::array<SpectralFilter, 5>, std::array<SpectralFilter, 5>>
canonical_filters(const std::vector<ModeTriplet>& triplets,
                  SpectralFilter::Shape shape, double signal_fwhm_nm,
                  double idler_fwhm_nm) {
  std::array<SpectralFilter, 5> fs, fi;
  for (const PeakDefinition& def : labeled_peaks()) {
    const ModeTriplet* best = nullptr;
    for (const auto& [p, s, i] : def.processes)
      for (const ModeTriplet& t : triplets)
        if (t.pump == p && t.signal == s && t.idler == i && !t.peaks.empty() &&
            (!best || std::abs(t.overlap) > std::abs(best->overlap)))
          best = &t;
    if (!best) {
      std::ostringstream msg;
      msg << "peak " << def.id << " is not phase matched in this configuration";
      throw config_error(msg.str());
    }
    const int k = def.id - 'A';
    fs[k] = {shape, best->peaks.front()[0], signal_fwhm_nm};
    fi[k] = {shape, best->peaks.front()[1], idler_fwhm_nm};
  }
  // A passband wider than the closest pair of centers admits a neighboring
  // peak, so per arm the fwhm is clamped to the minimum center spacing.
  const auto clamp_to_spacing = [](std::array<SpectralFilter, 5>& f) {
    double sep = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b)
        sep = std::min(sep, std::abs(f[a].center_nm - f[b].center_nm));
    if (!(sep > 0.0))
      throw config_error("coincident peak centers: passbands cannot select");
    for (SpectralFilter& x : f) x.fwhm_nm = std::min(x.fwhm_nm, sep);
  };
  clamp_to_spacing(fs);
  clamp_to_spacing(fi);
  return {fs, fi};
}

}  // namespace wgpdc
