#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgpdc/modesolver.hpp"

namespace wgpdc {

struct PumpSpec {
  double center_nm = 0.0;
  double fwhm_nm = 0.0;  // intensity FWHM of the Gaussian envelope
  std::map<ModeLabel, double> mode_fractions;

  void validate() const;
  double fraction(ModeLabel label) const;
  // Degenerate signal/idler wavelength 2*center.
  double degeneracy_nm() const { return 2.0 * center_nm; }
};

// Midpoint-rule resolution for the separable overlap integrals.
struct Quadrature {
  int nx = 481;
  int ny = 721;
  double pad_decay_lengths = 8.0;
};

// One pump/signal/idler mode combination. peaks holds every phase-matched
// root found inside the search window, (lambda_s, lambda_i) in nm.
struct ModeTriplet {
  ModeLabel pump, signal, idler;
  double overlap = 0.0;  // raw integral of the three unit-norm profiles, 1/um
  std::vector<std::array<double, 2>> peaks;

  bool higher_order() const {
    return !is_low_order(signal) || !is_low_order(idler);
  }
};

// Integral u_p * u_s * u_i over the cross section; factorizes into two 1D
// midpoint sums because the profiles are separable. Pump profile taken at the
// pump wavelength, signal/idler at degeneracy. Modes must share a cross
// section (else config_error).
double overlap_coefficient(const GuidedMode& pump, const GuidedMode& signal,
                           const GuidedMode& idler, const Quadrature& q = {});

// dbeta = beta_p(lambda_p) - beta_s(lambda_s) - beta_i(lambda_i) - K in 1/um,
// with lambda_i fixed by energy conservation at the pump center.
double phase_mismatch(const ChannelWaveguide& wg, ModeLabel pump,
                      ModeLabel signal, ModeLabel idler, double lambda_s_nm,
                      double lambda_p_nm);

// All sign-change roots of the phase mismatch over the window, bisected to
// well below 1e-4 nm, ascending in lambda_s. Empty when no sign change.
std::vector<std::array<double, 2>> find_peak(const ChannelWaveguide& wg,
                                             ModeLabel pump, ModeLabel signal,
                                             ModeLabel idler,
                                             std::array<double, 2> window_nm,
                                             double lambda_p_nm,
                                             int scan_points = 161);

// Guided pump modes (nonzero fraction) x guided signal x guided idler modes
// with |overlap| > threshold and at least one peak inside the window, sorted
// by signal peak wavelength.
std::vector<ModeTriplet> enumerate_triplets(const ChannelWaveguide& wg,
                                            const PumpSpec& pump,
                                            double threshold,
                                            std::array<double, 2> window_nm,
                                            ModeLabel max_label = {2, 4},
                                            const Quadrature& q = {},
                                            int scan_points = 161);

// Same search over an explicit pump-mode list, fractions ignored. Lets the
// coincidence analysis keep rows whose pump fraction is zero.
std::vector<ModeTriplet> enumerate_triplets_for_pumps(
    const ChannelWaveguide& wg, const std::vector<ModeLabel>& pump_labels,
    double lambda_p_nm, double threshold, std::array<double, 2> window_nm,
    ModeLabel max_label = {2, 4}, const Quadrature& q = {},
    int scan_points = 161);

struct JsaGrid {
  Eigen::ArrayXd lambda_s;  // nm, ascending
  Eigen::ArrayXd lambda_i;

  static JsaGrid regular(double s_lo, double s_hi, double i_lo, double i_hi,
                         int ns, int ni);
  double cell_s() const { return lambda_s[1] - lambda_s[0]; }
  double cell_i() const { return lambda_i[1] - lambda_i[0]; }
};

struct JointSpectralAmplitude {
  JsaGrid grid;
  Eigen::ArrayXXcd amplitude;  // rows index lambda_s, cols index lambda_i
  std::vector<std::pair<ModeTriplet, double>> processes;  // (triplet, weight)
  ModeLabel pump_mode;
  bool empty_support = false;

  double norm() const { return std::sqrt(amplitude.abs2().sum()); }
};

// amplitude = sum_proc weight * overlap * alpha(1/ls + 1/li) * sinc(dbeta*L/2),
// coherent over processes; all processes must share one pump mode.
JointSpectralAmplitude build_jsa(
    const ChannelWaveguide& wg,
    const std::vector<std::pair<ModeTriplet, double>>& processes,
    const PumpSpec& pump, const JsaGrid& grid);

struct MarginalSpectra {
  Eigen::ArrayXd lambda_s, signal;
  Eigen::ArrayXd lambda_i, idler;
};

// Incoherent sum over pump modes (power fractions), |A|^2 integrated over the
// conjugate arm. All JSAs must share one grid.
MarginalSpectra marginal_spectra(const std::vector<JointSpectralAmplitude>& jsas,
                                 const PumpSpec& pump);

// Flattened per-root view of an enumeration, one entry per phase-matched peak.
struct PeakEntry {
  ModeTriplet triplet;
  double lambda_s = 0.0;
  double lambda_i = 0.0;
};

std::vector<PeakEntry> flatten_peaks(const std::vector<ModeTriplet>& triplets);

// Single-linkage clusters on signal wavelength. Clusters containing at least
// one low-order process get letters A, B, ... ascending in wavelength;
// purely-higher-order clusters get H1, H2, ...
struct PeakCluster {
  std::vector<int> members;  // indices into the entry list
  double lambda_lo = 0.0, lambda_hi = 0.0;
  bool higher_order_only = false;
  std::string label;
};

std::vector<PeakCluster> cluster_peaks(const std::vector<PeakEntry>& entries,
                                       double linkage_nm = 3.0);

// The five labeled emission peaks defined by their mode combinations
// (pump, signal, idler).
struct PeakDefinition {
  char id;  // 'A'..'E'
  std::vector<std::array<ModeLabel, 3>> processes;
};

const std::array<PeakDefinition, 5>& labeled_peaks();

}  // namespace wgpdc
