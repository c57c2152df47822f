#pragma once

#include <array>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wgpdc/pdc.hpp"

namespace wgpdc {

struct SpectralFilter {
  enum class Shape { Rectangular, Gaussian };
  Shape shape = Shape::Rectangular;
  double center_nm = 0.0;
  double fwhm_nm = 0.0;

  // Peak transmission 1; FWHM measured on this curve.
  double transmission(double lambda_nm) const;
  // Wavelength span outside which the transmission is (numerically) zero.
  std::array<double, 2> support() const;
};

// Pointwise amplitude * t_s(lambda_s) * t_i(lambda_i). A passband missing the
// grid entirely yields the all-zero amplitude with empty_support set, not an
// error.
JointSpectralAmplitude apply_filters(const JointSpectralAmplitude& jsa,
                                     const SpectralFilter& fs,
                                     const SpectralFilter& fi);

// amplitude = norm * sum_k coefficients[k] * signal_modes.col(k) *
// idler_modes.col(k)^T, coefficients non-increasing with unit square sum,
// mode columns orthonormal under the plain grid dot product.
struct SchmidtDecomposition {
  Eigen::ArrayXd coefficients;
  Eigen::MatrixXcd signal_modes;
  Eigen::MatrixXcd idler_modes;
  double norm = 0.0;
  double schmidt_number = 0.0;  // 1 / sum coefficients^4
  double reconstruction_error = 0.0;
};

// Singular-value factorization of the discretized amplitude. Zero amplitude
// throws numeric_error.
SchmidtDecomposition schmidt(const JointSpectralAmplitude& jsa);

struct SpatialTwoModeState {
  std::string form;  // "Psi+" or "Phi+"
  std::vector<std::pair<ModeLabel, ModeLabel>> basis;  // (signal, idler)
  std::vector<std::complex<double>> coefficients;      // unit norm
};

struct BellResult {
  SpatialTwoModeState state;
  double overlap = 0.0;   // normalized |<A1,A2>| between the process JSAs
  double fidelity = 0.0;  // (1 + overlap) / 2, a diagnostic proxy
};

// peak must name a two-process emission peak (B, D or E); triplets/jsas hold
// the two processes and their single-process amplitudes on a shared grid.
// Crossed mode pairs give |Psi+>, matched pairs |Phi+>. Single-process peaks
// (A, C) throw std::invalid_argument.
BellResult bell_state(char peak, const std::vector<ModeTriplet>& triplets,
                      const std::vector<JointSpectralAmplitude>& jsas);

struct CoincidenceMatrix {
  std::array<std::string, 5> labels;
  Eigen::Matrix<double, 5, 5> values;  // max entry exactly 1
  std::array<SpectralFilter, 5> signal_filters, idler_filters;
};

struct CoincidenceOptions {
  int signal_points = 257;  // per-entry local grid resolution
  int idler_points = 257;
};

// entry(i,j) = sum over pump modes of fraction * integral of the filtered
// |amplitude|^2, with setting i on one arm and setting j on the other,
// symmetrized over the two arm assignments so swapping the filter sets
// transposes the matrix exactly; processes sharing a pump mode add
// coherently. Normalized to max entry 1.
CoincidenceMatrix coincidence_matrix(
    const ChannelWaveguide& wg, const std::vector<ModeTriplet>& triplets,
    const PumpSpec& pump, const std::array<SpectralFilter, 5>& signal_filters,
    const std::array<SpectralFilter, 5>& idler_filters,
    const CoincidenceOptions& opt = {});

// One filter pair per labeled peak A..E, centered on the strongest-overlap
// process peak present in the triplet list; config_error when a peak's
// processes are all missing. Per arm the passband fwhm is clamped to the
// minimum spacing between the five centers: a band wider than the closest
// pair of peaks admits a neighbor and cannot select one peak.
std::pair<std::array<SpectralFilter, 5>, std::array<SpectralFilter, 5>>
canonical_filters(const std::vector<ModeTriplet>& triplets,
                  SpectralFilter::Shape shape, double signal_fwhm_nm,
                  double idler_fwhm_nm);

}  // namespace wgpdc
