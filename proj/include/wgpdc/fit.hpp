#pragma once

#include <array>
#include <string>
#include <vector>

#include "wgpdc/pdc.hpp"

namespace wgpdc {

enum class Arm { Signal, Idler };

std::string to_string(Arm arm);
Arm arm_from_string(const std::string& s);

struct MeasuredPeak {
  Arm arm = Arm::Signal;
  double wavelength_nm = 0.0;
  double weight = 1.0;
};

struct FitParams {
  double period_um = 0.0;
  double width_um = 0.0;
  double depth_um = 0.0;
  double delta_n = 0.0;

  std::array<double, 4> to_array() const {
    return {period_um, width_um, depth_um, delta_n};
  }
  static FitParams from_array(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
};

struct FitProblem {
  WaveguideSpec base;  // carries length, orientation; geometry overridden
  SellmeierModel dispersion;
  PumpSpec pump;
  std::vector<MeasuredPeak> measured;
  FitParams lower{8.5, 2.0, 6.0, 0.002};
  FitParams upper{9.5, 8.0, 14.0, 0.03};
  std::array<double, 2> window_nm{740.0, 880.0};
  double overlap_threshold = 0.05;
  ModeLabel max_label{2, 4};
  // Coarse forward model keeps each objective evaluation cheap.
  Quadrature quadrature{161, 241, 6.0};
  int scan_points = 81;
  double gate_nm = 5.0;  // nearest-peak matching gate; gate^2 is the penalty
  double line_linkage_nm = 3.0;  // roots closer than this blend into one line

  void validate() const;
  ChannelWaveguide instantiate(const FitParams& x) const;
};

// Per-arm spectral line centers of the model at x: phase-matched process
// roots merged by single linkage (gap <= line_linkage_nm), position = member
// mean. Spectrometers resolve lines, not individual process roots; fitting
// line centers is what keeps the objective comparable to measured data.
// [0] = signal, [1] = idler, each ascending. Degenerate geometry -> empty.
std::array<std::vector<double>, 2> model_line_centers(const FitProblem& p,
                                                      const FitParams& x);

// Weighted squared line-position mismatch in nm^2. Each model line center
// pays min(d^2, gate^2) against its nearest measured peak in the same arm,
// scaled by that peak's weight; measured peaks left without any model line
// inside the gate pay weight * gate^2. No guided modes at all -> full penalty.
double fit_objective(const FitProblem& p, const FitParams& x);

struct FitOptions {
  int max_evaluations = 480;
  double simplex_tolerance = 1e-6;  // on vertex spread, parameter units
  double initial_step_fraction = 0.25;
  bool use_stage1 = true;  // false: descend the full objective directly
};

struct TraceEntry {
  FitParams params;
  double objective = 0.0;
  int stage = 1;
};

struct FitResult {
  FitParams params;
  double objective = 0.0;
  int evaluations = 0;
  int stage1_evaluations = 0;
  bool converged = false;  // simplex collapsed below tolerance, not budget-cut
  std::vector<TraceEntry> trace;
};

// Two-stage bounded Nelder-Mead: stage 1 adjusts the poling period alone
// against the extreme measured pair (shortest signal, longest idler), stage 2
// releases all four parameters on the full objective, restarting a fresh
// simplex at the incumbent while restarts keep strictly improving and budget
// remains (plain Nelder-Mead stalls on the kinked matching landscape).
// Deterministic.
FitResult fit(const FitProblem& p, const FitParams& seed,
              const FitOptions& opt = {});

// CSV rows "arm,wavelength_nm[,weight]"; a leading header row is skipped.
std::vector<MeasuredPeak> read_measured_csv(const std::string& path);

}  // namespace wgpdc
