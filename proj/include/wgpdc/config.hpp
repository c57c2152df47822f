#pragma once

#include <array>
#include <string>

#include "wgpdc/fit.hpp"
#include "wgpdc/pdc.hpp"
#include "wgpdc/quantum.hpp"

namespace wgpdc {

struct RunConfig {
  WaveguideSpec waveguide;
  PumpSpec pump;
  std::string dispersion_path;  // resolved against the config location
  SellmeierModel dispersion;

  int grid_points = 512;
  double grid_half_width_nm = 40.0;

  SpectralFilter::Shape filter_shape = SpectralFilter::Shape::Rectangular;
  double signal_filter_fwhm_nm = 3.0;
  double idler_filter_fwhm_nm = 10.0;

  double overlap_threshold = 0.05;
  std::array<double, 2> signal_window_nm{766.0, 846.0};
  double discovery_half_width_nm = 70.0;  // peak search reach around degeneracy
  ModeLabel max_label{2, 4};

  FitParams fit_lower{8.5, 2.0, 6.0, 0.002};
  FitParams fit_upper{9.5, 8.0, 14.0, 0.03};
  int fit_max_evaluations = 480;

  std::string output_dir = "out";

  static RunConfig load(const std::string& path);

  ChannelWaveguide solver() const { return ChannelWaveguide(waveguide, dispersion); }
  // Default joint grid: degeneracy +- half width on both axes.
  JsaGrid default_grid() const;
  // Wide window used to locate every emission peak, filters included.
  std::array<double, 2> discovery_window_nm() const;
};

}  // namespace wgpdc
