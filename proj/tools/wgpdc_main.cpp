// wgpdc: guided-mode, phase-matching and two-photon analysis pipeline.
//
// Every command reads one JSON config, writes deterministic artifacts into
// the output directory plus a small manifest describing the run. Exit codes:
// 0 success, 2 configuration/validation error, 3 numerical failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wgpdc/config.hpp"
#include "wgpdc/errors.hpp"
#include "wgpdc/fit.hpp"
#include "wgpdc/io.hpp"
#include "wgpdc/pdc.hpp"
#include "wgpdc/quantum.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace wgpdc;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // empty: use config's output_dir
};

std::string label_str(ModeLabel l) {
  return std::to_string(l.m) + "," + std::to_string(l.n);
}

fs::path prepare_out(const CommonArgs& args, const RunConfig& cfg) {
  const fs::path out = args.out_dir.empty() ? fs::path(cfg.output_dir)
                                            : fs::path(args.out_dir);
  fs::create_directories(out);
  return out;
}

void write_manifest(const fs::path& out, const std::string& name,
                    ordered_json manifest, const CommonArgs& args) {
  manifest["config_file"] = fs::path(args.config_path).filename().string();
  write_text_file((out / name).string(), manifest.dump(2) + "\n");
}

char parse_peak(const std::string& s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'E') return s[0];
  throw config_error("unknown peak label '" + s + "', expected A..E");
}

ordered_json filter_json(const SpectralFilter& f) {
  return {{"shape", f.shape == SpectralFilter::Shape::Rectangular
                        ? "rectangular"
                        : "gaussian"},
          {"center_nm", f.center_nm},
          {"fwhm_nm", f.fwhm_nm}};
}

ordered_json params_json(const FitParams& x) {
  return {{"poling_period_um", x.period_um},
          {"width_um", x.width_um},
          {"depth_um", x.depth_um},
          {"delta_n", x.delta_n}};
}

// Triplets of the whole discovery window regardless of pump fraction;
// filter derivation and per-peak analysis both key off this list.
std::vector<ModeTriplet> discover(const RunConfig& cfg,
                                  const ChannelWaveguide& wg) {
  std::vector<ModeLabel> pump_labels;
  for (const auto& [label, frac] : cfg.pump.mode_fractions)
    pump_labels.push_back(label);
  return enumerate_triplets_for_pumps(wg, pump_labels, cfg.pump.center_nm,
                                      cfg.overlap_threshold,
                                      cfg.discovery_window_nm(), cfg.max_label);
}

// The subset of the discovery list matching the labeled peak's process table,
// in table order.
std::vector<ModeTriplet> select_peak(const std::vector<ModeTriplet>& triplets,
                                     char peak) {
  const PeakDefinition& def = labeled_peaks()[peak - 'A'];
  std::vector<ModeTriplet> sel;
  for (const auto& [p, s, i] : def.processes)
    for (const ModeTriplet& t : triplets)
      if (t.pump == p && t.signal == s && t.idler == i) sel.push_back(t);
  if (sel.empty())
    throw config_error(std::string("peak ") + peak +
                       " is not phase matched in this configuration");
  return sel;
}

JsaGrid peak_grid(const RunConfig& cfg, const std::vector<ModeTriplet>& sel) {
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  double imin = smin, imax = -smin;
  for (const ModeTriplet& t : sel)
    for (const auto& pk : t.peaks) {
      smin = std::min(smin, pk[0]);
      smax = std::max(smax, pk[0]);
      imin = std::min(imin, pk[1]);
      imax = std::max(imax, pk[1]);
    }
  // Pads cover the filter supports and the pump-envelope ridge.
  return JsaGrid::regular(smin - 8.0, smax + 8.0, imin - 12.0, imax + 12.0,
                          cfg.grid_points, cfg.grid_points);
}

std::pair<SpectralFilter, SpectralFilter> peak_filters(
    const RunConfig& cfg, const std::vector<ModeTriplet>& sel) {
  const ModeTriplet* best = &sel.front();
  for (const ModeTriplet& t : sel)
    if (std::abs(t.overlap) > std::abs(best->overlap)) best = &t;
  SpectralFilter fs{cfg.filter_shape, best->peaks.front()[0],
                    cfg.signal_filter_fwhm_nm};
  SpectralFilter fi{cfg.filter_shape, best->peaks.front()[1],
                    cfg.idler_filter_fwhm_nm};
  return {fs, fi};
}

void write_jsa_artifacts(const fs::path& out, const std::string& tag,
                         const JointSpectralAmplitude& jsa,
                         const CommonArgs& args, ordered_json extra) {
  std::vector<std::vector<std::string>> srows, irows;
  for (Eigen::Index j = 0; j < jsa.grid.lambda_s.size(); ++j)
    srows.push_back({sci(jsa.grid.lambda_s[j])});
  for (Eigen::Index k = 0; k < jsa.grid.lambda_i.size(); ++k)
    irows.push_back({sci(jsa.grid.lambda_i[k])});
  write_csv((out / ("jsa_" + tag + "_signal_axis.csv")).string(),
            {"lambda_nm"}, srows);
  write_csv((out / ("jsa_" + tag + "_idler_axis.csv")).string(), {"lambda_nm"},
            irows);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(jsa.amplitude.size());
  for (Eigen::Index j = 0; j < jsa.grid.lambda_s.size(); ++j)
    for (Eigen::Index k = 0; k < jsa.grid.lambda_i.size(); ++k)
      rows.push_back({sci(jsa.grid.lambda_s[j]), sci(jsa.grid.lambda_i[k]),
                      sci(jsa.amplitude(j, k).real()),
                      sci(jsa.amplitude(j, k).imag())});
  write_csv((out / ("jsa_" + tag + "_amplitude.csv")).string(),
            {"lambda_s_nm", "lambda_i_nm", "re", "im"}, rows);

  // Top image row = longest signal wavelength.
  write_pgm((out / ("jsa_" + tag + ".pgm")).string(),
            jsa.amplitude.abs().colwise().reverse());

  ordered_json man;
  man["command"] = "jsa";
  for (auto& [k, v] : extra.items()) man[k] = v;
  man["pump_mode"] = label_str(jsa.pump_mode);
  ordered_json procs = ordered_json::array();
  for (const auto& [t, w] : jsa.processes)
    procs.push_back({{"pump", label_str(t.pump)},
                     {"signal", label_str(t.signal)},
                     {"idler", label_str(t.idler)},
                     {"overlap", t.overlap},
                     {"weight", w}});
  man["processes"] = procs;
  man["image_quantity"] = "abs_amplitude";
  man["empty_support"] = jsa.empty_support;
  man["outputs"] = {"jsa_" + tag + "_signal_axis.csv",
                    "jsa_" + tag + "_idler_axis.csv",
                    "jsa_" + tag + "_amplitude.csv", "jsa_" + tag + ".pgm"};
  write_manifest(out, "jsa_" + tag + "_manifest.json", man, args);
}

int cmd_modes(const CommonArgs& args, double lambda_nm, const std::string& pol) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  Polarization p;
  if (pol == "y")
    p = Polarization::Y;
  else if (pol == "z")
    p = Polarization::Z;
  else
    throw config_error("polarization must be y or z, got '" + pol + "'");

  const auto modes = cfg.solver().solve(p, lambda_nm, cfg.max_label);
  std::vector<std::vector<std::string>> rows;
  for (const GuidedMode& m : modes)
    rows.push_back({std::to_string(m.label.m), std::to_string(m.label.n),
                    sci(m.n_eff)});
  const std::string csv = csv_string({"label_m", "label_n", "n_eff"}, rows);
  std::cout << csv;

  const fs::path out = prepare_out(args, cfg);
  write_text_file((out / "modes.csv").string(), csv);
  ordered_json man{{"command", "modes"},
                   {"lambda_nm", lambda_nm},
                   {"polarization", pol},
                   {"mode_count", rows.size()},
                   {"outputs", {"modes.csv"}}};
  write_manifest(out, "modes_manifest.json", man, args);
  return 0;
}

int cmd_peaks(const CommonArgs& args) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const auto triplets =
      enumerate_triplets(wg, cfg.pump, cfg.overlap_threshold,
                         cfg.signal_window_nm, cfg.max_label);
  const auto entries = flatten_peaks(triplets);
  const auto clusters = cluster_peaks(entries);

  std::vector<std::string> entry_cluster(entries.size());
  for (const PeakCluster& c : clusters)
    for (int idx : c.members) entry_cluster[idx] = c.label;

  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const PeakEntry& e = entries[k];
    rows.push_back({std::to_string(e.triplet.pump.m),
                    std::to_string(e.triplet.pump.n),
                    std::to_string(e.triplet.signal.m),
                    std::to_string(e.triplet.signal.n),
                    std::to_string(e.triplet.idler.m),
                    std::to_string(e.triplet.idler.n), sci(e.triplet.overlap),
                    sci(e.lambda_s), sci(e.lambda_i),
                    e.triplet.higher_order() ? "1" : "0", entry_cluster[k]});
  }
  const std::string csv = csv_string(
      {"pump_m", "pump_n", "signal_m", "signal_n", "idler_m", "idler_n",
       "overlap", "lambda_s_nm", "lambda_i_nm", "higher_order", "cluster"},
      rows);
  std::cout << csv;

  const fs::path out = prepare_out(args, cfg);
  write_text_file((out / "peaks.csv").string(), csv);
  ordered_json man{{"command", "peaks"},
                   {"signal_window_nm", cfg.signal_window_nm},
                   {"process_count", triplets.size()},
                   {"peak_count", entries.size()},
                   {"cluster_count", clusters.size()},
                   {"outputs", {"peaks.csv"}}};
  write_manifest(out, "peaks_manifest.json", man, args);
  return 0;
}

int cmd_spectrum(const CommonArgs& args) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const auto triplets =
      enumerate_triplets(wg, cfg.pump, cfg.overlap_threshold,
                         cfg.signal_window_nm, cfg.max_label);
  if (triplets.empty())
    throw numeric_error("no phase-matched processes in the signal window");

  std::map<ModeLabel, std::vector<std::pair<ModeTriplet, double>>> by_pump;
  for (const ModeTriplet& t : triplets) by_pump[t.pump].push_back({t, 1.0});
  const JsaGrid grid = cfg.default_grid();
  std::vector<JointSpectralAmplitude> jsas;
  for (const auto& [pump_mode, procs] : by_pump)
    jsas.push_back(build_jsa(wg, procs, cfg.pump, grid));
  const MarginalSpectra m = marginal_spectra(jsas, cfg.pump);

  const fs::path out = prepare_out(args, cfg);
  std::vector<std::vector<std::string>> srows, irows;
  for (Eigen::Index j = 0; j < m.lambda_s.size(); ++j)
    srows.push_back({sci(m.lambda_s[j]), sci(m.signal[j])});
  for (Eigen::Index k = 0; k < m.lambda_i.size(); ++k)
    irows.push_back({sci(m.lambda_i[k]), sci(m.idler[k])});
  write_csv((out / "spectrum_signal.csv").string(), {"lambda_nm", "intensity"},
            srows);
  write_csv((out / "spectrum_idler.csv").string(), {"lambda_nm", "intensity"},
            irows);
  ordered_json man{{"command", "spectrum"},
                   {"grid_points", cfg.grid_points},
                   {"half_width_nm", cfg.grid_half_width_nm},
                   {"process_count", triplets.size()},
                   {"outputs", {"spectrum_signal.csv", "spectrum_idler.csv"}}};
  write_manifest(out, "spectrum_manifest.json", man, args);
  return 0;
}

int cmd_jsa(const CommonArgs& args, const std::string& peak_opt) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const fs::path out = prepare_out(args, cfg);

  if (!peak_opt.empty()) {
    const char peak = parse_peak(peak_opt);
    const auto sel = select_peak(discover(cfg, wg), peak);
    std::vector<std::pair<ModeTriplet, double>> procs;
    for (const ModeTriplet& t : sel) procs.push_back({t, 1.0});
    const auto jsa = build_jsa(wg, procs, cfg.pump, peak_grid(cfg, sel));
    write_jsa_artifacts(out, std::string("peak_") + peak, jsa, args,
                        {{"peak", std::string(1, peak)}});
    return 0;
  }

  const auto triplets =
      enumerate_triplets(wg, cfg.pump, cfg.overlap_threshold,
                         cfg.signal_window_nm, cfg.max_label);
  if (triplets.empty())
    throw numeric_error("no phase-matched processes in the signal window");
  std::map<ModeLabel, std::vector<std::pair<ModeTriplet, double>>> by_pump;
  for (const ModeTriplet& t : triplets) by_pump[t.pump].push_back({t, 1.0});
  const JsaGrid grid = cfg.default_grid();
  for (const auto& [pump_mode, procs] : by_pump) {
    const auto jsa = build_jsa(wg, procs, cfg.pump, grid);
    const std::string tag =
        "pump_" + std::to_string(pump_mode.m) + "_" + std::to_string(pump_mode.n);
    write_jsa_artifacts(out, tag, jsa, args, ordered_json::object());
  }
  return 0;
}

int cmd_schmidt(const CommonArgs& args, const std::string& peak_opt) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const char peak = parse_peak(peak_opt);
  const auto sel = select_peak(discover(cfg, wg), peak);

  std::vector<std::pair<ModeTriplet, double>> procs;
  for (const ModeTriplet& t : sel) procs.push_back({t, 1.0});
  const auto jsa = build_jsa(wg, procs, cfg.pump, peak_grid(cfg, sel));
  const auto [fs_filt, fi_filt] = peak_filters(cfg, sel);
  const auto filtered = apply_filters(jsa, fs_filt, fi_filt);
  const SchmidtDecomposition d = schmidt(filtered);

  ordered_json rep;
  rep["coefficients"] = std::vector<double>(
      d.coefficients.data(), d.coefficients.data() + d.coefficients.size());
  rep["schmidt_number"] = d.schmidt_number;
  rep["reconstruction_error"] = d.reconstruction_error;
  const fs::path out = prepare_out(args, cfg);
  const std::string name = std::string("schmidt_") + peak + ".json";
  write_text_file((out / name).string(), rep.dump(2) + "\n");

  ordered_json man{{"command", "schmidt"},
                   {"peak", std::string(1, peak)},
                   {"signal_filter", filter_json(fs_filt)},
                   {"idler_filter", filter_json(fi_filt)},
                   {"grid_points", cfg.grid_points},
                   {"outputs", {name}}};
  write_manifest(out, std::string("schmidt_") + peak + "_manifest.json", man,
                 args);
  std::cout << "schmidt_number " << d.schmidt_number << "\n";
  return 0;
}

int cmd_bell(const CommonArgs& args, const std::string& peak_opt) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const char peak = parse_peak(peak_opt);
  const auto sel = select_peak(discover(cfg, wg), peak);
  // bell_state validates the process count and the peak identity.
  const JsaGrid grid =
      sel.size() == 2 ? peak_grid(cfg, sel) : cfg.default_grid();
  std::vector<JointSpectralAmplitude> jsas;
  for (const ModeTriplet& t : sel)
    jsas.push_back(build_jsa(wg, {{t, 1.0}}, cfg.pump, grid));
  const BellResult r = bell_state(peak, sel, jsas);

  ordered_json rep;
  rep["peak"] = std::string(1, peak);
  rep["form"] = r.state.form;
  ordered_json basis = ordered_json::array();
  for (const auto& [s, i] : r.state.basis)
    basis.push_back({{"signal", label_str(s)}, {"idler", label_str(i)}});
  rep["basis"] = basis;
  rep["coefficients"] = {r.state.coefficients[0].real(),
                         r.state.coefficients[1].real()};
  rep["spectral_overlap"] = r.overlap;
  rep["fidelity"] = r.fidelity;
  rep["fidelity_definition"] =
      "(1 + normalized spectral overlap) / 2; artifact diagnostic";
  const fs::path out = prepare_out(args, cfg);
  const std::string name = std::string("bell_") + peak + ".json";
  write_text_file((out / name).string(), rep.dump(2) + "\n");

  ordered_json man{{"command", "bell"},
                   {"peak", std::string(1, peak)},
                   {"grid_points", cfg.grid_points},
                   {"outputs", {name}}};
  write_manifest(out, std::string("bell_") + peak + "_manifest.json", man, args);
  std::cout << r.state.form << " fidelity " << r.fidelity << "\n";
  return 0;
}

int cmd_coinc(const CommonArgs& args) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const auto triplets = discover(cfg, wg);
  const auto [fs_filt, fi_filt] =
      canonical_filters(triplets, cfg.filter_shape, cfg.signal_filter_fwhm_nm,
                        cfg.idler_filter_fwhm_nm);
  const CoincidenceMatrix m =
      coincidence_matrix(wg, triplets, cfg.pump, fs_filt, fi_filt);

  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 5; ++i) {
    std::vector<std::string> row{m.labels[i]};
    for (int j = 0; j < 5; ++j) row.push_back(sci(m.values(i, j)));
    rows.push_back(row);
  }
  const std::string csv =
      csv_string({"peak", "A", "B", "C", "D", "E"}, rows);
  std::cout << csv;

  const fs::path out = prepare_out(args, cfg);
  write_text_file((out / "coincidences.csv").string(), csv);
  ordered_json man{{"command", "coinc"}};
  ordered_json fsj = ordered_json::array(), fij = ordered_json::array();
  for (int i = 0; i < 5; ++i) {
    fsj.push_back(filter_json(m.signal_filters[i]));
    fij.push_back(filter_json(m.idler_filters[i]));
  }
  man["signal_filters"] = fsj;
  man["idler_filters"] = fij;
  man["outputs"] = {"coincidences.csv"};
  write_manifest(out, "coinc_manifest.json", man, args);
  return 0;
}

int cmd_render(const CommonArgs& args, const std::string& peak_opt,
               const std::string& arm_opt) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  const ChannelWaveguide wg = cfg.solver();
  const char peak = parse_peak(peak_opt);
  const Arm arm = arm_from_string(arm_opt);
  const auto sel = select_peak(discover(cfg, wg), peak);

  // Intensity weights from the process overlaps.
  std::map<ModeLabel, double> weights;
  for (const ModeTriplet& t : sel) {
    const ModeLabel l = (arm == Arm::Signal) ? t.signal : t.idler;
    weights[l] += t.overlap * t.overlap;
  }
  double wsum = 0.0;
  for (const auto& [l, w] : weights) wsum += w;

  const Polarization pol =
      (arm == Arm::Signal) ? kSignalPolarization : kIdlerPolarization;
  const double ldeg = cfg.pump.degeneracy_nm();
  std::vector<GuidedMode> modes;
  std::vector<double> wlist;
  for (const auto& [l, w] : weights) {
    const auto m = wg.mode(l, pol, ldeg);
    if (!m) throw numeric_error("arm mode cut off at degeneracy");
    modes.push_back(*m);
    wlist.push_back(w / wsum);
  }
  const ProfileGrid grid = bounding_grid(modes, 6.0, 384, 384);
  Eigen::ArrayXXd img = Eigen::ArrayXXd::Zero(grid.ny, grid.nx);
  for (std::size_t k = 0; k < modes.size(); ++k)
    img += wlist[k] * mode_profile(modes[k], grid).square();

  const fs::path out = prepare_out(args, cfg);
  const std::string name =
      std::string("render_") + peak + "_" + arm_opt + ".pgm";
  // Top image row = air side (largest y).
  write_pgm((out / name).string(), img.colwise().reverse());

  ordered_json man{{"command", "render"},
                   {"peak", std::string(1, peak)},
                   {"arm", arm_opt},
                   {"lambda_nm", ldeg}};
  ordered_json mj = ordered_json::array();
  for (std::size_t k = 0; k < modes.size(); ++k)
    mj.push_back({{"mode", label_str(modes[k].label)}, {"weight", wlist[k]}});
  man["modes"] = mj;
  man["grid"] = {{"x_min_um", grid.x_min}, {"x_max_um", grid.x_max},
                 {"y_min_um", grid.y_min}, {"y_max_um", grid.y_max},
                 {"nx", grid.nx},          {"ny", grid.ny}};
  man["outputs"] = {name};
  write_manifest(out, std::string("render_") + peak + "_" + arm_opt +
                          "_manifest.json",
                 man, args);
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& measured_path,
            std::vector<double> seed_opt) {
  const RunConfig cfg = RunConfig::load(args.config_path);
  FitProblem prob;
  prob.base = cfg.waveguide;
  prob.dispersion = cfg.dispersion;
  prob.pump = cfg.pump;
  prob.measured = read_measured_csv(measured_path);
  prob.lower = cfg.fit_lower;
  prob.upper = cfg.fit_upper;
  prob.window_nm = cfg.discovery_window_nm();
  prob.overlap_threshold = cfg.overlap_threshold;
  prob.max_label = cfg.max_label;

  FitParams seed;
  if (seed_opt.empty()) {
    seed = {0.5 * (prob.lower.period_um + prob.upper.period_um),
            0.5 * (prob.lower.width_um + prob.upper.width_um),
            0.5 * (prob.lower.depth_um + prob.upper.depth_um),
            0.5 * (prob.lower.delta_n + prob.upper.delta_n)};
  } else if (seed_opt.size() == 4) {
    seed = {seed_opt[0], seed_opt[1], seed_opt[2], seed_opt[3]};
  } else {
    throw config_error("--seed needs four values: period width depth delta_n");
  }

  FitOptions opt;
  opt.max_evaluations = cfg.fit_max_evaluations;
  const FitResult res = fit(prob, seed, opt);

  ordered_json rep;
  rep["seed"] = params_json(seed);
  rep["parameters"] = params_json(res.params);
  rep["objective_nm2"] = res.objective;
  rep["evaluations"] = res.evaluations;
  rep["stage1_evaluations"] = res.stage1_evaluations;
  rep["converged"] = res.converged;
  ordered_json trace = ordered_json::array();
  for (const TraceEntry& e : res.trace) {
    ordered_json t = params_json(e.params);
    t["objective_nm2"] = e.objective;
    t["stage"] = e.stage;
    trace.push_back(t);
  }
  rep["trace"] = trace;
  const fs::path out = prepare_out(args, cfg);
  write_text_file((out / "fit_report.json").string(), rep.dump(2) + "\n");

  ordered_json man{{"command", "fit"},
                   {"measured_file", fs::path(measured_path).filename().string()},
                   {"measured_count", prob.measured.size()},
                   {"outputs", {"fit_report.json"}}};
  write_manifest(out, "fit_manifest.json", man, args);
  std::cout << "objective " << res.objective << " after " << res.evaluations
            << " evaluations\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided-mode parametric down-conversion toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  double lambda_nm = 0.0;
  std::string pol = "y", peak, arm, measured;
  std::vector<double> seed;
  int rc = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "config JSON path")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir,
                    "output directory (default: config output_dir)");
  };

  auto* modes = app.add_subcommand("modes", "guided-mode table at a wavelength");
  add_common(modes);
  modes->add_option("--lambda-nm", lambda_nm, "vacuum wavelength in nm")
      ->required();
  modes->add_option("--pol", pol, "polarization: y or z")->required();
  modes->callback([&] { rc = cmd_modes(common, lambda_nm, pol); });

  auto* peaks = app.add_subcommand("peaks", "phase-matched process table");
  add_common(peaks);
  peaks->callback([&] { rc = cmd_peaks(common); });

  auto* spectrum = app.add_subcommand("spectrum", "marginal emission spectra");
  add_common(spectrum);
  spectrum->callback([&] { rc = cmd_spectrum(common); });

  auto* jsa = app.add_subcommand("jsa", "joint spectral amplitude grids");
  add_common(jsa);
  jsa->add_option("--peak", peak, "restrict to one labeled peak A..E");
  jsa->callback([&] { rc = cmd_jsa(common, peak); });

  auto* schmidt_cmd =
      app.add_subcommand("schmidt", "Schmidt decomposition of a filtered peak");
  add_common(schmidt_cmd);
  schmidt_cmd->add_option("--peak", peak, "labeled peak A..E")->required();
  schmidt_cmd->callback([&] { rc = cmd_schmidt(common, peak); });

  auto* bell = app.add_subcommand("bell", "Bell-state analysis of a peak");
  add_common(bell);
  bell->add_option("--peak", peak, "two-process peak: B, D or E")->required();
  bell->callback([&] { rc = cmd_bell(common, peak); });

  auto* coinc = app.add_subcommand("coinc", "coincidence matrix across peaks");
  add_common(coinc);
  coinc->callback([&] { rc = cmd_coinc(common); });

  auto* render = app.add_subcommand("render", "transverse mode image of a peak");
  add_common(render);
  render->add_option("--peak", peak, "labeled peak A..E")->required();
  render->add_option("--arm", arm, "signal or idler")->required();
  render->callback([&] { rc = cmd_render(common, peak, arm); });

  auto* fit_cmd = app.add_subcommand("fit", "fit waveguide parameters to peaks");
  add_common(fit_cmd);
  fit_cmd->add_option("--measured", measured, "measured-peak CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--seed", seed,
                      "seed: period_um width_um depth_um delta_n")
      ->expected(4);
  fit_cmd->callback([&] { rc = cmd_fit(common, measured, seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "range error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
