#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <wgpdc/modesolver.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace wgpdc;

#ifndef WGPDC_SOURCE_DIR
#error "WGPDC_SOURCE_DIR must point at the repository root"
#endif

namespace {

const char* kDataFile = WGPDC_SOURCE_DIR "/data/ktp_sellmeier_kato2002.json";

WaveguideSpec pinned_spec() {
  WaveguideSpec s;
  s.width_um = 4.1;
  s.depth_um = 9.3;
  s.delta_n = 0.008;
  s.length_mm = 10.0;
  s.poling = {8.92, 1};
  return s;
}

ChannelWaveguide pinned_guide() {
  return ChannelWaveguide(pinned_spec(), SellmeierModel::load(kDataFile));
}

// Oracle: brute-force dense scan of the slab eigenvalue equation. Written
// against the same physics but with an unrelated root-finding strategy:
// sample G(n) - m*pi on a uniform grid, bisect every sign change. Slow and
// simple on purpose.
std::vector<double> dense_scan_slab(double n_left, double n_core,
                                    double n_right, double thickness_um,
                                    double lambda_nm) {
  const double k0 = 2.0 * std::numbers::pi / (lambda_nm * 1e-3);
  const double n_lo = std::max(n_left, n_right);
  auto G = [&](double n) {
    const double kap = k0 * std::sqrt(std::max(n_core * n_core - n * n, 0.0));
    const double gl = k0 * std::sqrt(std::max(n * n - n_left * n_left, 0.0));
    const double gr = k0 * std::sqrt(std::max(n * n - n_right * n_right, 0.0));
    return kap * thickness_um - std::atan2(gl, kap) - std::atan2(gr, kap);
  };
  std::vector<double> roots;
  const int kSamples = 40000;
  const double a = n_lo, b = n_core;
  for (int m = 0;; ++m) {
    auto H = [&](double n) { return G(n) - m * std::numbers::pi; };
    // G decreases in n, so the m-th branch lives where H changes sign.
    if (H(a) < 0.0) break;  // no root for this or any larger m
    double prev_n = a, prev_h = H(a);
    bool found = false;
    for (int i = 1; i <= kSamples; ++i) {
      const double n = a + (b - a) * i / kSamples;
      const double h = H(n);
      if ((prev_h > 0.0) != (h > 0.0) || h == 0.0) {
        double lo = prev_n, hi = n;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((H(mid) > 0.0) == (prev_h > 0.0)) lo = mid;
          else hi = mid;
        }
        roots.push_back(0.5 * (lo + hi));
        found = true;
        break;
      }
      prev_n = n;
      prev_h = h;
    }
    if (!found) break;
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

}  // namespace

TEST_CASE("solve_slab agrees with the dense-scan oracle on random slabs") {
  std::mt19937 rng(20260815u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int total_roots = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double n_left = 1.0 + 1.2 * u01(rng);
    const double n_right = (trial % 3 == 0) ? n_left : 1.0 + 1.2 * u01(rng);
    const double n_core = std::max(n_left, n_right) + 0.002 + 0.3 * u01(rng);
    const double t = 0.5 + 11.5 * u01(rng);
    const double lam = 380.0 + 1220.0 * u01(rng);

    const std::vector<double> got = solve_slab(n_left, n_core, n_right, t, lam);
    const std::vector<double> want = dense_scan_slab(n_left, n_core, n_right, t, lam);
    REQUIRE(got.size() == want.size());  // no missed or spurious roots
    for (size_t k = 0; k < got.size(); ++k) {
      CHECK(std::abs(got[k] - want[k]) < 1e-10);
    }
    total_roots += static_cast<int>(got.size());
  }
  CHECK(total_roots > 100);  // the draw covers plenty of multimode slabs
}

TEST_CASE("solve_slab root count matches the V-parameter cutoff count") {
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const double n_left = 1.0 + 1.0 * u01(rng);
    const double n_right = 1.0 + 1.0 * u01(rng);
    const double n_core = std::max(n_left, n_right) + 0.005 + 0.4 * u01(rng);
    const double t = 0.5 + 9.5 * u01(rng);
    const double lam = 400.0 + 1000.0 * u01(rng);
    CHECK(static_cast<int>(solve_slab(n_left, n_core, n_right, t, lam).size()) ==
          slab_mode_count_vparam(n_left, n_core, n_right, t, lam));
  }
}

TEST_CASE("slab roots satisfy the phase equation and stay ordered") {
  const double nl = 1.0, nc = 1.81, nr = 1.80, t = 9.3, lam = 403.3;
  const std::vector<SlabMode> modes = solve_slab_modes(nl, nc, nr, t, lam);
  REQUIRE(!modes.empty());
  for (size_t k = 0; k < modes.size(); ++k) {
    const SlabMode& md = modes[k];
    CHECK(md.nodes == static_cast<int>(k));
    CHECK(md.n_eff > std::max(nl, nr));
    CHECK(md.n_eff < nc);
    const double g = slab_phase_function(md.n_eff, nl, nc, nr, t, lam);
    CHECK(std::abs(g - md.nodes * std::numbers::pi) < 1e-9);
    if (k > 0) CHECK(md.n_eff < modes[k - 1].n_eff);
  }
}

TEST_CASE("norm_integral matches a brute-force field integral") {
  const std::vector<SlabMode> modes = solve_slab_modes(1.0, 1.83, 1.82, 9.3, 806.6);
  REQUIRE(modes.size() >= 2);
  for (const SlabMode& md : modes) {
    // Piecewise field: cos(kappa*xi - phase) in the core, exponential tails.
    auto field = [&](double xi) {
      if (xi < 0.0) return std::cos(-md.phase_lo()) * std::exp(md.gamma_lo * xi);
      if (xi > md.thickness)
        return std::cos(md.kappa * md.thickness - md.phase_lo()) *
               std::exp(-md.gamma_hi * (xi - md.thickness));
      return std::cos(md.kappa * xi - md.phase_lo());
    };
    const double lo = -14.0 / md.gamma_lo;
    const double hi = md.thickness + 14.0 / md.gamma_hi;
    const int n = 400000;
    const double h = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = field(lo + (i + 0.5) * h);
      sum += f * f;
    }
    CHECK(md.norm_integral() == doctest::Approx(sum * h).epsilon(1e-8));
  }
}

TEST_CASE("channel modes: ordering, labels, bounds") {
  const ChannelWaveguide wg = pinned_guide();
  const std::vector<GuidedMode> modes = wg.solve(Polarization::Z, 806.6, {2, 4});
  REQUIRE(!modes.empty());
  const double n_sub = wg.substrate_index(Polarization::Z, 806.6);
  const double n_core = wg.core_index(Polarization::Z, 806.6);
  CHECK(n_core == doctest::Approx(n_sub + 0.008).epsilon(1e-12));
  std::vector<std::pair<int, int>> seen;
  for (size_t k = 0; k < modes.size(); ++k) {
    const GuidedMode& md = modes[k];
    CHECK(md.n_eff > n_sub);
    CHECK(md.n_eff < n_core);
    CHECK(md.label.m <= 2);
    CHECK(md.label.n <= 4);
    if (k > 0) CHECK(md.n_eff <= modes[k - 1].n_eff);
    seen.emplace_back(md.label.m, md.label.n);
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  // The fundamental is guided and the strongest-confined.
  CHECK(modes.front().label == ModeLabel{0, 0});
}

TEST_CASE("fundamental effective index decreases with wavelength") {
  const ChannelWaveguide wg = pinned_guide();
  double prev = 2.5;
  for (double lam : {450.0, 600.0, 750.0, 900.0}) {
    const auto md = wg.mode({0, 0}, Polarization::Z, lam);
    REQUIRE(md.has_value());
    CHECK(md->n_eff < prev);
    prev = md->n_eff;
  }
}

TEST_CASE("beta_um is the propagation constant of the stored mode") {
  const ChannelWaveguide wg = pinned_guide();
  const auto md = wg.mode({0, 1}, Polarization::Z, 806.6);
  REQUIRE(md.has_value());
  const double beta = wg.beta_um({0, 1}, Polarization::Z, 806.6);
  CHECK(beta == doctest::Approx(2.0 * std::numbers::pi * md->n_eff / 0.8066)
                    .epsilon(1e-12));
  CHECK_THROWS_AS(wg.beta_um({2, 4}, Polarization::Z, 2200.0), numeric_error);
}

TEST_CASE("zero contrast guides nothing") {
  WaveguideSpec s = pinned_spec();
  s.delta_n = 0.0;
  const ChannelWaveguide wg(s, SellmeierModel::load(kDataFile));
  CHECK(wg.solve(Polarization::Z, 806.6, {2, 4}).empty());
  CHECK(!wg.mode({0, 0}, Polarization::Z, 806.6).has_value());
}

TEST_CASE("invalid geometry is rejected") {
  WaveguideSpec s = pinned_spec();
  s.width_um = -1.0;
  CHECK_THROWS_AS(s.validate(), config_error);
  s = pinned_spec();
  s.delta_n = -0.001;
  CHECK_THROWS_AS(s.validate(), config_error);
  s = pinned_spec();
  s.length_mm = 0.0;
  CHECK_THROWS_AS(s.validate(), config_error);
}

TEST_CASE("mode_profile is unit-normalized on its grid") {
  const ChannelWaveguide wg = pinned_guide();
  const auto m00 = wg.mode({0, 0}, Polarization::Z, 806.6);
  const auto m01 = wg.mode({0, 1}, Polarization::Z, 806.6);
  REQUIRE(m00.has_value());
  REQUIRE(m01.has_value());
  const ProfileGrid grid = bounding_grid({*m00, *m01}, 8.0, 301, 401);
  for (const GuidedMode& md : {*m00, *m01}) {
    const Eigen::ArrayXXd u = mode_profile(md, grid);
    CHECK(u.rows() == 401);
    CHECK(u.cols() == 301);
    CHECK((u * u).sum() * grid.cell_area() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("vertical factors of distinct orders are orthogonal") {
  const ChannelWaveguide wg = pinned_guide();
  const auto m00 = wg.mode({0, 0}, Polarization::Z, 806.6);
  const auto m01 = wg.mode({0, 1}, Polarization::Z, 806.6);
  const auto m02 = wg.mode({0, 2}, Polarization::Z, 806.6);
  REQUIRE((m00 && m01 && m02));
  const ProfileGrid grid = bounding_grid({*m00, *m01, *m02}, 10.0, 3, 20001);
  const Eigen::ArrayXd ys = grid.ys();
  const double dy = ys[1] - ys[0];
  const Eigen::ArrayXd y0 = profile_y(*m00, ys);
  const Eigen::ArrayXd y1 = profile_y(*m01, ys);
  const Eigen::ArrayXd y2 = profile_y(*m02, ys);
  // Unit norm per factor, mutual orthogonality: eigenmodes of one vertical slab.
  CHECK((y0 * y0).sum() * dy == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs((y0 * y1).sum() * dy) < 1e-6);
  CHECK(std::abs((y0 * y2).sum() * dy) < 1e-6);
  CHECK(std::abs((y1 * y2).sum() * dy) < 1e-6);
}

TEST_CASE("profile node counts follow the labels") {
  const ChannelWaveguide wg = pinned_guide();
  const auto md = wg.mode({1, 2}, Polarization::Z, 806.6);
  REQUIRE(md.has_value());
  const ProfileGrid grid = bounding_grid({*md}, 6.0, 2001, 2001);
  const Eigen::ArrayXd px = profile_x(*md, grid.xs());
  const Eigen::ArrayXd py = profile_y(*md, grid.ys());
  auto sign_changes = [](const Eigen::ArrayXd& v) {
    int n = 0;
    for (int i = 1; i < v.size(); ++i)
      if ((v[i] > 0.0) != (v[i - 1] > 0.0) && std::abs(v[i]) > 1e-12) ++n;
    return n;
  };
  CHECK(sign_changes(px) == 1);
  CHECK(sign_changes(py) == 2);
}

TEST_CASE("a grid clipping the evanescent tails is rejected") {
  const ChannelWaveguide wg = pinned_guide();
  const auto md = wg.mode({0, 0}, Polarization::Z, 806.6);
  REQUIRE(md.has_value());
  ProfileGrid tight;
  tight.x_min = -1.0;
  tight.x_max = 1.0;
  tight.y_min = -2.0;
  tight.y_max = 0.0;
  tight.nx = 64;
  tight.ny = 64;
  CHECK_THROWS_AS(mode_profile(*md, tight), config_error);
}
