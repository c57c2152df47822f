#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string binary_path() {
  const char* p = std::getenv("WGPDC_BIN");
  REQUIRE_MESSAGE(p != nullptr, "WGPDC_BIN must point at the wgpdc binary");
  return p;
}

std::string source_dir() {
  const char* p = std::getenv("WGPDC_SOURCE_DIR");
  REQUIRE_MESSAGE(p != nullptr, "WGPDC_SOURCE_DIR must point at the repo root");
  return p;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = binary_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Sandbox with a config whose dispersion path is absolute, so runs do not
// depend on the working directory.
struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() /
          ("wgpdc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string write_config(
      const std::function<void(nlohmann::json&)>& patch = {}) const {
    std::ifstream in(source_dir() + "/configs/ppktp_fitted.json");
    nlohmann::json j = nlohmann::json::parse(in);
    j["dispersion_file"] = source_dir() + "/data/ktp_sellmeier_kato2002.json";
    if (patch) patch(j);
    const fs::path p = dir / "config.json";
    std::ofstream out(p);
    out << j.dump(2) << "\n";
    return p.string();
  }

  std::string sub(const std::string& name) const {
    return (dir / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

struct Pgm {
  int w = 0, h = 0;
  std::vector<unsigned char> px;
  int at(int r, int c) const { return px[static_cast<size_t>(r) * w + c]; }
};

Pgm read_pgm(const fs::path& p) {
  const std::string raw = slurp(p);
  std::smatch m;
  const std::regex head(R"(^P5\s+(\d+)\s+(\d+)\s+255\s)");
  REQUIRE(std::regex_search(raw, m, head));
  Pgm img;
  img.w = std::stoi(m[1]);
  img.h = std::stoi(m[2]);
  const size_t off = static_cast<size_t>(m.position(0)) + m.length(0);
  REQUIRE(raw.size() == off + static_cast<size_t>(img.w) * img.h);
  img.px.assign(raw.begin() + off, raw.end());
  return img;
}

// Lobe count with hysteresis: arm above half the cut maximum, rearm below a
// quarter. Robust against 8-bit plateau jitter.
int lobes(const std::vector<int>& cut) {
  int mx = 0;
  for (int v : cut) mx = std::max(mx, v);
  if (mx == 0) return 0;
  const double hi = 0.5 * mx, lo = 0.25 * mx;
  int n = 0;
  bool armed = true;
  for (int v : cut) {
    if (armed && v >= hi) {
      ++n;
      armed = false;
    } else if (!armed && v <= lo) {
      armed = true;
    }
  }
  return n;
}

int max_row_lobes(const Pgm& img) {
  int best = 0;
  for (int r = 0; r < img.h; ++r) {
    std::vector<int> cut(img.w);
    for (int c = 0; c < img.w; ++c) cut[c] = img.at(r, c);
    best = std::max(best, lobes(cut));
  }
  return best;
}

int max_col_lobes(const Pgm& img) {
  int best = 0;
  for (int c = 0; c < img.w; ++c) {
    std::vector<int> cut(img.h);
    for (int r = 0; r < img.h; ++r) cut[r] = img.at(r, c);
    best = std::max(best, lobes(cut));
  }
  return best;
}

}  // namespace

TEST_CASE("modes: table on stdout, CSV artifact, descending effective index") {
  Workspace ws;
  const std::string cfg = ws.write_config();
  const RunResult r = run("modes --config " + cfg + " --lambda-nm 806.6 --pol y --out " +
                          ws.sub("m"));
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(ws.sub("m") + "/modes.csv");
  CHECK(r.output.find("label_m") != std::string::npos);
  const auto rows = lines_of(csv);
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == "label_m,label_n,n_eff");
  double prev = 1e9;
  for (size_t k = 1; k < rows.size(); ++k) {
    const auto comma = rows[k].rfind(',');
    const double n_eff = std::stod(rows[k].substr(comma + 1));
    CHECK(n_eff < prev);
    prev = n_eff;
  }
}

TEST_CASE("modes: zero contrast yields an empty table, exit 0") {
  Workspace ws;
  const std::string cfg = ws.write_config(
      [](nlohmann::json& j) { j["waveguide"]["delta_n"] = 0.0; });
  const RunResult r = run("modes --config " + cfg +
                          " --lambda-nm 806.6 --pol z --out " + ws.sub("m"));
  CHECK(r.exit_code == 0);
  const auto rows = lines_of(slurp(ws.sub("m") + "/modes.csv"));
  REQUIRE(rows.size() == 1);  // header only
  CHECK(rows[0] == "label_m,label_n,n_eff");
}

TEST_CASE("a missing dispersion file is a configuration failure") {
  Workspace ws;
  const std::string cfg = ws.write_config([](nlohmann::json& j) {
    j["dispersion_file"] = "/nonexistent/sellmeier.json";
  });
  const RunResult r = run("modes --config " + cfg +
                          " --lambda-nm 806.6 --pol y --out " + ws.sub("m"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("bad arguments exit with the configuration code") {
  Workspace ws;
  const std::string cfg = ws.write_config();
  CHECK(run("").exit_code == 2);  // a subcommand is required
  CHECK(run("frobnicate --config " + cfg).exit_code == 2);
  CHECK(run("jsa --config " + cfg + " --peak Q --out " + ws.sub("q")).exit_code == 2);
  CHECK(run("bell --config " + cfg + " --peak A --out " + ws.sub("a")).exit_code == 2);
  CHECK(run("render --config " + cfg + " --peak E --arm sideways --out " +
            ws.sub("r")).exit_code == 2);
  CHECK(run("modes --config /nonexistent.json --lambda-nm 806.6 --pol y").exit_code == 2);
}

TEST_CASE("peaks: labeled clusters, reruns byte-identical") {
  Workspace ws;
  const std::string cfg = ws.write_config();
  const RunResult r1 = run("peaks --config " + cfg + " --out " + ws.sub("p1"));
  REQUIRE(r1.exit_code == 0);
  const std::string csv1 = slurp(ws.sub("p1") + "/peaks.csv");
  const auto rows = lines_of(csv1);
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] ==
        "pump_m,pump_n,signal_m,signal_n,idler_m,idler_n,overlap,"
        "lambda_s_nm,lambda_i_nm,higher_order,cluster");
  // Every row carries a cluster label; letters and H-tags only.
  for (size_t k = 1; k < rows.size(); ++k) {
    const auto comma = rows[k].rfind(',');
    const std::string label = rows[k].substr(comma + 1);
    REQUIRE(!label.empty());
    const bool letter = label.size() == 1 && label[0] >= 'A' && label[0] <= 'Z';
    const bool htag = label[0] == 'H' && label.size() >= 2;
    CHECK((letter || htag));
  }
  const RunResult r2 = run("peaks --config " + cfg + " --out " + ws.sub("p2"));
  REQUIRE(r2.exit_code == 0);
  CHECK(csv1 == slurp(ws.sub("p2") + "/peaks.csv"));
  CHECK(r1.output == r2.output);
}

TEST_CASE("render: peak A is single-lobed, peak E shows the superposition") {
  Workspace ws;
  const std::string cfg = ws.write_config();
  REQUIRE(run("render --config " + cfg + " --peak A --arm signal --out " +
              ws.sub("img")).exit_code == 0);
  REQUIRE(run("render --config " + cfg + " --peak E --arm signal --out " +
              ws.sub("img")).exit_code == 0);
  const Pgm a = read_pgm(ws.sub("img") + "/render_A_signal.pgm");
  const Pgm e = read_pgm(ws.sub("img") + "/render_E_signal.pgm");
  CHECK(max_row_lobes(a) == 1);
  CHECK(max_col_lobes(a) == 1);
  // (1,0) contributes two lobes across, (0,2) three lobes down.
  CHECK(max_row_lobes(e) == 2);
  CHECK(max_col_lobes(e) == 3);
}
