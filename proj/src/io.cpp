#include "wgpdc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wgpdc/errors.hpp"

namespace wgpdc {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file: " + path);
  out << content;
  if (!out) throw config_error("write failed: " + path);
}

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream s;
  for (std::size_t i = 0; i < header.size(); ++i)
    s << header[i] << (i + 1 < header.size() ? "," : "");
  s << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw config_error("csv row width does not match its header");
    for (std::size_t i = 0; i < row.size(); ++i)
      s << row[i] << (i + 1 < row.size() ? "," : "");
    s << "\n";
  }
  return s.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  write_text_file(path, csv_string(header, rows));
}

void write_pgm(const std::string& path, const Eigen::ArrayXXd& image) {
  const Eigen::Index h = image.rows(), w = image.cols();
  if (h < 1 || w < 1) throw config_error("empty image: " + path);
  const double peak = image.maxCoeff();
  if (!(image.minCoeff() >= 0.0) || !std::isfinite(peak))
    throw numeric_error("image values must be finite and non-negative: " + path);
  const double scale = peak > 0.0 ? 255.0 / peak : 0.0;

  std::ostringstream s;
  s << "P5\n" << w << " " << h << "\n255\n";
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      const int v = static_cast<int>(std::lround(image(r, c) * scale));
      s << static_cast<char>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
  write_text_file(path, s.str());
}

}  // namespace wgpdc
