#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wgpdc {

// Fixed scientific formatting keeps every CSV byte-reproducible.
std::string sci(double v);

void write_text_file(const std::string& path, const std::string& content);

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// 8-bit binary PGM, image(0,0) at the top-left, max value scaled to 255
// (all-zero images stay zero).
void write_pgm(const std::string& path, const Eigen::ArrayXXd& image);

}  // namespace wgpdc
