#ifndef GSPAM_IO_HPP
#define GSPAM_IO_HPP

#include <string>
#include <vector>

#include "gspam/core.hpp"

namespace gspam::io {

// Shortest text form that round-trips a double exactly.
std::string format_double(double v);

// Parse a floating-point token; `context` names the file location in errors.
double parse_double(const std::string& token, const std::string& context);
int parse_int(const std::string& token, const std::string& context);

// Data files are comma-separated with a header row (x1,...,xp,y) and C-locale
// numbers.
void write_dataset_csv(const std::string& path, const Dataset& dataset);
Dataset read_dataset_csv(const std::string& path);

// Groups files hold one group per line, `name: i,j,k` with 1-based covariate
// indices. Blank lines and lines starting with '#' are ignored. The covariate
// count is the largest index mentioned; every smaller index must be covered.
void write_groups_file(const std::string& path, const GroupStructure& structure);
GroupStructure read_groups_file(const std::string& path);

struct TruthInfo {
  std::vector<int> support;  // 0-based internally, 1-based in the file
  double sigma = 0.0;
};

void write_truth_file(const std::string& path, const TruthInfo& truth);
TruthInfo read_truth_file(const std::string& path);

// Versioned key/value model file. Numbers are written with full round-trip
// precision, so load(save(m)) reproduces every fitted value bit for bit.
void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

}  // namespace gspam::io

#endif
