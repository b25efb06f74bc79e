#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace vecont {

/// Analysis artifacts as written by their stages, plus the SHA-256 of each
/// artifact file (keyed by stage) for provenance tags.
struct ReportInputs {
  nlohmann::json consistency;
  nlohmann::json accuracy;
  nlohmann::json shift;
  nlohmann::json projection;
  std::map<std::string, std::string> sha256;
};

struct FigureFile {
  std::string name;  // file stem, e.g. "fig04_centroid_distance"
  nlohmann::json data;
};

/// One FigureData document per figure. Pure reformatting of the inputs.
std::vector<FigureFile> figure_data(const ReportInputs& in);

/// CSV tables by file name.
std::map<std::string, std::string> report_tables(const ReportInputs& in);

/// Observed-vs-baseline comparisons of every suite in one document.
nlohmann::json report_summary(const ReportInputs& in);

/// Quotes a CSV field when needed.
std::string csv_field(const std::string& s);

}  // namespace vecont
