#pragma once

#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wkblab::cli {

// Bad configuration or command line (exit status 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
};
const std::vector<ExperimentInfo>& experiments();

// key = value sections; [experiment] name selects what runs.
struct ExperimentConfig {
  std::string name;
  boost::property_tree::ptree tree;
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<double> budget;  // quadrature node budget
  std::string output = "out";

  static ExperimentConfig parse(const boost::property_tree::ptree& tree);
  static ExperimentConfig load(const std::string& path);
};

// Throws ConfigError listing every problem found.
void validate(const ExperimentConfig& config);

struct CriterionResult {
  std::string name;
  std::string target;  // what the value is compared against
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunReport {
  std::string experiment;
  std::vector<CriterionResult> criteria;
  std::vector<std::pair<std::string, std::string>> facts;  // exact results, in insertion order
  std::string csv_header;
  std::vector<std::string> csv_rows;
  double wall_seconds = 0.0;

  bool pass() const;
};

// Dispatches to the named experiment. ResolutionRefused propagates unchanged.
RunReport run(const ExperimentConfig& config);

// <dir>/<experiment>.csv and <dir>/<experiment>.json; wall time is not written so that
// repeated runs produce identical files.
void emit(const RunReport& report, const std::string& dir);
std::string to_json(const RunReport& report);
std::string to_csv(const RunReport& report);

// Full-precision, locale-independent number formatting used in the outputs.
std::string format_number(double v);

}  // namespace wkblab::cli
