#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simcal/calibration.hpp"

namespace simcal {

// Everything a CLI run needs, parsed from one flat INI-style file.
// Unknown sections or keys are rejected with file:line diagnostics; values
// are type-checked at parse time, before any simulation starts.
struct RunConfig {
  CalibrationSpec spec;
  TruthSpec truth;
  std::size_t data_n = 30;          // [data] n, for generate-data/coverage
  std::size_t coverage_R = 20;      // [coverage] R
  std::vector<double> sweep_levels;  // [sweep] levels
  // [table1] cells, "m:n" pairs.
  std::vector<std::pair<std::size_t, std::size_t>> table1_cells;
  unsigned workers = 0;  // 0 = all logical cores
};

RunConfig parse_config_file(const std::filesystem::path& file);
RunConfig parse_config_text(const std::string& text,
                            const std::string& source_name = "<string>");

}  // namespace simcal
