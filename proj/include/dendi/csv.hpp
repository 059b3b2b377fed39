#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dendi/glm.hpp"
#include "dendi/run_config.hpp"

namespace dendi {

struct MissingColumnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonNumericValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyAfterFilteringError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// RFC-4180: quoted fields may contain commas, doubled quotes and newlines;
// records end with LF or CRLF.
CsvTable parse_csv(std::istream& in);

struct LoadResult {
    Dataset data;
    int n_dropped = 0;
    std::vector<std::string> notes;
};

// Reads outcome/covariate columns as reals; confounder columns that do not
// parse as numbers are expanded to reference-coded 0/1 indicators (first
// level in lexicographic order is the reference). Rows with missing values
// in any used column are dropped and counted.
LoadResult load_csv(const std::string& path, const RunConfig& config);

}  // namespace dendi
