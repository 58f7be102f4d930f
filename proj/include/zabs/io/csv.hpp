#pragma once

#include <string>

#include "zabs/model.hpp"

namespace zabs::io {

// UTF-8 CSV with a header row and '.' decimals. Malformed or missing cells
// in referenced columns raise DataError with the row/column location.
Dataset load_csv(const std::string& path);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const Eigen::MatrixXd& columns);

}  // namespace zabs::io
