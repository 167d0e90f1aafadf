#pragma once

#include <string>
#include <vector>

#include "fpps/csv.hpp"
#include "fpps/matdist.hpp"

namespace fpps::harness {

struct CategoricalColumn {
    std::string name;
    /// Level order; the first level is the omitted baseline. Empty means the
    /// sorted distinct values observed in the data (numeric order when every
    /// value parses as a number).
    std::vector<std::string> levels;
};

struct DesignSpec {
    std::vector<std::string> numeric;
    std::vector<CategoricalColumn> categorical;
    bool intercept = true;
};

struct DesignMatrix {
    /// p x n, one column per observation.
    MatrixXd x;
    std::vector<std::string> names;
};

/// Columns in order: intercept, numerics, then one indicator per non-baseline
/// level of each categorical (named "<column>=<level>"). Throws DataError for
/// values outside a declared level set and RankError, naming the redundant
/// columns, when the result is not of full row rank.
DesignMatrix build_design_matrix(const CsvTable& table, const DesignSpec& spec);

/// m x n response matrix from the named columns.
MatrixXd response_matrix(const CsvTable& table, const std::vector<std::string>& names);

}  // namespace fpps::harness
