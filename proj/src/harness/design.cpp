#include "fpps/harness/design.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "fpps/errors.hpp"

namespace fpps::harness {

namespace {

bool as_number(const std::string& s, double& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string> observed_levels(const CsvTable& table, std::size_t col) {
    std::set<std::string> distinct;
    for (const auto& row : table.rows) {
        distinct.insert(row[col]);
    }
    std::vector<std::string> levels(distinct.begin(), distinct.end());
    const bool numeric = std::all_of(levels.begin(), levels.end(), [](const std::string& s) {
        double v = 0.0;
        return as_number(s, v);
    });
    if (numeric) {
        std::stable_sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
            double x = 0.0, y = 0.0;
            as_number(a, x);
            as_number(b, y);
            return x < y;
        });
    }
    return levels;
}

void check_rank(const DesignMatrix& dm) {
    const Index p = dm.x.rows();
    const Index n = dm.x.cols();
    if (n <= p) {
        std::ostringstream os;
        os << "design has " << p << " columns but only " << n << " observations";
        throw RankError(os.str());
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(dm.x.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() == p) {
        return;
    }
    std::ostringstream os;
    os << "design matrix has rank " << qr.rank() << " < " << p << "; collinear column(s):";
    const auto& perm = qr.colsPermutation().indices();
    for (Index i = qr.rank(); i < p; ++i) {
        os << ' ' << dm.names[static_cast<std::size_t>(perm(i))];
    }
    throw RankError(os.str());
}

}  // namespace

DesignMatrix build_design_matrix(const CsvTable& table, const DesignSpec& spec) {
    const Index n = static_cast<Index>(table.rows.size());
    std::vector<Eigen::RowVectorXd> rows;
    DesignMatrix dm;
    if (spec.intercept) {
        rows.push_back(Eigen::RowVectorXd::Ones(n));
        dm.names.push_back("(intercept)");
    }
    for (const auto& name : spec.numeric) {
        const auto col = table.numeric_column(name);
        rows.push_back(Eigen::Map<const Eigen::RowVectorXd>(col.data(), n));
        dm.names.push_back(name);
    }
    for (const auto& cat : spec.categorical) {
        const std::size_t c = table.column(cat.name);
        const auto levels = cat.levels.empty() ? observed_levels(table, c) : cat.levels;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            if (std::find(levels.begin(), levels.end(), table.rows[r][c]) == levels.end()) {
                throw DataError("column '" + cat.name + "', row " + std::to_string(r + 1) +
                                ": level '" + table.rows[r][c] + "' is not in the declared set");
            }
        }
        for (std::size_t l = 1; l < levels.size(); ++l) {
            Eigen::RowVectorXd ind(n);
            for (Index r = 0; r < n; ++r) {
                ind(r) = table.rows[static_cast<std::size_t>(r)][c] == levels[l] ? 1.0 : 0.0;
            }
            rows.push_back(ind);
            dm.names.push_back(cat.name + "=" + levels[l]);
        }
    }
    if (rows.empty()) {
        throw ConfigError("design specification selects no columns");
    }
    dm.x.resize(static_cast<Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        dm.x.row(static_cast<Index>(i)) = rows[i];
    }
    check_rank(dm);
    return dm;
}

MatrixXd response_matrix(const CsvTable& table, const std::vector<std::string>& names) {
    if (names.empty()) {
        throw ConfigError("no response columns selected");
    }
    const Index n = static_cast<Index>(table.rows.size());
    MatrixXd y(static_cast<Index>(names.size()), n);
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto col = table.numeric_column(names[j]);
        y.row(static_cast<Index>(j)) = Eigen::Map<const Eigen::RowVectorXd>(col.data(), n);
    }
    return y;
}

}  // namespace fpps::harness
