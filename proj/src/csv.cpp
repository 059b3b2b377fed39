#include "dendi/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dendi {

CsvTable parse_csv(std::istream& in) {
    std::string content{std::istreambuf_iterator<char>(in),
                        std::istreambuf_iterator<char>()};
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    size_t i = 0;
    while (i < content.size()) {
        const char ch = content[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field += ch;
            ++i;
            continue;
        }
        switch (ch) {
            case '"':
                in_quotes = true;
                field_started = true;
                ++i;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = false;
                ++i;
                break;
            case '\r':
                ++i;
                break;
            case '\n':
                record.push_back(std::move(field));
                field.clear();
                records.push_back(std::move(record));
                record.clear();
                field_started = false;
                ++i;
                break;
            default:
                field += ch;
                field_started = true;
                ++i;
                break;
        }
    }
    if (in_quotes) throw std::runtime_error("CSV ends inside a quoted field");
    if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    if (records.empty()) throw std::runtime_error("CSV file is empty");

    CsvTable table;
    table.header = std::move(records.front());
    for (size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw std::runtime_error("CSV row " + std::to_string(r + 1) + " has " +
                                     std::to_string(records[r].size()) +
                                     " fields, header has " +
                                     std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

namespace {

bool is_missing(const std::string& s) {
    if (s.empty()) return true;
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return lower == "na" || lower == "nan" || lower == "n/a";
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

LoadResult load_csv(const std::string& path, const RunConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    CsvTable table = parse_csv(in);

    auto column_index = [&](const std::string& name) {
        for (size_t c = 0; c < table.header.size(); ++c)
            if (table.header[c] == name) return static_cast<int>(c);
        throw MissingColumnError("column '" + name + "' not found in header");
    };

    if (config.outcome_column.empty())
        throw MissingColumnError("no outcome column named");
    if (config.covariate_columns.empty())
        throw MissingColumnError("no covariate columns named");
    {
        std::set<std::string> seen;
        seen.insert(config.outcome_column);
        for (const auto& c : config.covariate_columns)
            if (!seen.insert(c).second)
                throw std::invalid_argument("column '" + c + "' named more than once");
        for (const auto& c : config.confounder_columns)
            if (!seen.insert(c).second)
                throw std::invalid_argument("column '" + c + "' named more than once");
    }

    const int y_col = column_index(config.outcome_column);
    std::vector<int> x_cols, c_cols;
    for (const auto& name : config.covariate_columns) x_cols.push_back(column_index(name));
    for (const auto& name : config.confounder_columns) c_cols.push_back(column_index(name));

    LoadResult result;

    // listwise deletion over used columns
    std::vector<size_t> kept;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        bool missing = is_missing(table.rows[r][static_cast<size_t>(y_col)]);
        for (int c : x_cols)
            missing = missing || is_missing(table.rows[r][static_cast<size_t>(c)]);
        for (int c : c_cols)
            missing = missing || is_missing(table.rows[r][static_cast<size_t>(c)]);
        if (missing)
            ++result.n_dropped;
        else
            kept.push_back(r);
    }
    if (result.n_dropped > 0)
        result.notes.push_back("dropped " + std::to_string(result.n_dropped) +
                               " row(s) with missing values");
    if (kept.empty())
        throw EmptyAfterFilteringError("no rows left after dropping missing values");

    const int n = static_cast<int>(kept.size());
    Dataset& data = result.data;
    data.family = family_from_name(config.family);

    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const std::string& cell = table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(y_col)];
        double v;
        if (!parse_number(cell, v))
            throw NonNumericValueError("non-numeric outcome value '" + cell + "'");
        data.y[i] = v;
    }
    if (data.family == Family::Bernoulli) {
        for (int i = 0; i < n; ++i)
            if (data.y[i] != 0.0 && data.y[i] != 1.0)
                throw NonNumericValueError("binomial outcome must be 0 or 1, found " +
                                           std::to_string(data.y[i]));
    } else if (data.family == Family::Poisson) {
        for (int i = 0; i < n; ++i)
            if (data.y[i] < 0.0 || data.y[i] != std::floor(data.y[i]))
                throw NonNumericValueError(
                    "poisson outcome must be a nonnegative integer, found " +
                    std::to_string(data.y[i]));
    }

    data.X.resize(n, static_cast<int>(x_cols.size()));
    data.x_names = config.covariate_columns;
    for (size_t j = 0; j < x_cols.size(); ++j) {
        for (int i = 0; i < n; ++i) {
            const std::string& cell =
                table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(x_cols[j])];
            double v;
            if (!parse_number(cell, v))
                throw NonNumericValueError("non-numeric value '" + cell +
                                           "' in covariate '" + data.x_names[j] + "'");
            data.X(i, static_cast<int>(j)) = v;
        }
    }

    // confounders: numeric columns pass through, anything else becomes
    // reference-coded indicators
    std::vector<Eigen::VectorXd> z_columns;
    for (size_t cidx = 0; cidx < c_cols.size(); ++cidx) {
        const std::string& name = config.confounder_columns[cidx];
        const int col = c_cols[cidx];
        bool numeric = true;
        for (int i = 0; i < n && numeric; ++i) {
            double v;
            numeric = parse_number(
                table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(col)], v);
        }
        if (numeric) {
            Eigen::VectorXd z(n);
            for (int i = 0; i < n; ++i) {
                double v;
                parse_number(table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(col)], v);
                z[i] = v;
            }
            z_columns.push_back(std::move(z));
            data.z_names.push_back(name);
        } else {
            std::set<std::string> level_set;
            for (int i = 0; i < n; ++i)
                level_set.insert(
                    table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(col)]);
            std::vector<std::string> levels(level_set.begin(), level_set.end());
            for (size_t l = 1; l < levels.size(); ++l) {
                Eigen::VectorXd z(n);
                for (int i = 0; i < n; ++i)
                    z[i] = table.rows[kept[static_cast<size_t>(i)]][static_cast<size_t>(col)] ==
                                   levels[l]
                               ? 1.0
                               : 0.0;
                z_columns.push_back(std::move(z));
                data.z_names.push_back(name + "=" + levels[l]);
            }
            result.notes.push_back("confounder '" + name + "' expanded to " +
                                   std::to_string(levels.size() - 1) +
                                   " indicator column(s), reference level '" + levels[0] +
                                   "'");
        }
    }
    data.Z.resize(n, static_cast<int>(z_columns.size()));
    for (size_t k = 0; k < z_columns.size(); ++k) data.Z.col(static_cast<int>(k)) = z_columns[k];

    validate_dataset(data);
    return result;
}

}  // namespace dendi
