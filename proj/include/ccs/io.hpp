#pragma once

// CSV tables, column splits, atomic output files and JSON records.

#include "ccs/dataset.hpp"
#include "ccs/error.hpp"
#include "ccs/rl/agents.hpp"
#include "ccs/timeseries.hpp"
#include "ccs/types.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ccs::io {

using Json = nlohmann::json;

struct CsvOptions {
    bool header = false;
    char delimiter = ',';
};

struct CsvTable {
    Samples values;
    std::vector<std::string> columns;
};

inline CsvTable parse_csv(std::istream& in, const std::string& source, const CsvOptions& opts = {})
{
    std::vector<double> flat;
    CsvTable table;
    std::size_t width = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = opts.header;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        const auto fields = detail::split_fields(view, opts.delimiter);
        const auto where = [&] { return source + ":" + std::to_string(line_no); };
        if (header_pending) {
            for (auto f : fields) {
                table.columns.emplace_back(detail::trim(f));
            }
            width = fields.size();
            header_pending = false;
            continue;
        }
        if (width == 0) {
            width = fields.size();
        }
        if (fields.size() != width) {
            throw DataError(where() + ": expected " + std::to_string(width) + " fields, found " +
                            std::to_string(fields.size()));
        }
        for (std::size_t f = 0; f < fields.size(); ++f) {
            double v = 0.0;
            if (!detail::parse_double(fields[f], v)) {
                throw DataError(where() + ": field " + std::to_string(f + 1) + " ('" + std::string(fields[f]) +
                                "') is not numeric");
            }
            flat.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) {
        throw DataError(source + ": no data rows");
    }
    table.values = Eigen::Map<const Samples>(flat.data(), static_cast<Index>(rows), static_cast<Index>(width));
    return table;
}

inline CsvTable load_csv(const std::filesystem::path& path, const CsvOptions& opts = {})
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(path.string() + ": cannot open file");
    }
    return parse_csv(in, path.string(), opts);
}

/// Inclusive zero-based column interval written "a..b" (or a single "a").
struct ColumnRange {
    Index first = 0;
    Index last = 0;

    Index count() const { return last - first + 1; }
    bool contains(Index c) const { return c >= first && c <= last; }
};

inline ColumnRange parse_column_range(std::string_view text)
{
    const auto parse = [&](std::string_view s) {
        Index v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
            throw InvalidArgument("column range '" + std::string(text) + "' is not of the form a..b");
        }
        return v;
    };
    const auto dots = text.find("..");
    const ColumnRange r = dots == std::string_view::npos
                              ? ColumnRange{parse(text), parse(text)}
                              : ColumnRange{parse(text.substr(0, dots)), parse(text.substr(dots + 2))};
    if (r.last < r.first) {
        throw InvalidArgument("column range '" + std::string(text) + "' is empty");
    }
    return r;
}

/// x = the columns in `x_cols`, y = every other column, in file order.
inline PairedDataset split_columns(const Samples& table, const ColumnRange& x_cols, const std::string& source)
{
    if (x_cols.last >= table.cols()) {
        throw DataError(source + ": x columns " + std::to_string(x_cols.first) + ".." + std::to_string(x_cols.last) +
                        " exceed the " + std::to_string(table.cols()) + " columns present");
    }
    if (x_cols.count() == table.cols()) {
        throw DataError(source + ": no columns left for y");
    }
    Samples x(table.rows(), x_cols.count());
    Samples y(table.rows(), table.cols() - x_cols.count());
    Index yc = 0;
    for (Index c = 0; c < table.cols(); ++c) {
        if (x_cols.contains(c)) {
            x.col(c - x_cols.first) = table.col(c);
        }
        else {
            y.col(yc++) = table.col(c);
        }
    }
    return {std::move(x), std::move(y)};
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw DataError(path.string() + ": cannot open for writing");
        }
        out << content;
        if (!out) {
            throw DataError(path.string() + ": write failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

inline std::string to_csv(const Matrix& m, const std::vector<std::string>& header = {})
{
    std::ostringstream os;
    const auto join = [&](const auto& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << (i ? "," : "") << cells[i];
        }
        os << '\n';
    };
    if (!header.empty()) {
        join(header);
    }
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> cells;
        for (Index j = 0; j < m.cols(); ++j) {
            cells.push_back(format_double(m(i, j)));
        }
        join(cells);
    }
    return os.str();
}

/// Keys are sorted, so equal records serialize identically.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct RunManifest {
    std::string command;
    Json parameters = Json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> artifacts;
    double duration_seconds = 0.0;

    Json to_json() const
    {
        return Json{{"command", command},
                    {"parameters", parameters},
                    {"seed", seed},
                    {"artifacts", artifacts},
                    {"duration_seconds", duration_seconds}};
    }
};

inline Json to_json(const rl::EpisodeLog& log)
{
    Json j{{"agent", log.agent},
           {"environment", log.environment},
           {"seed", log.seed},
           {"steps_taken", log.steps_taken},
           {"success", log.success}};
    j["steps_to_goal"] = log.steps_to_goal ? Json(*log.steps_to_goal) : Json(nullptr);
    return j;
}

} // namespace ccs::io
