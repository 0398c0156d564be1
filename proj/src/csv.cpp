#include "skoro/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace skoro {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view field, double& out) {
    field = trim(field);
    if (field.empty()) return false;
    std::string buf(field);
    errno = 0;
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    return end == buf.c_str() + buf.size() && errno != ERANGE;
}

[[noreturn]] void fail(std::size_t row, const std::string& why) {
    throw std::invalid_argument("csv row " + std::to_string(row) + ": " + why);
}

}  // namespace

SampledTrace parse_csv(std::string_view text) {
    std::vector<double> timestamps;
    std::vector<double> values;
    std::size_t dim = 0;
    std::size_t row = 0;
    std::size_t data_rows = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++row;
        line = trim(line);
        if (line.empty()) continue;

        auto fields = split_fields(line);
        double t;
        if (data_rows == 0 && !parse_number(fields[0], t)) {
            // A single leading header row is allowed.
            if (row == 1) continue;
            fail(row, "non-numeric time '" + std::string(trim(fields[0])) + "'");
        }
        if (fields.size() < 2) fail(row, "need a time column and at least one value column");
        if (!parse_number(fields[0], t))
            fail(row, "non-numeric time '" + std::string(trim(fields[0])) + "'");
        if (data_rows == 0) {
            dim = fields.size() - 1;
        } else if (fields.size() - 1 != dim) {
            fail(row, "ragged row: expected " + std::to_string(dim + 1) + " columns, got " +
                          std::to_string(fields.size()));
        }
        if (!timestamps.empty() && !(t > timestamps.back()))
            fail(row, "non-increasing timestamp " + std::to_string(t));
        timestamps.push_back(t);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v;
            if (!parse_number(fields[c], v))
                fail(row, "non-numeric cell '" + std::string(trim(fields[c])) + "'");
            values.push_back(v);
        }
        ++data_rows;
    }
    if (data_rows < 2)
        throw std::invalid_argument("csv: fewer than 2 data rows (" +
                                    std::to_string(data_rows) + ")");
    return SampledTrace(std::move(timestamps), std::move(values), dim);
}

SampledTrace read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open trace file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string write_csv(const SampledTrace& tr, const std::string& header) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    if (!header.empty()) out << header << '\n';
    for (std::size_t k = 0; k < tr.size(); ++k) {
        out << tr.time(k);
        for (double v : tr.point(k)) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

void write_csv_file(const SampledTrace& tr, const std::string& path,
                    const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << write_csv(tr, header);
}

}  // namespace skoro
