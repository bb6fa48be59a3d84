#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace medaudit::csv {

// RFC 4180 record reader: quoted fields, doubled quotes, CRLF, and quoted
// newlines are handled. The reader never interprets values.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    // 1-based physical line number of the start of the last record.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t physical_line_ = 0;
    std::size_t record_line_ = 0;
};

std::vector<std::string> split_record(std::string_view line);

std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

std::string_view trim(std::string_view s);

// Strict numeric parse: surrounding whitespace allowed, anything else that is
// not part of the number yields nullopt. Empty string yields nullopt.
std::optional<double> parse_double(std::string_view s);

// Shortest representation that round-trips; used for every numeric output so
// artifacts are byte-stable.
std::string format_double(double v);

}  // namespace medaudit::csv
