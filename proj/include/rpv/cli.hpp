#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// Input rejected because of its content; the message names the line at fault.
class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Reads one probability per row from the named column. '#' lines and blank
// lines are skipped; LF and CRLF endings are accepted.
std::vector<double> read_pvalue_csv(std::istream& in, const std::string& column = "p_lfc");

// Parses "start:step:stop" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

// Entry point; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rpv::cli
