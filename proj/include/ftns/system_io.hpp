#pragma once

#include "ftns/system.hpp"

#include <stdexcept>
#include <string>

namespace ftns {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error(msg), line(line), column(column) {}
  int line;    // 0 when the error is not tied to a text position
  int column;
};

// System description files are JSON documents:
//   { "label": "...", "N": 2, "D": 3, "dims": [1, 1],
//     "A": { "1": { "0": { "1 1": [[1]], "2 2": [[1]] } } },
//     "B": { "1": { "1": { "0": { "1": [[0.5]] } } } },
//     "fields": [ {"name": "u", "block": 0, "offset": 0, "size": 1} ] }
// Tuple keys list 1-based spatial indices separated by spaces ("" for rank 0).
// Matrix entries are numbers or [re, im] pairs. Omitted entries are zero.
FTNSSystem parse_system(const std::string& text);
FTNSSystem load_system(const std::string& path);
std::string serialize_system(const FTNSSystem& sys);
void save_system(const FTNSSystem& sys, const std::string& path);

bool systems_equal(const FTNSSystem& a, const FTNSSystem& b);

// Matrix file with a canonical-basis header, used for symmetrizers and parameters.
std::string serialize_matrix(const Mat& m, const std::vector<std::string>& labels);
Mat parse_matrix(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ftns
