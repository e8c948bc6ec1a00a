#pragma once

#include <string>
#include <vector>

#include "cycleqm/cycle.hpp"
#include "cycleqm/linalg.hpp"
#include "cycleqm/srcq.hpp"

namespace cycleqm {

// Shortest-roundtrip decimal for a double; used by every CSV writer so that
// identical runs produce byte-identical artifacts.
std::string format_double(double v);

// Row-major CSV with header x_index,xprime_index,value.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

// Binary matrix container: magic "CQMX", int64 rows, int64 cols, row-major
// doubles. Bit-exact round trip.
void write_matrix_binary(const std::string& path, const Matrix& m);
Matrix read_matrix_binary(const std::string& path);

// Complex density matrix as row,col,re,im.
void write_density_csv(const std::string& path, const CMatrix& m);

// Two-column curve: header "<x_name>,<y_name>".
void write_curve_csv(const std::string& path, const std::string& x_name,
                     const std::string& y_name, const std::vector<double>& xs,
                     const std::vector<double>& ys);

// Arbitrary table: first column label plus named value columns.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// Bernstein decomposition as JSON (small discrete models only).
void write_bernstein_json(const std::string& path, const BernsteinForm& form);

// Atomic text write: temp file in the same directory, then rename.
void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace cycleqm
