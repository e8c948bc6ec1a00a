#include "cycleqm/io.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cycleqm/errors.hpp"

namespace cycleqm {

namespace {

void require_stream(const std::ios& s, const std::string& path, const char* op) {
  if (!s) throw std::runtime_error(std::string(op) + " failed for " + path);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require_stream(out, tmp.string(), "open");
    out << contents;
    out.flush();
    require_stream(out, tmp.string(), "write");
  }
  fs::rename(tmp, target);
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ostringstream out;
  out << "x_index,xprime_index,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
  write_text_atomic(path, out.str());
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  require_stream(in, path, "open");
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::tuple<long, long, double>> entries;
  long rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long i = 0, j = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf", &i, &j, &v) != 3)
      throw std::runtime_error("read_matrix_csv: malformed line in " + path + ": " + line);
    entries.emplace_back(i, j, v);
    rows = std::max(rows, i + 1);
    cols = std::max(cols, j + 1);
  }
  Matrix m = Matrix::Zero(rows, cols);
  for (auto& [i, j, v] : entries) m(i, j) = v;
  return m;
}

void write_matrix_binary(const std::string& path, const Matrix& m) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require_stream(out, path, "open");
  out.write("CQMX", 4);
  const std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  require_stream(out, path, "write");
}

Matrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require_stream(in, path, "open");
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "CQMX")
    throw std::runtime_error("read_matrix_binary: bad magic in " + path);
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  Matrix m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      m(i, j) = v;
    }
  require_stream(in, path, "read");
  return m;
}

void write_density_csv(const std::string& path, const CMatrix& m) {
  std::ostringstream out;
  out << "row,col,re,im\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << i << ',' << j << ',' << format_double(m(i, j).real()) << ','
          << format_double(m(i, j).imag()) << '\n';
  write_text_atomic(path, out.str());
}

void write_curve_csv(const std::string& path, const std::string& x_name,
                     const std::string& y_name, const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("write_curve_csv: column length mismatch");
  std::ostringstream out;
  out << x_name << ',' << y_name << '\n';
  for (size_t i = 0; i < xs.size(); ++i)
    out << format_double(xs[i]) << ',' << format_double(ys[i]) << '\n';
  write_text_atomic(path, out.str());
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_table_csv: row width mismatch");
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_bernstein_json(const std::string& path, const BernsteinForm& form) {
  nlohmann::json j;
  auto matrix_to_json = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index jj = 0; jj < m.cols(); ++jj) row.push_back(m(i, jj));
      rows.push_back(row);
    }
    return rows;
  };
  j["endpoint_joint"] = matrix_to_json(form.endpoint_joint);
  j["conditionals"] = nlohmann::json::array();
  for (const auto& per_step : form.conditionals) {
    nlohmann::json step = nlohmann::json::array();
    for (const Matrix& m : per_step) step.push_back(matrix_to_json(m));
    j["conditionals"].push_back(step);
  }
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace cycleqm
