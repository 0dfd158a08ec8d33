#include "imc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace imc {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw_invalid(context + ": cannot parse number '" + s + "'");
  }
  if (pos != s.size()) throw_invalid(context + ": trailing characters in '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw_invalid(context + ": cannot parse integer '" + s + "'");
  }
  if (pos != s.size()) throw_invalid(context + ": trailing characters in '" + s + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  os << m.rows() << ',' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m) {
  auto os = open_out(path);
  write_matrix_csv(os, m);
}

Matrix read_matrix_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw_invalid("matrix csv: missing header");
  auto header = split(line, ',');
  if (header.size() != 2) throw_invalid("matrix csv: header must be rows,cols");
  const long rows = parse_long(header[0], "matrix csv header");
  const long cols = parse_long(header[1], "matrix csv header");
  if (rows < 1 || cols < 1) throw_invalid("matrix csv: dimensions must be positive");
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw_invalid("matrix csv: truncated at row " + std::to_string(i));
    auto fields = split(line, ',');
    if (static_cast<long>(fields.size()) != cols)
      throw_invalid("matrix csv: row " + std::to_string(i) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    for (long j = 0; j < cols; ++j)
      m(i, j) = parse_double(fields[j], "matrix csv row " + std::to_string(i));
  }
  require_finite(m, "matrix csv");
  return m;
}

Matrix read_matrix_csv_file(const std::string& path) {
  auto is = open_in(path);
  return read_matrix_csv(is);
}

void write_observations_csv(std::ostream& os, const ObservationSet& obs) {
  os << obs.n1() << ',' << obs.n2() << ',' << format_double(obs.p()) << '\n';
  for (const Triple& t : obs.triples())
    os << t.row << ',' << t.col << ',' << format_double(t.value) << '\n';
}

void write_observations_csv_file(const std::string& path, const ObservationSet& obs) {
  auto os = open_out(path);
  write_observations_csv(os, obs);
}

ObservationSet read_observations_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw_invalid("observations csv: missing header");
  auto header = split(line, ',');
  if (header.size() != 3) throw_invalid("observations csv: header must be n1,n2,p");
  const long n1 = parse_long(header[0], "observations csv header");
  const long n2 = parse_long(header[1], "observations csv header");
  const double p = parse_double(header[2], "observations csv header");
  std::vector<Triple> triples;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 3)
      throw_invalid("observations csv: line " + std::to_string(line_no) + " must be i,j,v");
    const std::string ctx = "observations csv line " + std::to_string(line_no);
    triples.push_back({parse_long(fields[0], ctx), parse_long(fields[1], ctx),
                       parse_double(fields[2], ctx)});
  }
  return ObservationSet(n1, n2, p, std::move(triples));
}

ObservationSet read_observations_csv_file(const std::string& path) {
  auto is = open_in(path);
  return read_observations_csv(is);
}

}  // namespace imc
