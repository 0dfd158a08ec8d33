#pragma once

#include <iosfwd>
#include <string>

#include "imc/matrix.hpp"
#include "imc/observation.hpp"

namespace imc {

/// 17-significant-digit decimal; round-trips the double bit-exactly.
std::string format_double(double v);

/// Matrix CSV: header "rows,cols", then one comma-separated line per row.
void write_matrix_csv(std::ostream& os, const Matrix& m);
void write_matrix_csv_file(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(std::istream& is);
Matrix read_matrix_csv_file(const std::string& path);

/// ObservationSet CSV: header "n1,n2,p", then "i,j,v" lines.
void write_observations_csv(std::ostream& os, const ObservationSet& obs);
void write_observations_csv_file(const std::string& path, const ObservationSet& obs);
ObservationSet read_observations_csv(std::istream& is);
ObservationSet read_observations_csv_file(const std::string& path);

}  // namespace imc
