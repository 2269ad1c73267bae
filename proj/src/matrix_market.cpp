#include "nare/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace nare {

namespace {

[[noreturn]] void fail(const std::string& path, long line,
                       const std::string& msg) {
  throw NareError(path + ":" + std::to_string(line) + ": " + msg);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

MatrixMarketData read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NareError("cannot open " + path);

  long line_no = 0;
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  ++line_no;

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix")
    fail(path, 1, "not a MatrixMarket matrix header");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array")
    fail(path, 1, "unsupported format '" + format + "'");
  if (field != "real" && field != "integer" && field != "pattern")
    fail(path, 1, "unsupported field '" + field + "'");
  if (field == "pattern" && format == "array")
    fail(path, 1, "pattern field requires coordinate format");
  if (symmetry != "general" && symmetry != "symmetric" &&
      symmetry != "skew-symmetric")
    fail(path, 1, "unsupported symmetry '" + symmetry + "'");

  auto next_content_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_content_line()) fail(path, line_no + 1, "missing size line");
  std::istringstream size_line(line);
  long rows = 0, cols = 0, nnz = 0;

  MatrixMarketData out;
  if (format == "coordinate") {
    if (!(size_line >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
      fail(path, line_no, "bad coordinate size line");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(2 * nnz));
    for (long k = 0; k < nnz; ++k) {
      if (!next_content_line()) fail(path, line_no + 1, "unexpected end of file");
      std::istringstream entry(line);
      long i = 0, j = 0;
      double v = 1.0;
      if (!(entry >> i >> j)) fail(path, line_no, "bad coordinate entry");
      if (field != "pattern" && !(entry >> v))
        fail(path, line_no, "missing value");
      if (i < 1 || i > rows || j < 1 || j > cols)
        fail(path, line_no, "index out of range");
      trip.emplace_back(i - 1, j - 1, v);
      if (symmetry != "general" && i != j)
        trip.emplace_back(j - 1, i - 1,
                          symmetry == "skew-symmetric" ? -v : v);
    }
    out.is_sparse = true;
    out.sparse.resize(rows, cols);
    out.sparse.setFromTriplets(trip.begin(), trip.end());
    out.sparse.makeCompressed();
    return out;
  }

  if (!(size_line >> rows >> cols) || rows <= 0 || cols <= 0)
    fail(path, line_no, "bad array size line");
  Matrix m = Matrix::Zero(rows, cols);
  auto read_value = [&]() {
    if (!next_content_line()) fail(path, line_no + 1, "unexpected end of file");
    std::istringstream entry(line);
    double v = 0.0;
    if (!(entry >> v)) fail(path, line_no, "bad array value");
    return v;
  };
  if (symmetry == "general") {
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) m(i, j) = read_value();
  } else {
    if (rows != cols) fail(path, line_no, "symmetric array must be square");
    for (long j = 0; j < cols; ++j)
      for (long i = j; i < rows; ++i) {
        const double v = read_value();
        m(i, j) = v;
        if (i != j) m(j, i) = symmetry == "skew-symmetric" ? -v : v;
      }
  }
  out.dense = std::move(m);
  return out;
}

void write_matrix_market_array(const std::string& path, const Matrix& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw NareError("cannot write " + path);
  std::fprintf(f, "%%%%MatrixMarket matrix array real general\n");
  std::fprintf(f, "%ld %ld\n", long(m.rows()), long(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      std::fprintf(f, "%.17g\n", m(i, j));
  std::fclose(f);
}

void write_matrix_market_coordinate(const std::string& path,
                                    const SparseMatrix& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw NareError("cannot write " + path);
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(f, "%ld %ld %ld\n", long(m.rows()), long(m.cols()),
               long(m.nonZeros()));
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      std::fprintf(f, "%ld %ld %.17g\n", long(it.row() + 1), long(it.col() + 1),
                   it.value());
  std::fclose(f);
}

}  // namespace nare
