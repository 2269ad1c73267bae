#pragma once

#include <string>

#include "nare/types.hpp"

namespace nare {

/// Matrix Market payload: coordinate files come back sparse, array files
/// dense. Symmetric and skew-symmetric storage is expanded to full.
struct MatrixMarketData {
  bool is_sparse = false;
  Matrix dense;
  SparseMatrix sparse;

  Matrix to_dense() const { return is_sparse ? Matrix(sparse) : dense; }
};

/// Parse errors carry the offending 1-based line number.
MatrixMarketData read_matrix_market(const std::string& path);

void write_matrix_market_array(const std::string& path, const Matrix& m);
void write_matrix_market_coordinate(const std::string& path,
                                    const SparseMatrix& m);

}  // namespace nare
