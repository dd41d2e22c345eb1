#pragma once

#include <Eigen/Dense>

#include <string>

#include "acgan/errors.hpp"

namespace acgan {

using Tensor = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline std::string shape_string(const Tensor& t) { return shape_string(t.rows(), t.cols()); }

inline void require_shape(const Tensor& t, Index rows, Index cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + shape_string(rows, cols) + ", got " +
                         shape_string(t));
  }
}

inline void require_finite(const Tensor& t, const char* what) {
  if (!t.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace acgan
