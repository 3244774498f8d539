#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <stdexcept>
#include <string>

namespace cryobayes {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Symmetric positive-definite precision matrices and observation operators
// are stored in compressed column form; assembly goes through triplets.
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Bad user input: rejected polygons, malformed files, schema violations.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-SPD systems, CFL violations, non-finite targets.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure: unreadable inputs, unwritable outputs.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cryobayes
