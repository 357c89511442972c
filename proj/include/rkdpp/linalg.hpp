#pragma once

// Unregularized dense solves with an explicit conditioning check.

#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "rkdpp/core.hpp"

namespace rkdpp {

/// Systems whose 2-norm condition number exceeds this are rejected.
inline constexpr double kConditionLimit = 1e12;

struct SolveDiagnostics {
  double condition = 1.0;
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
};

/// Factorizes a square matrix once and solves against it. Construction
/// throws NumericalFailure when the matrix is singular or its condition
/// number exceeds kConditionLimit; no regularization is ever added.
class CheckedSolver {
 public:
  CheckedSolver(const Eigen::MatrixXd& A, std::string_view what) : qr_() {
    if (A.rows() != A.cols() || A.rows() == 0) {
      throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
    }
    if (!A.allFinite()) throw NumericalFailure(std::string(what) + ": matrix has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    diag_.max_singular_value = sv(0);
    diag_.min_singular_value = sv(sv.size() - 1);
    diag_.condition = diag_.min_singular_value > 0.0 ? diag_.max_singular_value / diag_.min_singular_value
                                                     : std::numeric_limits<double>::infinity();
    if (!(diag_.condition <= kConditionLimit)) {
      std::ostringstream os;
      os << what << ": ill-conditioned system (condition " << diag_.condition << ", min singular value "
         << diag_.min_singular_value << ")";
      throw NumericalFailure(os.str(), diag_.condition, diag_.min_singular_value);
    }
    qr_.compute(A);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return qr_.solve(b); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const { return qr_.solve(B); }

  const SolveDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  SolveDiagnostics diag_;
};

}  // namespace rkdpp
