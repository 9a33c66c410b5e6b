#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pwmstab/error.hpp"

namespace pwmstab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Throws Error(Dimension) unless `m` is square. `what` names the operand.
void require_square(const Matrix& m, const char* what);

/// Throws Error(Domain) if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// e^{A t} by scaling and squaring with a degree-13 Padé kernel.
///
/// `t` may be zero or negative. Relative accuracy is close to machine
/// precision for ||A t|| up to a few hundred; the squaring phase keeps the
/// error bound of the kernel at theta_13 = 5.37.
Matrix mat_exp(const Matrix& a, double t = 1.0);

/// ∫_0^t e^{A s} ds, read from the upper-right block of exp([[A, I], [0, 0]] t).
/// Valid for singular A.
Matrix mat_exp_integral(const Matrix& a, double t);

/// e^{A t} x + ∫_0^t e^{A s} ds b in a single (N+1)-dimensional exponential.
Vector propagate_affine(const Matrix& a, const Vector& b, const Vector& x, double t);

/// All eigenvalues with algebraic multiplicity. N <= 2 uses closed forms,
/// larger matrices a Hessenberg/shifted-QR solver. Meant for N <= 8.
std::vector<Complex> eigenvalues(const Matrix& m);

/// Solves M x = b by LU with partial pivoting. A pivot below
/// 1e-14·||M||_inf raises Error(Singular).
ComplexVector solve_complex(const ComplexMatrix& m, const ComplexVector& b);

/// Real counterpart of `solve_complex` with the same singularity rule.
Vector solve_real(const Matrix& m, const Vector& b);

struct RootBracket {
  double lo;
  double hi;
  double root;  ///< endpoint of [lo, hi] with the smaller |f|
};

/// Bracketing root search (TOMS 748). Requires f(lo)·f(hi) <= 0, else
/// Error(NoRoot). Terminates when hi - lo <= tol (never tighter than a few
/// ulps). The returned bracket always straddles the sign change.
RootBracket bracket_root(const std::function<double(double)>& f, double lo, double hi,
                         double tol);

/// Convenience wrapper returning `bracket_root(...).root`.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace pwmstab
