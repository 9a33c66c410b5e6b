#include "pwmstab/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

namespace pwmstab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::NoRoot: return "no-root";
    case ErrorCode::NoSwitching: return "no-switching";
    case ErrorCode::DegenerateOrbit: return "degenerate-orbit";
    case ErrorCode::Grazing: return "grazing";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Pole: return "pole";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::OracleInvalid: return "oracle-invalid";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::Dimension, os.str());
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::Domain, std::string(what) + " has non-finite entries");
  }
}

namespace {

// Padé numerator/denominator pieces: r(A) = (V - U)^{-1} (V + U).
struct PadeParts {
  Matrix u;
  Matrix v;
};

PadeParts pade3(const Matrix& a) {
  constexpr std::array<double, 4> b{120.0, 60.0, 12.0, 1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  return {a * (b[3] * a2 + b[1] * id), b[2] * a2 + b[0] * id};
}

PadeParts pade5(const Matrix& a) {
  constexpr std::array<double, 6> b{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  return {a * (b[5] * a4 + b[3] * a2 + b[1] * id), b[4] * a4 + b[2] * a2 + b[0] * id};
}

PadeParts pade7(const Matrix& a) {
  constexpr std::array<double, 8> b{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                    25200.0,    1512.0,    56.0,      1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  return {a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id),
          b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id};
}

PadeParts pade9(const Matrix& a) {
  constexpr std::array<double, 10> b{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                     30270240.0,    2162160.0,    110880.0,     3960.0,
                                     90.0,          1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix a8 = a6 * a2;
  return {a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id),
          b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id};
}

PadeParts pade13(const Matrix& a) {
  constexpr std::array<double, 14> b{
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  Matrix u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  u += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  u = a * u;
  Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return {std::move(u), std::move(v)};
}

Matrix pade_ratio(const PadeParts& p) {
  return (p.v - p.u).partialPivLu().solve(p.v + p.u);
}

// Theta values bounding ||A||_1 for which each Padé degree reaches unit
// roundoff (Higham 2005).
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm_1(const Matrix& m) {
  return m.cols() == 0 ? 0.0 : m.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename M>
double norm_inf(const M& m) {
  return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename M, typename V>
auto checked_solve(const M& m, const V& b) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::Dimension, "linear solve needs a square matrix");
  }
  if (b.size() != m.rows()) {
    throw Error(ErrorCode::Dimension, "right-hand side length does not match the matrix");
  }
  const double scale = norm_inf(m);
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::Singular, "matrix is zero");
  }
  Eigen::PartialPivLU<M> lu(m);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= 1e-14 * scale)) {
    throw Error(ErrorCode::Singular, "matrix is numerically singular");
  }
  return V(lu.solve(b));
}

}  // namespace

Matrix mat_exp(const Matrix& a, double t) {
  require_square(a, "matrix exponential argument");
  require_finite(a, "matrix exponential argument");
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::Domain, "matrix exponential time must be finite");
  }
  const Matrix at = a * t;
  const double n1 = norm_1(at);
  if (n1 <= kTheta3) return pade_ratio(pade3(at));
  if (n1 <= kTheta5) return pade_ratio(pade5(at));
  if (n1 <= kTheta7) return pade_ratio(pade7(at));
  if (n1 <= kTheta9) return pade_ratio(pade9(at));

  const int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(n1 / kTheta13))));
  Matrix r = pade_ratio(pade13(at / std::ldexp(1.0, squarings)));
  for (int i = 0; i < squarings; ++i) {
    r = r * r;
  }
  return r;
}

Matrix mat_exp_integral(const Matrix& a, double t) {
  require_square(a, "matrix exponential argument");
  const Eigen::Index n = a.rows();
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = Matrix::Identity(n, n);
  return mat_exp(block, t).topRightCorner(n, n);
}

Vector propagate_affine(const Matrix& a, const Vector& b, const Vector& x, double t) {
  require_square(a, "state matrix");
  const Eigen::Index n = a.rows();
  if (b.size() != n || x.size() != n) {
    throw Error(ErrorCode::Dimension, "affine propagation vector length mismatch");
  }
  Matrix block = Matrix::Zero(n + 1, n + 1);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, 1) = b;
  const Matrix e = mat_exp(block, t);
  return e.topLeftCorner(n, n) * x + e.topRightCorner(n, 1);
}

std::vector<Complex> eigenvalues(const Matrix& m) {
  require_square(m, "eigenvalue argument");
  require_finite(m, "eigenvalue argument");
  const Eigen::Index n = m.rows();
  if (n == 0) return {};
  if (n == 1) return {Complex(m(0, 0), 0.0)};
  if (n == 2) {
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double mean = 0.5 * (a + d);
    const double half_diff = 0.5 * (a - d);
    const double disc = half_diff * half_diff + b * c;
    const double det = a * d - b * c;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      // Larger-magnitude root first, the other from the determinant.
      const double big = mean >= 0.0 ? mean + root : mean - root;
      const double small = big != 0.0 ? det / big : mean - root;
      return {Complex(big, 0.0), Complex(small, 0.0)};
    }
    const double im = std::sqrt(-disc);
    return {Complex(mean, im), Complex(mean, -im)};
  }
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "eigenvalue iteration did not converge");
  }
  const ComplexVector values = solver.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

ComplexVector solve_complex(const ComplexMatrix& m, const ComplexVector& b) {
  return checked_solve(m, b);
}

Vector solve_real(const Matrix& m, const Vector& b) { return checked_solve(m, b); }

RootBracket bracket_root(const std::function<double(double)>& f, double lo, double hi,
                         double tol) {
  if (!(lo <= hi)) std::swap(lo, hi);
  double flo = f(lo);
  double fhi = f(hi);
  if (std::isnan(flo) || std::isnan(fhi)) {
    throw Error(ErrorCode::Domain, "root function returned NaN at a bracket endpoint");
  }
  if (flo == 0.0) return {lo, lo, lo};
  if (fhi == 0.0) return {hi, hi, hi};
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw Error(ErrorCode::NoRoot, "no sign change on the bracket");
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const auto done = [tol](double a, double b) {
    return std::abs(b - a) <= std::max(tol, 4.0 * eps * std::max(std::abs(a), std::abs(b)));
  };
  std::uintmax_t iterations = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iterations);

  double fa = f(a);
  double fb = f(b);
  // TOMS 748 stops on its iteration cap; finish with bisection if needed.
  while (!done(a, b) && fa != 0.0 && fb != 0.0) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, mid, mid};
    if ((fm > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  return {a, b, std::abs(fa) <= std::abs(fb) ? a : b};
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  return bracket_root(f, lo, hi, tol).root;
}

}  // namespace pwmstab
