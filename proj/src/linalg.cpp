#include "popdyn/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "popdyn/error.hpp"

namespace popdyn::linalg {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Matrix& a) {
  return {a.data().data(), static_cast<Eigen::Index>(a.rows()),
          static_cast<Eigen::Index>(a.cols())};
}

}  // namespace

Vector solve(const Matrix& a, std::span<const double> b, double max_residual) {
  if (!a.square()) throw Error(ErrorCode::NonSquare, "solve: matrix is not square");
  if (a.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "solve: rhs length");
  const auto n = static_cast<Eigen::Index>(a.rows());
  const Eigen::MatrixXd m = view(a);
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  // PartialPivLU never reports rank deficiency; look at the pivots ourselves.
  const Eigen::MatrixXd& packed = lu.matrixLU();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(std::fabs(packed(i, i)) > 1e-13 * scale)) {
      throw Error(ErrorCode::SingularSystem, "solve: matrix is numerically singular");
    }
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  const double res = (m * x - rhs).cwiseAbs().maxCoeff();
  const double ref = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!std::isfinite(res) || res > max_residual * ref) {
    throw Error(ErrorCode::SingularSystem, "solve: residual " + std::to_string(res) +
                                               " exceeds tolerance");
  }
  return Vector(x.data(), x.data() + n);
}

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
  if (!a.square()) throw Error(ErrorCode::NonSquare, "eigenvalues: matrix is not square");
  if (a.rows() == 0) return {};
  const Eigen::MatrixXd m = view(a);
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "eigenvalues: QR iteration did not converge");
  }
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> eigenvalue_magnitudes(const Matrix& a) {
  const auto ev = eigenvalues(a);
  std::vector<double> mags(ev.size());
  std::transform(ev.begin(), ev.end(), mags.begin(), [](auto z) { return std::abs(z); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return mags;
}

}  // namespace popdyn::linalg
