#include "odesens/ode/linear_solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odesens/errors.hpp"

namespace odesens::ode {

void DenseLU::factorize(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ConfigError("LU of a non-square matrix");
  if (!a.allFinite()) throw SingularMatrix("iteration matrix has non-finite entries");
  n_ = static_cast<std::size_t>(a.rows());
  lu_.compute(a);
  const auto& u = lu_.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (u(i, i) == 0.0 || !std::isfinite(u(i, i))) throw SingularMatrix("zero pivot in LU factorization");
  }
  if (n_ > 0 && lu_.rcond() < std::numeric_limits<double>::epsilon()) {
    throw SingularMatrix("iteration matrix is numerically singular");
  }
}

void DenseLU::solve(std::span<double> b) const {
  if (b.size() != n_) throw ConfigError("LU solve: right-hand side size mismatch");
  Eigen::Map<Eigen::VectorXd> x(b.data(), static_cast<Eigen::Index>(b.size()));
  x = lu_.solve(x).eval();
}

void DenseLU::solve(Eigen::Ref<Eigen::MatrixXd> b) const {
  if (static_cast<std::size_t>(b.rows()) != n_) throw ConfigError("LU solve: right-hand side size mismatch");
  b = lu_.solve(b).eval();
}

void DualLU::factorize(const Eigen::MatrixXd& a0, std::vector<double> partials, std::size_t width) {
  const auto n = static_cast<std::size_t>(a0.rows());
  if (!partials.empty() && partials.size() != n * n * width) throw ConfigError("DualLU: partials size mismatch");
  lu_.factorize(a0);
  partials_ = std::move(partials);
  width_ = partials_.empty() ? 0 : width;
}

void DualLU::solve(std::span<Dual> b) const {
  const std::size_t n = lu_.size();
  if (b.size() != n) throw ConfigError("LU solve: right-hand side size mismatch");
  std::size_t w = width_;
  for (const auto& x : b) w = std::max(w, x.width());

  std::vector<double> x0(n);
  for (std::size_t i = 0; i < n; ++i) x0[i] = b[i].value();
  lu_.solve(std::span<double>(x0));
  if (w == 0) {
    for (std::size_t i = 0; i < n; ++i) b[i] = Dual(x0[i]);
    return;
  }

  Eigen::MatrixXd r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < w; ++k) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = b[i].partial(k);
  }
  if (width_ != 0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double xj = x0[j];
        if (xj == 0.0) continue;
        const double* a = &partials_[(i * n + j) * width_];
        for (std::size_t k = 0; k < width_; ++k) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -= a[k] * xj;
      }
    }
  }
  lu_.solve(r);
  std::vector<double> d(w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < w; ++k) d[k] = r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    b[i] = Dual(x0[i], d);
  }
}

}  // namespace odesens::ode
