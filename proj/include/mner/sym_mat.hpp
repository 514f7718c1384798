#pragma once

#include <Eigen/Dense>

namespace mner {

/// Dense symmetric k x k matrix. Symmetry is enforced once, at construction,
/// so every SymMat in flight is exactly symmetric.
class SymMat {
 public:
  /// Relative asymmetry tolerated (and averaged away) on construction.
  static constexpr double kAsymmetryTolerance = 1e-8;

  SymMat() = default;
  /// Throws InvalidInput if `a` is empty, non-square, or asymmetric beyond
  /// kAsymmetryTolerance relative to its largest entry.
  explicit SymMat(const Eigen::MatrixXd& a);

  static SymMat zero(Eigen::Index k);
  static SymMat identity(Eigen::Index k);
  /// Symmetric part (A + A')/2 with no asymmetry check.
  static SymMat symmetrize(const Eigen::MatrixXd& a);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Eigen::VectorXd eigenvalues() const;
  double min_eigenvalue() const;
  /// Largest absolute eigenvalue (spectral norm).
  double norm() const;
  /// All eigenvalues >= -tol * max(norm(), 1).
  bool is_psd(double tol = 1e-12) const;
  double quad(const Eigen::VectorXd& x) const { return x.dot(m_ * x); }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double c) const;
  friend SymMat operator*(double c, const SymMat& s) { return s * c; }
  bool operator==(const SymMat& o) const { return m_ == o.m_; }

 private:
  struct Trusted {};
  SymMat(Trusted, Eigen::MatrixXd a) : m_(std::move(a)) {}

  Eigen::MatrixXd m_;
};

}  // namespace mner
