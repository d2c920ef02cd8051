#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace rcs {

/// Matrix exponential by scaling and squaring with the diagonal [6/6] Pade
/// approximant. The matrix is scaled by 2^-s until its 1-norm is at most 1/2,
/// where the truncation error of the approximant is below 1e-16.
template <typename Mat>
Mat expm(const Mat& a) {
  using Scalar = typename Mat::Scalar;
  // c_k = (2m - k)! m! / ((2m)! k! (m - k)!) for m = 6.
  static constexpr double c[7] = {1.0,
                                  0.5,
                                  5.0 / 44.0,
                                  1.0 / 66.0,
                                  1.0 / 792.0,
                                  1.0 / 15840.0,
                                  1.0 / 665280.0};
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > 0.5) s = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Mat x = a * Scalar(std::ldexp(1.0, -s));
  const Mat x2 = x * x;
  const Mat x4 = x2 * x2;
  const Mat x6 = x4 * x2;
  const Mat id = Mat::Identity(a.rows(), a.cols());
  const Mat even = c[0] * id + c[2] * x2 + c[4] * x4 + c[6] * x6;
  const Mat odd = x * (c[1] * id + c[3] * x2 + c[5] * x4);
  Mat r = (even - odd).partialPivLu().solve(even + odd);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

/// exp(hL), phi_1(hL) and phi_2(hL) for a 4x4 L, where phi_1(z) = (e^z - 1)/z
/// and phi_2(z) = (e^z - 1 - z)/z^2. They are read off the first block row of
/// the exponential of [[hL, I, 0], [0, 0, I], [0, 0, 0]].
template <typename Mat4>
void phi_functions(const Mat4& hl, Mat4& e, Mat4& phi1, Mat4& phi2) {
  using Scalar = typename Mat4::Scalar;
  using Mat12 = Eigen::Matrix<Scalar, 12, 12>;
  Mat12 aug = Mat12::Zero();
  aug.template block<4, 4>(0, 0) = hl;
  aug.template block<4, 4>(0, 4) = Mat4::Identity();
  aug.template block<4, 4>(4, 8) = Mat4::Identity();
  const Mat12 ex = expm(aug);
  e = ex.template block<4, 4>(0, 0);
  phi1 = ex.template block<4, 4>(0, 4);
  phi2 = ex.template block<4, 4>(0, 8);
}

}  // namespace rcs
