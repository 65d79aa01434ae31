// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/sh.hpp"

#include <stdexcept>

namespace rdf {

int sh_basis_size(int degree) {
  if (degree < 0 || degree > kShMaxDegree) {
    throw std::invalid_argument("spherical-harmonics degree must be in [0, 4]");
  }
  return (degree + 1) * (degree + 1);
}

void eval_sh(int degree, const Eigen::Vector3d& dir, double* out,
             Eigen::Matrix<double, Eigen::Dynamic, 3>* jac) {
  const int n = sh_basis_size(degree);
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;

  if (jac) {
    jac->setZero(n, 3);
  }
  auto set = [&](int i, double v, double dx, double dy, double dz) {
    out[i] = v;
    if (jac) {
      (*jac)(i, 0) = dx;
      (*jac)(i, 1) = dy;
      (*jac)(i, 2) = dz;
    }
  };

  set(0, 0.28209479177387814, 0, 0, 0);
  if (degree < 1) return;

  set(1, -0.48860251190291987 * y, 0, -0.48860251190291987, 0);
  set(2, 0.48860251190291987 * z, 0, 0, 0.48860251190291987);
  set(3, -0.48860251190291987 * x, -0.48860251190291987, 0, 0);
  if (degree < 2) return;

  set(4, 1.0925484305920792 * xy, 1.0925484305920792 * y,
      1.0925484305920792 * x, 0);
  set(5, -1.0925484305920792 * yz, 0, -1.0925484305920792 * z,
      -1.0925484305920792 * y);
  set(6, 0.94617469575755997 * zz - 0.31539156525251999, 0, 0,
      1.8923493915151199 * z);
  set(7, -1.0925484305920792 * xz, -1.0925484305920792 * z, 0,
      -1.0925484305920792 * x);
  set(8, 0.54627421529603959 * (xx - yy), 1.0925484305920792 * x,
      -1.0925484305920792 * y, 0);
  if (degree < 3) return;

  set(9, 0.59004358992664352 * y * (-3.0 * xx + yy),
      -3.5402615395598611 * xy, 0.59004358992664352 * (-3.0 * xx + 3.0 * yy),
      0);
  set(10, 2.8906114426405538 * xy * z, 2.8906114426405538 * yz,
      2.8906114426405538 * xz, 2.8906114426405538 * xy);
  set(11, 0.45704579946446572 * y * (1.0 - 5.0 * zz), 0,
      0.45704579946446572 * (1.0 - 5.0 * zz), -4.5704579946446570 * yz);
  set(12, 0.3731763325901154 * z * (5.0 * zz - 3.0), 0, 0,
      0.3731763325901154 * (15.0 * zz - 3.0));
  set(13, 0.45704579946446572 * x * (1.0 - 5.0 * zz),
      0.45704579946446572 * (1.0 - 5.0 * zz), 0, -4.5704579946446570 * xz);
  set(14, 1.4453057213202769 * z * (xx - yy), 2.8906114426405538 * xz,
      -2.8906114426405538 * yz, 1.4453057213202769 * (xx - yy));
  set(15, 0.59004358992664352 * x * (-xx + 3.0 * yy),
      0.59004358992664352 * (-3.0 * xx + 3.0 * yy), 3.5402615395598611 * xy,
      0);
  if (degree < 4) return;

  set(16, 2.5033429417967046 * xy * (xx - yy),
      2.5033429417967046 * (3.0 * xx * y - yy * y),
      2.5033429417967046 * (xx * x - 3.0 * x * yy), 0);
  set(17, 1.7701307697799304 * yz * (-3.0 * xx + yy),
      -10.620784618679582 * xy * z,
      1.7701307697799304 * z * (-3.0 * xx + 3.0 * yy),
      1.7701307697799304 * y * (-3.0 * xx + yy));
  set(18, 0.94617469575756008 * xy * (7.0 * zz - 1.0),
      0.94617469575756008 * y * (7.0 * zz - 1.0),
      0.94617469575756008 * x * (7.0 * zz - 1.0),
      13.246445740605841 * xy * z);
  set(19, 0.66904654355728921 * yz * (3.0 - 7.0 * zz), 0,
      0.66904654355728921 * z * (3.0 - 7.0 * zz),
      0.66904654355728921 * y * (3.0 - 21.0 * zz));
  set(20, 3.7024941420321507 * zz * zz - 3.1735664074561294 * zz +
              0.31735664074561293,
      0, 0, 14.809976568128603 * zz * z - 6.3471328149122588 * z);
  set(21, 0.66904654355728921 * xz * (3.0 - 7.0 * zz),
      0.66904654355728921 * z * (3.0 - 7.0 * zz), 0,
      0.66904654355728921 * x * (3.0 - 21.0 * zz));
  set(22, 0.47308734787878004 * (xx - yy) * (7.0 * zz - 1.0),
      0.94617469575756008 * x * (7.0 * zz - 1.0),
      -0.94617469575756008 * y * (7.0 * zz - 1.0),
      6.6232228709029205 * z * (xx - yy));
  set(23, 1.7701307697799304 * xz * (-xx + 3.0 * yy),
      1.7701307697799304 * z * (-3.0 * xx + 3.0 * yy),
      10.620784618679582 * xy * z,
      1.7701307697799304 * x * (-xx + 3.0 * yy));
  set(24, 0.62583573544917614 * (xx * xx + yy * yy) -
              3.7550144126950569 * xx * yy,
      2.5033429417967046 * xx * x - 7.5100288253901138 * x * yy,
      2.5033429417967046 * yy * y - 7.5100288253901138 * xx * y, 0);
}

}  // namespace rdf
