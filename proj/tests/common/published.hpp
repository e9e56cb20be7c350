#pragma once

#include <array>

#include "ksnarmax/narmax.hpp"

namespace published {

/// sigma_k^2 of the (0,2,1) row of the order scan.
inline constexpr std::array<double, 5> scan_sigma2_021{0.0012e-4, 0.0129e-4, 0.0472e-4, 0.2434e-4, 0.4056e-4};

/// The reported (0,2,1) model, with the table's scale factors applied.
inline ksnarmax::NarmaxParams model_021(double period = ksnarmax::paper_period()) {
  using namespace ksnarmax;
  constexpr int K = 5;
  NarmaxParams p = NarmaxParams::zeros({0, 2, 1}, Ansatz::narmax, K, 0.1, period);
  const double mu[K] = {0.0425, -0.0073, 0.3969, -0.9689, -0.1674};
  const double b0[K] = {0.0909, 0.1593, 0.2598, 0.7374, 0.3822};
  const double b1[K] = {-0.0910, -0.1600, -0.2617, -0.7408, -0.3799};
  const double d[K] = {0.9959, 0.9962, 0.9942, 0.9977, 0.9974};
  const double s2[K] = {0.0012, 0.0138, 0.0520, 0.2544, 0.4056};
  const double c[K][6] = {{0.0002, 0.0000, 0.0010, 0.0013, -0.0003, -0.0082},
                          {0.0005, 0.2089, 0.0015, 0.0007, 0.0001, -0.0157},
                          {0.0008, 0.3836, 0.1055, -0.0013, -0.0040, -0.0283},
                          {0.0010, 0.5841, 0.2971, -0.4104, 0.0449, -0.0800},
                          {0.0012, 0.6674, 0.4763, 0.2707, 0.1016, -0.0710}};
  for (int k = 0; k < K; ++k) {
    p.theta[k] = {mu[k] * 1e-4,     b0[k],           b1[k],           c[k][0],  c[k][1] * 1e-3,
                  c[k][2] * 1e-3,   c[k][3] * 1e-3,  c[k][4] * 1e-3,  c[k][5],  d[k]};
    p.sigma2[k] = s2[k] * 1e-4;
  }
  return p;
}

}  // namespace published
