// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace csound {

// Complex DFT of arbitrary length. Power-of-two sizes go straight to the FFT
// backend; other sizes (the delay-domain transform length is a prime) use
// Bluestein's chirp-z decomposition so they stay O(n log n). Plans are cached
// per thread, so concurrent callers never share mutable state.

/// Unnormalized forward transform: X[k] = sum_n x[n] exp(-2*pi*i*n*k/N).
void dft_forward(const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

/// Inverse transform with 1/N: x[n] = (1/N) sum_k X[k] exp(+2*pi*i*n*k/N).
void dft_inverse(const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

}  // namespace csound
