#pragma once

#include <span>

#include "sefdm/types.hpp"

namespace sefdm {

// Unnormalized DFTs of arbitrary length, backed by FFTW.
//   forward: X[f] = sum_k x[k] exp(-j 2 pi f k / n)
//   inverse: x[k] = sum_f X[f] exp(+j 2 pi f k / n)
CVector fft_forward(std::span<const cplx> input);
CVector fft_inverse(std::span<const cplx> input);

}  // namespace sefdm
