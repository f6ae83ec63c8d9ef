#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace oesense::detail {

using cplx = std::complex<double>;

// Forward DFT of a real sequence zero-padded (or truncated) to n points.
// Returns the full n-point spectrum.
std::vector<cplx> dft_real(std::span<const double> x, std::size_t n);

// Half spectrum (n/2 + 1 bins) of a real sequence padded to n points.
std::vector<cplx> rfft(std::span<const double> x, std::size_t n);

// Unnormalized inverse DFT; callers divide by n.
std::vector<cplx> idft(std::span<const cplx> spectrum);

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace oesense::detail
