#ifndef BUBBLELOJA_FFT_DETAIL_HPP
#define BUBBLELOJA_FFT_DETAIL_HPP

#include <complex>

namespace bubbleloja::detail {

// Unnormalised 2D complex DFTs on n x n arrays (row-major). Plans are cached
// per size and shared; execution is thread-safe, planning is serialised.
void fft2_forward(int n, const std::complex<double>* in, std::complex<double>* out);
void fft2_inverse(int n, const std::complex<double>* in, std::complex<double>* out);

}  // namespace bubbleloja::detail

#endif
