#include "fft_detail.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace bubbleloja::detail {
namespace {

std::mutex plan_mutex;
std::map<std::pair<int, int>, fftw_plan> plan_cache;

fftw_plan plan_for(int n, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(n, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    // FFTW_UNALIGNED lets the cached plan execute on any caller-owned buffers.
    fftw_complex* a = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    fftw_complex* b = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    fftw_plan p = fftw_plan_dft_2d(n, n, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    plan_cache.emplace(key, p);
    return p;
}

void run(int n, int sign, const std::complex<double>* in, std::complex<double>* out) {
    fftw_plan p = plan_for(n, sign);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void fft2_forward(int n, const std::complex<double>* in, std::complex<double>* out) {
    run(n, FFTW_FORWARD, in, out);
}

void fft2_inverse(int n, const std::complex<double>* in, std::complex<double>* out) {
    run(n, FFTW_BACKWARD, in, out);
}

}  // namespace bubbleloja::detail
