#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

namespace sbl::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

long next_pow2(long n) {
  long p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

OrthoDct::OrthoDct(long size) : size_(size) {
  std::lock_guard lock(planner_mutex());
  FftwBuffer a(sizeof(double) * size), b(sizeof(double) * size);
  auto* in = static_cast<double*>(a.ptr);
  auto* out = static_cast<double*>(b.ptr);
  forward_plan_ = fftw_plan_r2r_1d(static_cast<int>(size), in, out, FFTW_REDFT10, kPlanFlags);
  inverse_plan_ = fftw_plan_r2r_1d(static_cast<int>(size), in, out, FFTW_REDFT01, kPlanFlags);
}

OrthoDct::~OrthoDct() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

// FFTW's REDFT10 computes Y_k = 2 Σ x_n cos(π k (2n+1) / 2D); the orthonormal
// DCT-II scales row k by s_k / 2 with s_0 = √(1/D), s_k = √(2/D).
void OrthoDct::forward(std::span<double> in, std::span<double> out) const {
  fftw_execute_r2r(static_cast<fftw_plan>(forward_plan_), in.data(), out.data());
  const double s0 = std::sqrt(1.0 / size_) / 2.0;
  const double sk = std::sqrt(2.0 / size_) / 2.0;
  out[0] *= s0;
  for (long k = 1; k < size_; ++k) out[k] *= sk;
}

// REDFT01 computes y_n = X_0 + 2 Σ_{k≥1} X_k cos(π k (2n+1) / 2D).
void OrthoDct::inverse(std::span<double> in, std::span<double> out) const {
  in[0] *= std::sqrt(1.0 / size_);
  const double sk = std::sqrt(2.0 / size_) / 2.0;
  for (long k = 1; k < size_; ++k) in[k] *= sk;
  fftw_execute_r2r(static_cast<fftw_plan>(inverse_plan_), in.data(), out.data());
}

TruncatedConvolution::TruncatedConvolution(std::span<const double> filter)
    : size_(static_cast<long>(filter.size())), padded_(next_pow2(2 * size_ - 1)) {
  const long bins = padded_ / 2 + 1;
  spectrum_ = new std::complex<double>[bins];
  std::vector<double> padded(padded_, 0.0);
  std::copy(filter.begin(), filter.end(), padded.begin());

  std::lock_guard lock(planner_mutex());
  FftwBuffer real(sizeof(double) * padded_);
  FftwBuffer cplx(sizeof(fftw_complex) * bins);
  auto* r = static_cast<double*>(real.ptr);
  auto* c = static_cast<fftw_complex*>(cplx.ptr);
  r2c_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(padded_), r, c, kPlanFlags);
  c2r_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(padded_), c, r, kPlanFlags);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_plan_), padded.data(),
                       reinterpret_cast<fftw_complex*>(spectrum_));
}

TruncatedConvolution::~TruncatedConvolution() {
  delete[] spectrum_;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(r2c_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(c2r_plan_));
}

void TruncatedConvolution::convolve(std::span<const double> in, std::span<double> out) const {
  run(in, out, false);
}

void TruncatedConvolution::correlate(std::span<const double> in, std::span<double> out) const {
  run(in, out, true);
}

void TruncatedConvolution::run(std::span<const double> in, std::span<double> out,
                               bool conjugate) const {
  const long bins = padded_ / 2 + 1;
  std::vector<double> buffer(padded_, 0.0);
  std::vector<std::complex<double>> freq(bins);
  std::copy(in.begin(), in.end(), buffer.begin());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_plan_), buffer.data(),
                       reinterpret_cast<fftw_complex*>(freq.data()));
  for (long k = 0; k < bins; ++k) {
    freq[k] *= conjugate ? std::conj(spectrum_[k]) : spectrum_[k];
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_plan_),
                       reinterpret_cast<fftw_complex*>(freq.data()), buffer.data());
  const double scale = 1.0 / static_cast<double>(padded_);
  for (long i = 0; i < size_; ++i) out[i] = buffer[i] * scale;
}

}  // namespace sbl::detail
