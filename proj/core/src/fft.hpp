#pragma once

// Thin RAII wrappers over FFTW plans. Plans are created under a global lock
// (FFTW's planner is not re-entrant) and executed with the new-array API,
// which is thread-safe.

#include <complex>
#include <span>

namespace sbl::detail {

/// Orthonormal DCT-II (forward) and its inverse, DCT-III, of a fixed size.
class OrthoDct {
 public:
  explicit OrthoDct(long size);
  ~OrthoDct();
  OrthoDct(const OrthoDct&) = delete;
  OrthoDct& operator=(const OrthoDct&) = delete;

  long size() const noexcept { return size_; }

  /// out = Ω in. `in` is clobbered.
  void forward(std::span<double> in, std::span<double> out) const;
  /// out = Ωᵀ in. `in` is clobbered.
  void inverse(std::span<double> in, std::span<double> out) const;

 private:
  long size_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// Linear (non-circular) convolution and correlation against a fixed real
/// filter, truncated to the filter length. The padded transform length is a
/// power of two ≥ 2·size − 1, so no wraparound reaches the kept samples.
class TruncatedConvolution {
 public:
  explicit TruncatedConvolution(std::span<const double> filter);
  ~TruncatedConvolution();
  TruncatedConvolution(const TruncatedConvolution&) = delete;
  TruncatedConvolution& operator=(const TruncatedConvolution&) = delete;

  /// out_i = Σ_{j ≤ i} filter_{i-j} in_j.
  void convolve(std::span<const double> in, std::span<double> out) const;
  /// out_j = Σ_{i ≥ j} filter_{i-j} in_i.
  void correlate(std::span<const double> in, std::span<double> out) const;

 private:
  void run(std::span<const double> in, std::span<double> out, bool conjugate) const;

  long size_;
  long padded_;
  void* r2c_plan_;
  void* c2r_plan_;
  std::complex<double>* spectrum_;
};

}  // namespace sbl::detail
