#include "sbl/linop.hpp"

#include "fft.hpp"
#include "sbl/error.hpp"
#include "sbl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>

namespace sbl::linop {

namespace {

struct DensePayload {
  Matrix entries;
};

struct DctPayload {
  std::vector<Index> mask;
  std::unique_ptr<detail::OrthoDct> dct;
};

struct ConvPayload {
  double decay = 0.0;
  Vector filter;
  std::unique_ptr<detail::TruncatedConvolution> conv;
};

// Entry (k, n) of the orthonormal DCT-II matrix Ω.
double dct_entry(Index k, Index n, Index size) {
  const double scale = k == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
  return scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                          (2.0 * static_cast<double>(n) + 1.0) / (2.0 * size));
}

}  // namespace

struct LinearOperator::Impl {
  Kind kind;
  Index rows;
  Index cols;
  std::variant<DensePayload, DctPayload, ConvPayload> payload;
};

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::DenseGaussian: return "dense_gaussian";
    case Kind::UndersampledDct: return "undersampled_dct";
    case Kind::ExpConvolution: return "exp_convolution";
    case Kind::ExplicitDense: return "explicit_dense";
  }
  return "unknown";
}

LinearOperator::LinearOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Index LinearOperator::rows() const noexcept { return impl_->rows; }
Index LinearOperator::cols() const noexcept { return impl_->cols; }
Kind LinearOperator::kind() const noexcept { return impl_->kind; }

Matrix LinearOperator::apply(const Matrix& V, Path path) const {
  if (V.rows() != cols() || V.cols() < 1) {
    throw DimensionError("LinearOperator::apply", {cols(), std::max<Index>(V.cols(), 1)},
                         {V.rows(), V.cols()});
  }
  const Index q_count = V.cols();
  Matrix out(rows(), q_count);

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DensePayload>) {
          parallel_for(q_count, [&](Index q) { out.col(q).noalias() = p.entries * V.col(q); });
        } else if constexpr (std::is_same_v<P, DctPayload>) {
          const Index size = cols();
          if (path == Path::Fast) {
            parallel_for(q_count, [&](Index q) {
              std::vector<double> in(V.col(q).data(), V.col(q).data() + size);
              std::vector<double> full(size);
              p.dct->inverse(in, full);
              for (Index i = 0; i < rows(); ++i) out(i, q) = full[p.mask[i]];
            });
          } else {
            parallel_for(q_count, [&](Index q) {
              for (Index i = 0; i < rows(); ++i) {
                double acc = 0.0;
                for (Index j = 0; j < size; ++j) acc += dct_entry(j, p.mask[i], size) * V(j, q);
                out(i, q) = acc;
              }
            });
          }
        } else {
          const Index size = cols();
          if (path == Path::Fast) {
            parallel_for(q_count, [&](Index q) {
              p.conv->convolve({V.col(q).data(), static_cast<std::size_t>(size)},
                               {out.col(q).data(), static_cast<std::size_t>(size)});
            });
          } else {
            parallel_for(q_count, [&](Index q) {
              for (Index i = 0; i < size; ++i) {
                double acc = 0.0;
                for (Index j = 0; j <= i; ++j) acc += p.filter[i - j] * V(j, q);
                out(i, q) = acc;
              }
            });
          }
        }
      },
      impl_->payload);
  return out;
}

Matrix LinearOperator::apply_adjoint(const Matrix& U, Path path) const {
  if (U.rows() != rows() || U.cols() < 1) {
    throw DimensionError("LinearOperator::apply_adjoint", {rows(), std::max<Index>(U.cols(), 1)},
                         {U.rows(), U.cols()});
  }
  const Index q_count = U.cols();
  Matrix out(cols(), q_count);

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DensePayload>) {
          parallel_for(q_count,
                       [&](Index q) { out.col(q).noalias() = p.entries.transpose() * U.col(q); });
        } else if constexpr (std::is_same_v<P, DctPayload>) {
          const Index size = cols();
          if (path == Path::Fast) {
            parallel_for(q_count, [&](Index q) {
              std::vector<double> full(size, 0.0);
              for (Index i = 0; i < rows(); ++i) full[p.mask[i]] = U(i, q);
              p.dct->forward(full, {out.col(q).data(), static_cast<std::size_t>(size)});
            });
          } else {
            parallel_for(q_count, [&](Index q) {
              for (Index j = 0; j < size; ++j) {
                double acc = 0.0;
                for (Index i = 0; i < rows(); ++i) acc += dct_entry(j, p.mask[i], size) * U(i, q);
                out(j, q) = acc;
              }
            });
          }
        } else {
          const Index size = cols();
          if (path == Path::Fast) {
            parallel_for(q_count, [&](Index q) {
              p.conv->correlate({U.col(q).data(), static_cast<std::size_t>(size)},
                                {out.col(q).data(), static_cast<std::size_t>(size)});
            });
          } else {
            parallel_for(q_count, [&](Index q) {
              for (Index j = 0; j < size; ++j) {
                double acc = 0.0;
                for (Index i = j; i < size; ++i) acc += p.filter[i - j] * U(i, q);
                out(j, q) = acc;
              }
            });
          }
        }
      },
      impl_->payload);
  return out;
}

Vector LinearOperator::column_sq_norms() const {
  return std::visit(
      [&](const auto& p) -> Vector {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DensePayload>) {
          return p.entries.colwise().squaredNorm().transpose();
        } else if constexpr (std::is_same_v<P, DctPayload>) {
          const Index size = cols();
          Vector norms(size);
          for (Index j = 0; j < size; ++j) {
            double acc = 0.0;
            for (Index m : p.mask) {
              const double e = dct_entry(j, m, size);
              acc += e * e;
            }
            norms[j] = acc;
          }
          return norms;
        } else {
          // Column j holds φ_0..φ_{D-1-j}: a truncated geometric series in r².
          const Index size = cols();
          const double r2 = (1.0 - p.decay) * (1.0 - p.decay);
          Vector norms(size);
          for (Index j = 0; j < size; ++j) {
            norms[j] = -std::expm1(static_cast<double>(size - j) * std::log(r2)) / (1.0 - r2);
          }
          return norms;
        }
      },
      impl_->payload);
}

Matrix LinearOperator::materialize() const {
  if (const auto* dense = std::get_if<DensePayload>(&impl_->payload)) return dense->entries;
  std::vector<Index> all(cols());
  for (Index j = 0; j < cols(); ++j) all[j] = j;
  return columns(all);
}

Matrix LinearOperator::columns(std::span<const Index> indices) const {
  const auto count = static_cast<Index>(indices.size());
  for (Index idx : indices) {
    if (idx < 0 || idx >= cols()) {
      throw DomainError("LinearOperator::columns: index " + std::to_string(idx) +
                        " outside [0, " + std::to_string(cols()) + ")");
    }
  }
  Matrix out(rows(), count);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        for (Index k = 0; k < count; ++k) {
          const Index j = indices[k];
          if constexpr (std::is_same_v<P, DensePayload>) {
            out.col(k) = p.entries.col(j);
          } else if constexpr (std::is_same_v<P, DctPayload>) {
            for (Index i = 0; i < rows(); ++i) out(i, k) = dct_entry(j, p.mask[i], cols());
          } else {
            out.col(k).head(j).setZero();
            out.col(k).tail(cols() - j) = p.filter.head(cols() - j);
          }
        }
      },
      impl_->payload);
  return out;
}

const Matrix& LinearOperator::dense_entries() const {
  static const Matrix empty;
  if (const auto* dense = std::get_if<DensePayload>(&impl_->payload)) return dense->entries;
  return empty;
}

std::span<const Index> LinearOperator::sample_mask() const {
  if (const auto* dct = std::get_if<DctPayload>(&impl_->payload)) return dct->mask;
  return {};
}

double LinearOperator::decay_rate() const {
  if (const auto* conv = std::get_if<ConvPayload>(&impl_->payload)) return conv->decay;
  return 0.0;
}

Vector LinearOperator::filter() const {
  if (const auto* conv = std::get_if<ConvPayload>(&impl_->payload)) return conv->filter;
  return {};
}

LinearOperator make_explicit_dense(Matrix entries) {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw DomainError("make_explicit_dense: matrix must be non-empty");
  }
  auto impl = std::make_shared<LinearOperator::Impl>(LinearOperator::Impl{
      Kind::ExplicitDense, entries.rows(), entries.cols(), DensePayload{std::move(entries)}});
  return LinearOperator(std::move(impl));
}

LinearOperator build_dense_gaussian(Index rows, Index cols, Rng& rng) {
  if (rows < 1 || cols < 1 || rows > cols) {
    throw DomainError("build_dense_gaussian: need 1 <= N <= D, got N=" + std::to_string(rows) +
                      ", D=" + std::to_string(cols));
  }
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
  Matrix entries(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) entries(i, j) = normal(rng);
  }
  auto impl = std::make_shared<LinearOperator::Impl>(
      LinearOperator::Impl{Kind::DenseGaussian, rows, cols, DensePayload{std::move(entries)}});
  return LinearOperator(std::move(impl));
}

LinearOperator build_undersampled_dct(Index size, Index rows, Rng& rng) {
  if (rows < 1 || size < 1 || rows > size) {
    throw DomainError("build_undersampled_dct: need 1 <= N <= D, got N=" + std::to_string(rows) +
                      ", D=" + std::to_string(size));
  }
  // Partial Fisher-Yates: the first N slots become a uniform N-subset.
  std::vector<Index> pool(size);
  for (Index i = 0; i < size; ++i) pool[i] = i;
  for (Index i = 0; i < rows; ++i) {
    std::uniform_int_distribution<Index> pick(i, size - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(rows);
  std::sort(pool.begin(), pool.end());
  return make_undersampled_dct(size, std::move(pool));
}

LinearOperator make_undersampled_dct(Index size, std::vector<Index> mask) {
  const auto rows = static_cast<Index>(mask.size());
  if (size < 1 || rows < 1 || rows > size) {
    throw DomainError("make_undersampled_dct: need 1 <= |mask| <= D");
  }
  std::vector<Index> sorted = mask;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0 || sorted.back() >= size ||
      std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("make_undersampled_dct: mask entries must be distinct and in [0, D)");
  }
  auto impl = std::make_shared<LinearOperator::Impl>(LinearOperator::Impl{
      Kind::UndersampledDct, rows, size,
      DctPayload{std::move(mask), std::make_unique<detail::OrthoDct>(static_cast<long>(size))}});
  return LinearOperator(std::move(impl));
}

LinearOperator build_exp_convolution(Index size, double decay) {
  if (size < 1) throw DomainError("build_exp_convolution: D must be positive");
  if (!(decay > 0.0 && decay < 1.0)) {
    throw DomainError("build_exp_convolution: decay rate must lie in (0, 1), got " +
                      std::to_string(decay));
  }
  Vector filter(size);
  for (Index k = 0; k < size; ++k) filter[k] = std::pow(1.0 - decay, static_cast<double>(k));
  auto conv = std::make_unique<detail::TruncatedConvolution>(
      std::span<const double>(filter.data(), static_cast<std::size_t>(size)));
  auto impl = std::make_shared<LinearOperator::Impl>(LinearOperator::Impl{
      Kind::ExpConvolution, size, size, ConvPayload{decay, std::move(filter), std::move(conv)}});
  return LinearOperator(std::move(impl));
}

SystemMatrix::SystemMatrix(LinearOperator op, double beta, Vector alpha)
    : op_(std::move(op)), beta_(beta), alpha_(std::move(alpha)) {
  if (!(beta_ > 0.0) || !std::isfinite(beta_)) {
    throw DomainError("SystemMatrix: noise precision beta must be positive and finite");
  }
  if (alpha_.size() != op_.cols()) {
    throw DimensionError("SystemMatrix alpha", {op_.cols(), 1}, {alpha_.size(), 1});
  }
  for (Index j = 0; j < alpha_.size(); ++j) {
    if (!(alpha_[j] > 0.0) || !std::isfinite(alpha_[j])) {
      throw DomainError("SystemMatrix: alpha[" + std::to_string(j) +
                        "] must be positive and finite");
    }
  }
}

Matrix SystemMatrix::apply(const Matrix& V) const {
  if (V.rows() != size()) {
    throw DimensionError("SystemMatrix::apply", {size(), V.cols()}, {V.rows(), V.cols()});
  }
  Matrix out = op_.apply_adjoint(op_.apply(V));
  parallel_for(V.cols(), [&](Index q) {
    out.col(q) = beta_ * out.col(q) + alpha_.cwiseProduct(V.col(q));
  });
  return out;
}

Matrix SystemMatrix::materialize() const {
  const Matrix phi = op_.materialize();
  Matrix a = beta_ * (phi.transpose() * phi);
  a.diagonal() += alpha_;
  return a;
}

}  // namespace sbl::linop
