#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dpd/core.hpp"
#include "dpd/rng.hpp"

namespace dpd {

// Grayscale image, column-major: pixel (i, j) lives at data[i + rows * j].
struct ImageGrid {
  Index rows = 0;
  Index cols = 0;
  Vec data;

  ImageGrid() = default;
  ImageGrid(Index m, Index n) : rows(m), cols(n), data(Vec::Zero(m * n)) {}
  ImageGrid(Index m, Index n, Vec values) : rows(m), cols(n), data(std::move(values)) {
    require(data.size() == m * n, "ImageGrid: data length must equal rows*cols");
  }

  Index size() const { return rows * cols; }
  double& operator()(Index i, Index j) { return data[i + rows * j]; }
  double operator()(Index i, Index j) const { return data[i + rows * j]; }
};

// Blur kernel with odd extents; the center tap sits at (height/2, width/2).
struct Kernel2D {
  Mat weights;

  Kernel2D() = default;
  explicit Kernel2D(Mat w) : weights(std::move(w)) {
    require(weights.rows() % 2 == 1 && weights.cols() % 2 == 1,
            "Kernel2D: extents must be odd");
  }
  Index height() const { return weights.rows(); }
  Index width() const { return weights.cols(); }
  double sum() const { return weights.sum(); }
  double abs_sum() const { return weights.cwiseAbs().sum(); }
};

// ---------------------------------------------------------------------------
// 2-D discrete Fourier transform over an m x n grid (column-major storage).

using CMat = Eigen::MatrixXcd;

namespace detail {

// Length-1 transforms are the identity (and crash Eigen's kissfft backend).
inline void fft_columns(CMat& a, bool inverse) {
  if (a.rows() <= 1) return;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(a.rows()), out;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) in[i] = a(i, j);
    if (inverse) {
      fft.inv(out, in);
    } else {
      fft.fwd(out, in);
    }
    for (Index i = 0; i < a.rows(); ++i) a(i, j) = out[i];
  }
}

inline void fft_rows(CMat& a, bool inverse) {
  if (a.cols() <= 1) return;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(a.cols()), out;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) in[j] = a(i, j);
    if (inverse) {
      fft.inv(out, in);
    } else {
      fft.fwd(out, in);
    }
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = out[j];
  }
}

}  // namespace detail

inline CMat fft2(const Vec& data, Index m, Index n) {
  CMat a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = data[i + m * j];
  detail::fft_columns(a, false);
  detail::fft_rows(a, false);
  return a;
}

// Inverse transform, returning the real part.
inline Vec ifft2_real(CMat a) {
  detail::fft_columns(a, true);
  detail::fft_rows(a, true);
  Vec out(a.size());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out[i + a.rows() * j] = a(i, j).real();
  return out;
}

// Eigenvalues of a periodic convolution on an m x n grid.
struct CirculantSpectrum {
  Index rows = 0;
  Index cols = 0;
  CMat eigenvalues;

  double max_abs() const { return eigenvalues.cwiseAbs().maxCoeff(); }
};

inline CirculantSpectrum circulant_spectrum(const Kernel2D& k, Index m, Index n) {
  Vec psf = Vec::Zero(m * n);
  const Index cr = k.height() / 2;
  const Index cc = k.width() / 2;
  for (Index q = 0; q < k.width(); ++q) {
    for (Index p = 0; p < k.height(); ++p) {
      const Index i = ((p - cr) % m + m) % m;
      const Index j = ((q - cc) % n + n) % n;
      psf[i + m * j] += k.weights(p, q);
    }
  }
  return {m, n, fft2(psf, m, n)};
}

// ---------------------------------------------------------------------------

// Type-erased linear map with its adjoint and a certified spectral-norm bound.
// Immutable after construction; copies share the underlying closures.
class LinearOperator {
 public:
  using Map = std::function<Vec(const Vec&)>;

  LinearOperator() = default;
  LinearOperator(Index in_dim, Index out_dim, Map apply, Map adjoint, double norm_bound,
                 std::string name = "linear")
      : in_dim_(in_dim),
        out_dim_(out_dim),
        apply_(std::move(apply)),
        adjoint_(std::move(adjoint)),
        norm_bound_(norm_bound),
        name_(std::move(name)) {}

  Vec apply(const Vec& x) const {
    require_same_size(x, in_dim_, "LinearOperator::apply");
    return apply_(x);
  }
  Vec adjoint(const Vec& y) const {
    require_same_size(y, out_dim_, "LinearOperator::adjoint");
    return adjoint_(y);
  }

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  double norm_bound() const { return norm_bound_; }
  const std::string& name() const { return name_; }

  // Present when the operator is a periodic convolution, enabling
  // transform-domain solves.
  const std::shared_ptr<const CirculantSpectrum>& circulant() const { return circulant_; }
  void set_circulant(std::shared_ptr<const CirculantSpectrum> s) { circulant_ = std::move(s); }

  // Dense matrix representation, built column by column. Small operators only.
  Mat to_dense() const {
    Mat out(out_dim_, in_dim_);
    Vec e = Vec::Zero(in_dim_);
    for (Index j = 0; j < in_dim_; ++j) {
      e[j] = 1.0;
      out.col(j) = apply_(e);
      e[j] = 0.0;
    }
    return out;
  }

 private:
  Index in_dim_ = 0;
  Index out_dim_ = 0;
  Map apply_;
  Map adjoint_;
  double norm_bound_ = 0.0;
  std::string name_;
  std::shared_ptr<const CirculantSpectrum> circulant_;
};

inline LinearOperator make_identity_operator(Index n) {
  auto id = [](const Vec& v) { return v; };
  return {n, n, id, id, 1.0, "identity"};
}

inline LinearOperator make_zero_operator(Index in_dim, Index out_dim) {
  return {in_dim, out_dim, [out_dim](const Vec&) { return Vec(Vec::Zero(out_dim)); },
          [in_dim](const Vec&) { return Vec(Vec::Zero(in_dim)); }, 0.0, "zero"};
}

inline LinearOperator make_diagonal_operator(const Vec& diag) {
  const double bound = diag.size() > 0 ? diag.cwiseAbs().maxCoeff() : 0.0;
  auto scale = [diag](const Vec& v) { return Vec(diag.cwiseProduct(v)); };
  return {diag.size(), diag.size(), scale, scale, bound, "diagonal"};
}

// Dense matrix operator. The norm bound is the exact largest singular value,
// padded by a relative 1e-12 against rounding in the SVD.
inline LinearOperator make_dense_operator(Mat a) {
  const double sigma =
      a.size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(a).singularValues()(0) * (1.0 + 1e-12);
  auto shared = std::make_shared<const Mat>(std::move(a));
  return {shared->cols(), shared->rows(), [shared](const Vec& x) { return Vec(*shared * x); },
          [shared](const Vec& y) { return Vec(shared->transpose() * y); }, sigma, "dense"};
}

// Forward differences with periodic wrap. Output holds the vertical block
// (rows direction) first and the horizontal block second.
inline LinearOperator make_difference_operator(Index m, Index n) {
  require(m >= 1 && n >= 1, "make_difference_operator: m, n must be >= 1");
  const Index mn = m * n;
  auto apply = [m, n, mn](const Vec& x) {
    Vec out(2 * mn);
    for (Index j = 0; j < n; ++j) {
      const Index jn = (j + 1 == n) ? 0 : j + 1;
      for (Index i = 0; i < m; ++i) {
        const Index in = (i + 1 == m) ? 0 : i + 1;
        const double c = x[i + m * j];
        out[i + m * j] = x[in + m * j] - c;
        out[mn + i + m * j] = x[i + m * jn] - c;
      }
    }
    return out;
  };
  auto adjoint = [m, n, mn](const Vec& y) {
    Vec out(mn);
    for (Index j = 0; j < n; ++j) {
      const Index jp = (j == 0) ? n - 1 : j - 1;
      for (Index i = 0; i < m; ++i) {
        const Index ip = (i == 0) ? m - 1 : i - 1;
        out[i + m * j] = y[ip + m * j] - y[i + m * j] + y[mn + i + m * jp] - y[mn + i + m * j];
      }
    }
    return out;
  };
  return {mn, 2 * mn, apply, adjoint, std::sqrt(8.0), "difference"};
}

namespace detail {

struct Tap {
  Index dr;
  Index dc;
  double w;
};

inline std::vector<Tap> kernel_taps(const Kernel2D& k) {
  std::vector<Tap> taps;
  const Index cr = k.height() / 2;
  const Index cc = k.width() / 2;
  for (Index q = 0; q < k.width(); ++q)
    for (Index p = 0; p < k.height(); ++p)
      if (k.weights(p, q) != 0.0) taps.push_back({p - cr, q - cc, k.weights(p, q)});
  return taps;
}

// out(i, j) = sum over taps of w * x(i - sign*dr, j - sign*dc), indices wrapped.
inline Vec circular_filter(const Vec& x, Index m, Index n, const std::vector<Tap>& taps,
                           int sign) {
  Vec out = Vec::Zero(m * n);
  parallel_for(n, [&](Index j0, Index j1) {
    for (Index j = j0; j < j1; ++j) {
      for (const Tap& tp : taps) {
        const Index sj = (((j - sign * tp.dc) % n) + n) % n;
        const Index shift = (((-sign * tp.dr) % m) + m) % m;
        const double* src = x.data() + m * sj;
        double* dst = out.data() + m * j;
        const Index split = m - shift;
        for (Index i = 0; i < split; ++i) dst[i] += tp.w * src[i + shift];
        for (Index i = split; i < m; ++i) dst[i] += tp.w * src[i + shift - m];
      }
    }
  });
  return out;
}

}  // namespace detail

// Periodic 2-D convolution on an m x n grid. The adjoint convolves with the
// point-reflected kernel.
inline LinearOperator make_convolution_operator(const Kernel2D& kernel, Index m, Index n) {
  require(kernel.height() <= m && kernel.width() <= n,
          "make_convolution_operator: kernel larger than grid");
  auto taps = std::make_shared<const std::vector<detail::Tap>>(detail::kernel_taps(kernel));
  LinearOperator op(
      m * n, m * n, [taps, m, n](const Vec& x) { return detail::circular_filter(x, m, n, *taps, 1); },
      [taps, m, n](const Vec& y) { return detail::circular_filter(y, m, n, *taps, -1); },
      kernel.abs_sum(), "convolution");
  op.set_circulant(std::make_shared<const CirculantSpectrum>(circulant_spectrum(kernel, m, n)));
  return op;
}

struct ScaledPart {
  double scale;
  LinearOperator op;
};

// Vertical stack [s_1 A_1; s_2 A_2; ...].
inline LinearOperator make_stacked_operator(std::vector<ScaledPart> parts) {
  require(!parts.empty(), "make_stacked_operator: no parts");
  const Index in_dim = parts.front().op.in_dim();
  Index out_dim = 0;
  double bound2 = 0.0;
  for (const auto& p : parts) {
    require(p.op.in_dim() == in_dim, "make_stacked_operator: parts disagree on input dimension");
    out_dim += p.op.out_dim();
    bound2 += (p.scale * p.op.norm_bound()) * (p.scale * p.op.norm_bound());
  }
  auto shared = std::make_shared<const std::vector<ScaledPart>>(std::move(parts));
  auto apply = [shared, out_dim](const Vec& x) {
    Vec out(out_dim);
    Index off = 0;
    for (const auto& p : *shared) {
      out.segment(off, p.op.out_dim()) = p.scale * p.op.apply(x);
      off += p.op.out_dim();
    }
    return out;
  };
  auto adjoint = [shared, in_dim](const Vec& y) {
    Vec out = Vec::Zero(in_dim);
    Index off = 0;
    for (const auto& p : *shared) {
      out += p.scale * p.op.adjoint(y.segment(off, p.op.out_dim()));
      off += p.op.out_dim();
    }
    return out;
  };
  return {in_dim, out_dim, apply, adjoint, std::sqrt(bound2), "stacked"};
}

struct NormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Power iteration on A^T A from a seeded Gaussian start. The Rayleigh
// quotient never overshoots the true norm; the result is also clipped to the
// operator's certified bound.
inline NormEstimate estimate_operator_norm(const LinearOperator& op, double tol = 1e-8,
                                           int max_iter = 1000, std::uint64_t seed = 0) {
  Rng rng(seed);
  Vec v(op.in_dim());
  fill_normal(v, rng);
  double nv = v.norm();
  if (nv == 0.0) return {0.0, true, 0};
  v /= nv;

  NormEstimate est;
  double lambda_prev = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    const Vec av = op.apply(v);
    const double lambda = av.squaredNorm();
    const Vec w = op.adjoint(av);
    est.iterations = k;
    est.value = std::min(std::sqrt(lambda), op.norm_bound());
    const double nw = w.norm();
    if (nw == 0.0) {
      est.converged = true;
      break;
    }
    if (k > 1 && std::abs(lambda - lambda_prev) <= tol * lambda) {
      est.converged = true;
      break;
    }
    lambda_prev = lambda;
    v = w / nw;
  }
  return est;
}

// Line-segment blur of the given length, theta measured counter-clockwise from
// the horizontal axis. Each pixel's weight is the length of the segment lying
// inside its unit square; weights are normalized to sum to one.
inline Kernel2D make_motion_kernel(int length, double theta_degrees) {
  require(length >= 1, "make_motion_kernel: length must be >= 1");
  const double rad = theta_degrees * std::numbers::pi / 180.0;
  const double dx = std::cos(rad);
  const double dy = std::sin(rad);
  const double half = 0.5 * length;
  const Index reach = static_cast<Index>(std::ceil(half)) + 1;
  const Index size = 2 * reach + 1;

  // Liang-Barsky clip of s in [-half, half] against the square centred at (cx, cy).
  auto coverage = [&](double cx, double cy) {
    double lo = -half, hi = half;
    auto clip = [&](double d, double c) {
      // constraint: c - 0.5 <= s*d <= c + 0.5
      if (std::abs(d) < 1e-15) return std::abs(c) <= 0.5;
      double a = (c - 0.5) / d, b = (c + 0.5) / d;
      if (a > b) std::swap(a, b);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
      return true;
    };
    if (!clip(dx, cx) || !clip(dy, cy)) return 0.0;
    return std::max(0.0, hi - lo);
  };

  Mat w = Mat::Zero(size, size);
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      // row index grows downward, so the y coordinate is negated
      const double cov = coverage(static_cast<double>(c - reach), static_cast<double>(reach - r));
      if (cov > 1e-12 * length) w(r, c) = cov;
    }
  }
  Index rmax = 0, cmax = 0;
  for (Index r = 0; r < size; ++r)
    for (Index c = 0; c < size; ++c)
      if (w(r, c) > 0.0) {
        rmax = std::max(rmax, std::abs(r - reach));
        cmax = std::max(cmax, std::abs(c - reach));
      }
  Mat cropped = w.block(reach - rmax, reach - cmax, 2 * rmax + 1, 2 * cmax + 1);
  cropped /= cropped.sum();
  return Kernel2D(std::move(cropped));
}

inline Kernel2D make_average_kernel(int size) {
  require(size >= 1 && size % 2 == 1, "make_average_kernel: size must be odd and >= 1");
  return Kernel2D(Mat::Constant(size, size, 1.0 / (static_cast<double>(size) * size)));
}

}  // namespace dpd
