#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dpd/core.hpp"
#include "dpd/linops.hpp"
#include "dpd/model.hpp"
#include "dpd/prox.hpp"
#include "dpd/rng.hpp"

namespace dpd {

// ---------------------------------------------------------------------------
// Deblurring models. Both use the periodic difference operator D and a
// periodic convolution K on the image grid.

// min_x (mu/2)||Kx - b||^2 + max_y <Dx, y> - (mu_g/2)||y||^2, ||y_i|| <= 1
struct GaussianDeblurSpec {
  ImageGrid observed;
  Kernel2D kernel;
  double mu = 3000.0;
  double mu_g = 0.01;
};

// min_x alpha ||Kx - b||_1 + max_y <Dx, y> - (mu_g/2)||y||^2, ||y_i|| <= 1
struct SaltPepperDeblurSpec {
  ImageGrid observed;
  Kernel2D kernel;
  double alpha = 4.0;
  double mu_g0 = 0.03;
  long halve_every = 10;  // 0 keeps mu_g fixed
};

namespace detail {

// indicator{||y_i|| <= 1} + (mu_g/2)||y||^2 over pair vectors
inline DualProxOracle make_tv_dual() {
  DualProxOracle g;
  g.prox_fn = [](const Vec& z, double step, double mg) { return prox_smoothed_tv_dual(z, step, mg); };
  g.value_fn = [](const Vec& y, double mg) {
    return pairs_in_unit_ball(y) ? 0.5 * mg * y.squaredNorm() : kInf;
  };
  g.smooth_grad_fn = [](const Vec& y, double mg) -> std::optional<Vec> {
    if (!pairs_in_unit_ball(y, -1e-12)) return std::nullopt;
    return Vec(mg * y);
  };
  return g;
}

}  // namespace detail

inline SaddleProblem build_gaussian_problem(const GaussianDeblurSpec& spec) {
  require(spec.mu > 0.0, "build_gaussian_problem: mu must be positive");
  require(spec.mu_g >= 0.0, "build_gaussian_problem: mu_g must be nonnegative");
  const Index m = spec.observed.rows;
  const Index n = spec.observed.cols;
  const LinearOperator K = make_convolution_operator(spec.kernel, m, n);
  const auto b = std::make_shared<const Vec>(spec.observed.data);
  const double mu = spec.mu;

  // ||K|| is the largest circulant eigenvalue magnitude; never above sum|w|.
  const double k_norm = std::min(K.circulant()->max_abs(), spec.kernel.abs_sum());

  SaddleProblem p;
  p.f.value = [K, b, mu](const Vec& x) { return 0.5 * mu * (K.apply(x) - *b).squaredNorm(); };
  p.f.grad = [K, b, mu](const Vec& x) { return Vec(mu * K.adjoint(K.apply(x) - *b)); };
  p.f.prox = [K, b, mu](const Vec& z, double step) { return prox_quadratic_primal(z, step, K, *b, mu); };
  p.f.lipschitz = mu * k_norm * k_norm;
  p.f.mu = 0.0;
  p.g = detail::make_tv_dual();
  p.g.mu_g = spec.mu_g;
  p.A = make_difference_operator(m, n);
  return p;
}

// Dual vector layout: y = [v; u], v the 2mn TV pairs, u the mn data multipliers.
inline SaddleProblem build_saltpepper_problem(const SaltPepperDeblurSpec& spec) {
  require(spec.alpha > 0.0, "build_saltpepper_problem: alpha must be positive");
  require(spec.mu_g0 >= 0.0, "build_saltpepper_problem: mu_g0 must be nonnegative");
  const Index m = spec.observed.rows;
  const Index n = spec.observed.cols;
  const Index mn = m * n;
  const double alpha = spec.alpha;
  const auto c = std::make_shared<const Vec>(alpha * spec.observed.data);

  SaddleProblem p;
  p.f = make_zero_primal();
  p.A = make_stacked_operator({{1.0, make_difference_operator(m, n)},
                               {alpha, make_convolution_operator(spec.kernel, m, n)}});
  p.g.prox_fn = [c, mn](const Vec& z, double step, double mg) {
    Vec out(3 * mn);
    out.head(2 * mn) = prox_smoothed_tv_dual(z.head(2 * mn), step, mg);
    out.tail(mn) = prox_linear_plus_box(z.tail(mn), step, *c, mg);
    return out;
  };
  p.g.value_fn = [c, mn](const Vec& y, double mg) {
    const Vec v = y.head(2 * mn);
    const Vec u = y.tail(mn);
    if (!pairs_in_unit_ball(v) || u.cwiseAbs().maxCoeff() > 1.0 + 1e-12) return kInf;
    return c->dot(u) + 0.5 * mg * y.squaredNorm();
  };
  p.g.mu_g = spec.mu_g0;
  return p;
}

// mu_g0 * 2^-floor((t-1)/halve_every); constant when halve_every == 0.
inline double continuation_mu_g(long t, double mu_g0, long halve_every) {
  require(halve_every >= 0, "continuation_mu_g: halve_every must be >= 0");
  require(t >= 1, "continuation_mu_g: t must be >= 1");
  if (halve_every == 0) return mu_g0;
  return std::ldexp(mu_g0, -static_cast<int>((t - 1) / halve_every));
}

// ---------------------------------------------------------------------------
// Degradation.

inline ImageGrid blur(const ImageGrid& img, const Kernel2D& kernel) {
  const auto K = make_convolution_operator(kernel, img.rows, img.cols);
  return {img.rows, img.cols, K.apply(img.data)};
}

// i.i.d. N(0, sigma^2) per pixel, no clipping.
inline ImageGrid add_gaussian_noise(const ImageGrid& img, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "add_gaussian_noise: sigma must be >= 0");
  ImageGrid out = img;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (Index i = 0; i < out.size(); ++i) out.data[i] += sigma * standard_normal(rng);
  return out;
}

// Exactly round(fraction * mn) distinct pixels, chosen by a seeded partial
// Fisher-Yates shuffle, each set to 0 or 1 with equal probability.
inline ImageGrid add_salt_pepper(const ImageGrid& img, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, "add_salt_pepper: fraction must be in [0, 1]");
  ImageGrid out = img;
  const auto total = static_cast<std::uint64_t>(img.size());
  const auto count = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(total)));
  if (count == 0) return out;
  std::vector<std::uint64_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::uint64_t{0});
  Rng rng(seed);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + uniform_index(rng, total - i);
    std::swap(idx[i], idx[j]);
  }
  for (std::uint64_t i = 0; i < count; ++i) out.data[static_cast<Index>(idx[i])] = (rng() >> 63) ? 1.0 : 0.0;
  return out;
}

// Piecewise-constant test image in [0, 1]: overlapping ellipses, a bar and
// two discs on a dark background.
inline ImageGrid make_phantom(Index m, Index n) {
  ImageGrid img(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      const double v = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      auto in_ellipse = [&](double cu, double cv, double ru, double rv) {
        const double a = (u - cu) / ru, b = (v - cv) / rv;
        return a * a + b * b <= 1.0;
      };
      double val = 0.1;
      if (in_ellipse(0.5, 0.5, 0.42, 0.34)) val = 0.45;
      if (u >= 0.22 && u <= 0.46 && v >= 0.24 && v <= 0.52) val = 0.85;
      if (in_ellipse(0.66, 0.64, 0.13, 0.13)) val = 0.2;
      if (in_ellipse(0.7, 0.3, 0.07, 0.07)) val = 1.0;
      if (in_ellipse(0.35, 0.72, 0.05, 0.1)) val = 0.65;
      img(i, j) = val;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// File formats.
//
// PGM: binary P5, intensities mapped linearly from [0, 1] to [0, 255] with
// round-half-away-from-zero (values outside [0, 1] are clamped on write).
//
// DPDF: lossless float64 image.
//   bytes 0..3   magic "DPDF"
//   bytes 4..11  rows, uint64 little-endian
//   bytes 12..19 cols, uint64 little-endian
//   then rows*cols float64 little-endian values in column-major order

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

// Next header token, skipping whitespace and '#' comments.
inline std::string pgm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace detail

inline std::uint8_t to_gray8(double v) {
  const double s = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(s));
}

inline void write_pgm(const std::string& path, const ImageGrid& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open PGM for writing: " + path);
  os << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(img.cols));
  for (Index i = 0; i < img.rows; ++i) {
    for (Index j = 0; j < img.cols; ++j) row[static_cast<std::size_t>(j)] = static_cast<char>(to_gray8(img(i, j)));
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw IoError("failed writing PGM: " + path);
}

inline ImageGrid read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open PGM: " + path);
  if (detail::pgm_token(is) != "P5") throw IoError("not a binary PGM (P5): " + path);
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(detail::pgm_token(is));
    h = std::stol(detail::pgm_token(is));
    maxval = std::stol(detail::pgm_token(is));
  } catch (const std::exception&) {
    throw IoError("malformed PGM header: " + path);
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError("bad PGM header: " + path);
  ImageGrid img(h, w);
  const bool wide = maxval > 255;
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      int v = is.get();
      if (wide) v = (v << 8) | is.get();
      if (!is) throw IoError("truncated PGM data: " + path);
      img(i, j) = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

inline void write_dpdf(const std::string& path, const ImageGrid& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open DPDF for writing: " + path);
  os.write("DPDF", 4);
  detail::put_u64_le(os, static_cast<std::uint64_t>(img.rows));
  detail::put_u64_le(os, static_cast<std::uint64_t>(img.cols));
  for (Index i = 0; i < img.size(); ++i) detail::put_u64_le(os, std::bit_cast<std::uint64_t>(img.data[i]));
  if (!os) throw IoError("failed writing DPDF: " + path);
}

inline ImageGrid read_dpdf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open DPDF: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "DPDF") throw IoError("bad DPDF magic: " + path);
  const auto rows = detail::get_u64_le(is);
  const auto cols = detail::get_u64_le(is);
  if (!is || rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
    throw IoError("bad DPDF dimensions: " + path);
  ImageGrid img(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < img.size(); ++i) img.data[i] = std::bit_cast<double>(detail::get_u64_le(is));
  if (!is) throw IoError("truncated DPDF data: " + path);
  return img;
}

}  // namespace dpd
