#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "game/error.hpp"
#include "game/matrix.hpp"

namespace game {

inline constexpr std::size_t kStandardDurationSamples = 160000;  // 10 s at 16 kHz

/// Truncates at the end or zero-pads at the end to exactly `target` samples.
inline std::vector<double> standardize_duration(std::span<const double> samples,
                                                std::size_t target = kStandardDurationSamples) {
  std::vector<double> out(target, 0.0);
  std::copy_n(samples.begin(), std::min(samples.size(), target), out.begin());
  return out;
}

struct MfccConfig {
  double sample_rate = 16000.0;
  std::size_t frame_len = 400;   // 25 ms
  std::size_t frame_step = 160;  // 10 ms
  std::size_t n_fft = 512;
  std::size_t n_mel_filters = 26;
  std::size_t n_kept_coeffs = 13;
  double low_hz = 0.0;
  double high_hz = 8000.0;
  double log_floor = 1e-10;

  void validate() const {
    if (frame_len == 0 || frame_step == 0) throw InvalidArgument("frame length/step must be > 0");
    if (frame_len > n_fft) throw InvalidArgument("frame_len must not exceed n_fft");
    if ((n_fft & (n_fft - 1)) != 0) throw InvalidArgument("n_fft must be a power of two");
    if (n_kept_coeffs > n_mel_filters) throw InvalidArgument("cannot keep more coefficients than filters");
    if (!(high_hz > low_hz) || high_hz > sample_rate / 2)
      throw InvalidArgument("mel band must satisfy low < high <= Nyquist");
  }
};

/// Symmetric Hamming window of length n.
inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

/// In-place iterative radix-2 FFT (forward, e^{-j2πkn/N}); size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

/// Full two-sided DFT of the Hamming-windowed frame, zero-padded to n_fft.
inline std::vector<std::complex<double>> windowed_spectrum(std::span<const double> frame,
                                                           const MfccConfig& cfg = {}) {
  if (frame.size() != cfg.frame_len)
    throw InvalidArgument("frame has " + std::to_string(frame.size()) + " samples, expected " +
                          std::to_string(cfg.frame_len));
  const auto window = hamming_window(cfg.frame_len);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i] * window[i];
  fft_inplace(buf);
  return buf;
}

/// Periodogram P(k) = |S(k)|^2 / n_fft for k = 0..n_fft/2.
inline std::vector<double> power_spectrum(std::span<const double> frame, const MfccConfig& cfg = {}) {
  const auto spec = windowed_spectrum(frame, cfg);
  std::vector<double> p(cfg.n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = std::norm(spec[k]) / static_cast<double>(cfg.n_fft);
  return p;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters on FFT bins, centres equally spaced in mel between low_hz
/// and high_hz (bin = floor((n_fft + 1) * hz / sample_rate)).
inline Matrix mel_filterbank(const MfccConfig& cfg = {}) {
  const std::size_t nf = cfg.n_mel_filters, bins = cfg.n_fft / 2 + 1;
  const double lo = hz_to_mel(cfg.low_hz), hi = hz_to_mel(cfg.high_hz);
  std::vector<std::size_t> edge(nf + 2);
  for (std::size_t i = 0; i < nf + 2; ++i) {
    const double mel = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nf + 1);
    edge[i] = static_cast<std::size_t>(
        std::floor(static_cast<double>(cfg.n_fft + 1) * mel_to_hz(mel) / cfg.sample_rate));
  }
  Matrix fb(nf, bins);
  for (std::size_t j = 0; j < nf; ++j) {
    for (std::size_t i = edge[j]; i < edge[j + 1]; ++i)
      fb(j, i) = static_cast<double>(i - edge[j]) / static_cast<double>(edge[j + 1] - edge[j]);
    for (std::size_t i = edge[j + 1]; i < edge[j + 2] && i < bins; ++i)
      fb(j, i) = static_cast<double>(edge[j + 2] - i) / static_cast<double>(edge[j + 2] - edge[j + 1]);
  }
  return fb;
}

/// Orthonormal DCT-II.
inline std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    out[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return out;
}

inline std::size_t mfcc_frame_count(std::size_t samples, const MfccConfig& cfg = {}) {
  if (samples < cfg.frame_len) return 0;
  return (samples - cfg.frame_len) / cfg.frame_step + 1;
}

/// MFCC matrix (frames x n_kept_coeffs): power spectrum, mel filterbank energies,
/// floored natural log, orthonormal DCT-II, lowest coefficients kept.
inline Matrix mfcc(std::span<const double> samples, const MfccConfig& cfg = {}) {
  cfg.validate();
  if (samples.size() < cfg.frame_len) throw InvalidArgument("audio shorter than one frame");
  const std::size_t frames = mfcc_frame_count(samples.size(), cfg);
  const Matrix fb = mel_filterbank(cfg);
  Matrix out(frames, cfg.n_kept_coeffs);
  std::vector<double> log_energy(cfg.n_mel_filters);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto p = power_spectrum(samples.subspan(f * cfg.frame_step, cfg.frame_len), cfg);
    for (std::size_t j = 0; j < cfg.n_mel_filters; ++j) {
      double e = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) e += fb(j, k) * p[k];
      log_energy[j] = std::log(std::max(e, cfg.log_floor));
    }
    const auto cep = dct2_orthonormal(log_energy);
    std::copy_n(cep.begin(), cfg.n_kept_coeffs, out.row(f).begin());
  }
  return out;
}

// ---- time-series statistics ----

/// Order of the values returned by ts_features.
inline constexpr std::array<std::string_view, 12> kTsFeatureNames = {
    "abs_energy", "max_abs", "mean",  "variance", "std",             "min",
    "max",        "median",  "first", "last",     "mean_abs_change", "count_above_mean",
};
inline constexpr std::size_t kTsFeatureCount = kTsFeatureNames.size();

/// Fixed statistic vector of a scalar series (population variance).
inline std::vector<double> ts_features(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("time series needs at least 2 values");
  const double n = static_cast<double>(x.size());
  double energy = 0.0, max_abs = 0.0, sum = 0.0, abs_change = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    energy += x[i] * x[i];
    max_abs = std::max(max_abs, std::abs(x[i]));
    sum += x[i];
    if (i > 0) abs_change += std::abs(x[i] - x[i - 1]);
  }
  const double mean = sum / n;
  double sq = 0.0, above = 0.0;
  for (double v : x) {
    sq += (v - mean) * (v - mean);
    if (v > mean) above += 1.0;
  }
  const double var = sq / n;
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return {energy, max_abs, mean, var, std::sqrt(var), sorted.front(), sorted.back(),
          median, x.front(), x.back(), abs_change / (n - 1.0), above};
}

/// ts_features of every column, concatenated column by column.
inline std::vector<double> ts_features_columns(const Matrix& series) {
  std::vector<double> out;
  std::vector<double> col(series.rows());
  for (std::size_t c = 0; c < series.cols(); ++c) {
    for (std::size_t r = 0; r < series.rows(); ++r) col[r] = series(r, c);
    const auto f = ts_features(col);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

// ---- task-level fusion and z-score ----

/// Column-wise mean over time steps.
inline std::vector<double> task_fuse(const Matrix& seq) {
  if (seq.rows() == 0) throw InvalidArgument("cannot fuse an empty sequence");
  std::vector<double> out(seq.cols(), 0.0);
  for (std::size_t r = 0; r < seq.rows(); ++r)
    for (std::size_t c = 0; c < seq.cols(); ++c) out[c] += seq(r, c);
  for (double& v : out) v /= static_cast<double>(seq.rows());
  return out;
}

struct ZScoreStats {
  std::vector<double> mean;
  std::vector<double> std;  ///< population standard deviation
};

inline ZScoreStats zscore_fit(std::span<const std::vector<double>> features) {
  if (features.empty()) throw InvalidArgument("z-score fit needs at least one vector");
  const std::size_t d = features.front().size();
  ZScoreStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& f : features) {
    if (f.size() != d) throw InvalidArgument("z-score fit vectors differ in length");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += f[i];
  }
  const double n = static_cast<double>(features.size());
  for (double& m : s.mean) m /= n;
  for (const auto& f : features)
    for (std::size_t i = 0; i < d; ++i) s.std[i] += (f[i] - s.mean[i]) * (f[i] - s.mean[i]);
  for (std::size_t i = 0; i < d; ++i) {
    s.std[i] = std::sqrt(s.std[i] / n);
    // Rounding residue of a constant column.
    if (s.std[i] <= 1e-12 * std::abs(s.mean[i])) s.std[i] = 0.0;
  }
  return s;
}

/// (x - mean) / std; zero-variance dimensions map to 0.
inline std::vector<double> zscore_apply(std::span<const double> x, const ZScoreStats& s) {
  if (x.size() != s.mean.size())
    throw InvalidArgument("z-score input has " + std::to_string(x.size()) + " dims, stats have " +
                          std::to_string(s.mean.size()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = s.std[i] > 0.0 ? (x[i] - s.mean[i]) / s.std[i] : 0.0;
  return out;
}

}  // namespace game
