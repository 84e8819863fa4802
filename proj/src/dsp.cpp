// Copyright 2026 The residalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residalign/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "residalign/error.hpp"

namespace residalign {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(Index n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Zero-pads `x` to n and returns |X_k|^2 for k = 0..n/2.
  void power(std::span<const double> x, VectorXd& out) {
    const auto m = std::min<std::size_t>(x.size(), static_cast<std::size_t>(n_));
    std::copy_n(x.begin(), m, in_);
    std::fill(in_ + m, in_ + n_, 0.0);
    fftw_execute(plan_);
    out.resize(n_ / 2 + 1);
    for (Index k = 0; k <= n_ / 2; ++k) out(k) = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  Index n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void DspParams::validate() const {
  if (!(window_s > 0) || !(hop_s > 0)) throw ConfigError("DSP window and hop must be positive");
  if (n_fbank < 1 || n_mel < 1 || n_mfcc < 1 || powspec_bands < 1) {
    throw ConfigError("DSP band counts must be positive");
  }
  if (n_mfcc > n_fbank) throw ConfigError("n_mfcc cannot exceed n_fbank");
  if (!(powspec_lo_hz > 0) || !(powspec_hi_hz > powspec_lo_hz)) {
    throw ConfigError("powspec range must be positive and ascending");
  }
  if (powspec_segment < 2) throw ConfigError("powspec segment must be >= 2 samples");
}

std::vector<double> hann_window(Index n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatrixXd mel_filterbank(int n_mels, Index n_fft, double rate, double fmin, double fmax) {
  const Index n_bins = n_fft / 2 + 1;
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  const double mlo = hz_to_mel(fmin);
  const double mhi = hz_to_mel(fmax);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mels + 1));
  }
  MatrixXd fb = MatrixXd::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (Index k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * rate / static_cast<double>(n_fft);
      const double rising = (f - left) / (centre - left);
      const double falling = (right - f) / (right - centre);
      fb(m, k) = std::max(0.0, std::min(rising, falling));
    }
  }
  return fb;
}

VectorXd power_spectrum(std::span<const double> frame, Index n_fft) {
  RealFft fft(n_fft);
  VectorXd p;
  fft.power(frame, p);
  return p;
}

MatrixXd dct2_ortho(const MatrixXd& rows, int n_out) {
  const Index n = rows.cols();
  MatrixXd basis(n, n_out);
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (Index j = 0; j < n; ++j) {
      basis(j, k) = scale * std::cos(std::numbers::pi * k * (2.0 * static_cast<double>(j) + 1.0) /
                                     (2.0 * static_cast<double>(n)));
    }
  }
  return rows * basis;
}

FrameFeatures frame_features(const Waveform& audio, const DspParams& params) {
  params.validate();
  if (audio.samples.empty()) throw ComputeError("audio_dsp: empty audio");
  if (audio.rate < params.min_rate_hz) {
    throw ValidationError("audio_dsp: sample rate " + std::to_string(audio.rate) +
                          " Hz is below the required " + std::to_string(params.min_rate_hz) +
                          " Hz");
  }
  FrameFeatures out;
  out.window = static_cast<Index>(std::lround(params.window_s * audio.rate));
  out.hop = static_cast<Index>(std::lround(params.hop_s * audio.rate));
  out.n_fft = next_pow2(out.window);
  const auto n = static_cast<Index>(audio.samples.size());
  if (n < out.window) {
    throw ComputeError("audio_dsp: audio shorter than one analysis window");
  }
  const Index frames = 1 + (n - out.window) / out.hop;

  std::vector<double> emph(audio.samples.size());
  emph[0] = audio.samples[0];
  for (std::size_t i = 1; i < emph.size(); ++i) {
    emph[i] = audio.samples[i] - params.preemphasis * audio.samples[i - 1];
  }
  const auto window = hann_window(out.window);
  const MatrixXd fb26 = mel_filterbank(params.n_fbank, out.n_fft, audio.rate, 0.0, audio.rate / 2);
  const MatrixXd fb80 = mel_filterbank(params.n_mel, out.n_fft, audio.rate, 0.0, audio.rate / 2);

  MatrixXd power(frames, out.n_fft / 2 + 1);
  RealFft fft(out.n_fft);
  std::vector<double> buf(static_cast<std::size_t>(out.window));
  VectorXd p;
  out.frame_times.resize(static_cast<std::size_t>(frames));
  for (Index f = 0; f < frames; ++f) {
    const Index start = f * out.hop;
    for (Index i = 0; i < out.window; ++i) buf[i] = emph[start + i] * window[i];
    fft.power(buf, p);
    power.row(f) = p.transpose();
    out.frame_times[f] = (static_cast<double>(start) + 0.5 * static_cast<double>(out.window)) /
                         audio.rate;
  }
  auto log_floor = [&](MatrixXd m) {
    return m.unaryExpr([&](double v) { return std::log(std::max(v, params.log_floor)); }).eval();
  };
  out.fbank = log_floor(power * fb26.transpose());
  out.mel = log_floor(power * fb80.transpose());
  out.mfcc = dct2_ortho(out.fbank, params.n_mfcc);
  return out;
}

std::vector<double> powspec_band_edges(const DspParams& params) {
  std::vector<double> edges(static_cast<std::size_t>(params.powspec_bands + 1));
  const double ratio = params.powspec_hi_hz / params.powspec_lo_hz;
  for (int j = 0; j <= params.powspec_bands; ++j) {
    edges[j] = params.powspec_lo_hz * std::pow(ratio, static_cast<double>(j) / params.powspec_bands);
  }
  return edges;
}

BandPower band_power(std::span<const double> segment, double rate, const DspParams& params) {
  params.validate();
  if (segment.empty()) throw ComputeError("band_power: empty segment");
  const Index len = params.powspec_segment;
  const auto n = static_cast<Index>(segment.size());
  const auto window = hann_window(len);
  double wss = 0.0;
  for (double w : window) wss += w * w;

  RealFft fft(len);
  VectorXd psd = VectorXd::Zero(len / 2 + 1);
  VectorXd p;
  std::vector<double> buf(static_cast<std::size_t>(len));
  Index count = 0;
  const Index step = len / 2;
  for (Index start = 0; start == 0 || start + len <= n; start += step) {
    for (Index i = 0; i < len; ++i) {
      buf[i] = start + i < n ? segment[start + i] * window[i] : 0.0;
    }
    fft.power(buf, p);
    psd += p;
    ++count;
    if (n <= len) break;
  }
  psd /= static_cast<double>(count) * rate * wss;
  psd.segment(1, len / 2 - 1) *= 2.0;  // one-sided

  const auto edges = powspec_band_edges(params);
  const double bin_hz = rate / static_cast<double>(len);
  const double nyquist = rate / 2.0;
  BandPower out;
  out.power = VectorXd::Zero(params.powspec_bands);
  for (int j = 0; j < params.powspec_bands; ++j) {
    const double lo = edges[j], hi = edges[j + 1];
    if (lo >= nyquist) {
      ++out.bands_above_nyquist;
      continue;
    }
    const auto k0 = static_cast<Index>(std::ceil(lo / bin_hz));
    const auto k1 = std::min<Index>(static_cast<Index>(std::ceil(hi / bin_hz)), len / 2 + 1);
    if (k1 > k0) {
      out.power(j) = psd.segment(k0, k1 - k0).mean();
    } else {
      const double centre = std::sqrt(lo * hi) / bin_hz;
      const auto k = std::min<Index>(static_cast<Index>(std::floor(centre)), len / 2 - 1);
      const double frac = centre - static_cast<double>(k);
      out.power(j) = (1.0 - frac) * psd(k) + frac * psd(k + 1);
    }
  }
  return out;
}

}  // namespace residalign
