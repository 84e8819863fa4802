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

#pragma once

#include <span>
#include <vector>

#include "residalign/data_model.hpp"
#include "residalign/io.hpp"

namespace residalign {

struct DspParams {
  double window_s = 0.025;
  double hop_s = 0.010;
  int n_fbank = 26;
  int n_mel = 80;
  int n_mfcc = 13;
  int powspec_bands = 448;
  double powspec_lo_hz = 25.0;
  double powspec_hi_hz = 15000.0;
  Index powspec_segment = 4096;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
  double min_rate_hz = 16000.0;

  void validate() const;
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(Index n);

/// HTK-scale mel.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with mel-spaced edges over [fmin, fmax], unnormalized,
/// evaluated at the rfft bin frequencies: n_mels x (n_fft / 2 + 1).
MatrixXd mel_filterbank(int n_mels, Index n_fft, double rate, double fmin, double fmax);

/// |rfft(x, n_fft)|^2, length n_fft / 2 + 1.
VectorXd power_spectrum(std::span<const double> frame, Index n_fft);

/// Orthonormal DCT-II of each row, keeping the first n_out coefficients.
MatrixXd dct2_ortho(const MatrixXd& rows, int n_out);

struct FrameFeatures {
  MatrixXd fbank;  // frames x n_fbank, natural-log filterbank energies
  MatrixXd mel;    // frames x n_mel, natural-log mel spectrogram
  MatrixXd mfcc;   // frames x n_mfcc, DCT of the fbank log energies
  std::vector<double> frame_times;  // window centres, seconds
  Index window = 0;
  Index hop = 0;
  Index n_fft = 0;
};

/// Pre-emphasis, Hann-windowed framing, power spectrum, filterbanks.
FrameFeatures frame_features(const Waveform& audio, const DspParams& params);

struct BandPower {
  VectorXd power;        // powspec_bands, one-sided PSD averaged per band
  int bands_above_nyquist = 0;  // zeroed bands
};

/// log-spaced band edges, powspec_bands + 1 values.
std::vector<double> powspec_band_edges(const DspParams& params);

/// Welch PSD (Hann segments of powspec_segment samples, 50% overlap)
/// averaged into log-spaced bands. Bands without an FFT bin inside take the
/// PSD interpolated at their geometric centre.
BandPower band_power(std::span<const double> segment, double rate, const DspParams& params);

}  // namespace residalign
