# Copyright 2026 The residalign Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerate dsp_reference.hpp: frame-level log filterbank, log mel and
MFCC of a 1 s, 440 Hz tone computed with librosa and scipy.

    python3 tests/oracles/dsp_reference.py > tests/oracles/dsp_reference.hpp
"""
import librosa
import numpy as np
import scipy.fft
import scipy.signal

RATE = 16000
WIN = 400
HOP = 160
NFFT = 512
FRAMES = [0, 1, 48, 97]


def tone():
    t = np.arange(RATE) / RATE
    return 0.5 * np.sin(2 * np.pi * 440.0 * t)


def features(y):
    y = scipy.signal.lfilter([1.0, -0.97], [1.0], y)
    frames = librosa.util.frame(y, frame_length=WIN, hop_length=HOP, axis=0)
    win = scipy.signal.get_window("hann", WIN, fftbins=True)
    power = np.abs(np.fft.rfft(frames * win, n=NFFT, axis=1)) ** 2
    fb = librosa.filters.mel(sr=RATE, n_fft=NFFT, n_mels=26, fmin=0.0, fmax=RATE / 2, htk=True, norm=None)
    mel = librosa.filters.mel(sr=RATE, n_fft=NFFT, n_mels=80, fmin=0.0, fmax=RATE / 2, htk=True, norm=None)
    log_fb = np.log(np.maximum(power @ fb.T, 1e-10))
    log_mel = np.log(np.maximum(power @ mel.T, 1e-10))
    mfcc = scipy.fft.dct(log_fb, type=2, norm="ortho", axis=1)[:, :13]
    return log_fb, log_mel, mfcc, frames.shape[0]


def emit(name, m):
    print(f"inline constexpr double {name}[{m.shape[0]}][{m.shape[1]}] = {{")
    for row in m:
        print("    {" + ", ".join(repr(float(v)) for v in row) + "},")
    print("};")


def main():
    fb, mel, mfcc, n = features(tone())
    print("// Generated by dsp_reference.py (librosa %s); do not edit." % librosa.__version__)
    print("#pragma once\n")
    print("namespace dsp_reference {\n")
    print(f"inline constexpr int kFrames = {n};")
    print("inline constexpr int kFrameIndex[] = {" + ", ".join(map(str, FRAMES)) + "};")
    emit("kFbank", fb[FRAMES])
    emit("kMel", mel[FRAMES])
    emit("kMfcc", mfcc[FRAMES])
    print("\n}  // namespace dsp_reference")


if __name__ == "__main__":
    main()
