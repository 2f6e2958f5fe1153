#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "agcn/tensor.hpp"

namespace agcn {

struct AudioClip {
  std::vector<double> samples;  // nominally in [-1, 1]
  int sample_rate = 0;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct LogMelOptions {
  int window = 1024;
  int hop = 400;
  int n_mels = 64;
  int n_fft = 1024;
};

struct LogMelSpectrogram {
  Tensor values;  // [1, frames, n_mels]
  int hop = 0;
  int window = 0;
  int n_mels = 0;
  int sample_rate = 0;

  std::size_t frames() const { return values.dim(1); }
};

// RIFF/WAVE, PCM 16-bit, mono or stereo. Stereo is averaged to mono and
// samples are scaled by 1/32768. Errors carry the byte offset.
AudioClip read_wav(std::istream& in);
AudioClip load_wav(const std::filesystem::path& path);

// Mono PCM16 writer; samples are clamped to [-1, 1).
void write_wav(std::ostream& out, const AudioClip& clip);
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

// Linear-interpolation resampling to round(len * target / source) samples.
AudioClip resample(const AudioClip& clip, int target_rate);

// Truncates or zero-pads at the end to round(seconds * rate) samples.
AudioClip fix_length(const AudioClip& clip, double seconds);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters on the HTK scale from 0 Hz to rate/2, each row
// normalised to unit sum. Shape [n_mels, n_fft/2 + 1].
Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate);

// Peak frequency of each filter in Hz.
std::vector<double> mel_center_frequencies(int n_mels, int sample_rate);

// Periodic Hann window.
std::vector<double> hann_window(int length);

/// Log-Mel spectrogram with reflect-padded centred frames, so a clip of L
/// samples gives 1 + floor(L / hop) frames. Power spectrum of a Hann-windowed
/// frame, projected on mel_filterbank(), then ln(x + 1e-10).
LogMelSpectrogram extract_logmel(const AudioClip& clip, const LogMelOptions& options = {});

}  // namespace agcn
