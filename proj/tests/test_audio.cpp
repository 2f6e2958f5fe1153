#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>

#include "agcn/audio.hpp"
#include "agcn/error.hpp"

using namespace agcn;

namespace {

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::string wav_bytes(int channels, int rate, const std::vector<std::int16_t>& interleaved, int format = 1) {
  std::string s = "RIFF";
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * 2);
  put32(s, 36 + data_size);
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, static_cast<std::uint16_t>(format));
  put16(s, static_cast<std::uint16_t>(channels));
  put32(s, static_cast<std::uint32_t>(rate));
  put32(s, static_cast<std::uint32_t>(rate * channels * 2));
  put16(s, static_cast<std::uint16_t>(channels * 2));
  put16(s, 16);
  s += "data";
  put32(s, data_size);
  for (auto v : interleaved) put16(s, static_cast<std::uint16_t>(v));
  return s;
}

AudioClip sine(double hz, double seconds, int rate, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  return c;
}

}  // namespace

TEST(Wav, SilenceScaleAndDownmix) {
  std::istringstream zeros(wav_bytes(1, 16000, std::vector<std::int16_t>(16000, 0)));
  AudioClip silent = read_wav(zeros);
  EXPECT_EQ(silent.sample_rate, 16000);
  ASSERT_EQ(silent.samples.size(), 16000u);
  for (double v : silent.samples) EXPECT_EQ(v, 0.0);

  std::istringstream half(wav_bytes(1, 8000, {16384}));
  EXPECT_EQ(read_wav(half).samples.at(0), 0.5);

  // 0.2 and 0.4 of full scale.
  std::istringstream stereo(wav_bytes(2, 8000, {6554, 13107}));
  EXPECT_NEAR(read_wav(stereo).samples.at(0), 0.3, 1e-4);
}

TEST(Wav, RejectsNonPcmAndTruncation) {
  std::istringstream fl(wav_bytes(1, 8000, {0, 0}, 3));
  EXPECT_THROW(read_wav(fl), DataError);
  std::string b = wav_bytes(1, 8000, {1, 2, 3, 4});
  std::istringstream cut(b.substr(0, b.size() - 3));
  try {
    read_wav(cut);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(Wav, WriteReadRoundTrip) {
  AudioClip c = sine(300.0, 0.1, 8000);
  std::stringstream ss;
  write_wav(ss, c);
  AudioClip back = read_wav(ss);
  ASSERT_EQ(back.samples.size(), c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) EXPECT_NEAR(back.samples[i], c.samples[i], 1.0 / 32768.0);
}

TEST(Resample, IdentityAndDc) {
  AudioClip c = sine(440.0, 0.05, 16000);
  AudioClip same = resample(c, 16000);
  EXPECT_EQ(same.samples, c.samples);

  AudioClip dc{std::vector<double>(4410, 0.25), 44100};
  for (int rate : {8000, 16000, 48000}) {
    AudioClip r = resample(dc, rate);
    EXPECT_EQ(r.samples.size(), static_cast<std::size_t>(std::llround(4410.0 * rate / 44100)));
    for (double v : r.samples) EXPECT_DOUBLE_EQ(v, 0.25);
  }
}

TEST(Resample, SinePeakSurvives) {
  AudioClip r = resample(sine(440.0, 1.0, 48000), 16000);
  ASSERT_EQ(r.sample_rate, 16000);
  // Direct DFT of one Hann-windowed 1024-sample frame.
  const int n = 1024;
  int best = 0;
  double best_mag = -1.0;
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / n);
      acc += w * r.samples[4000 + t] * std::polar(1.0, -2.0 * std::numbers::pi * k * t / n);
    }
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  const double expected_bin = 440.0 * n / 16000.0;
  EXPECT_LE(std::abs(best - expected_bin), 1.0);
}

TEST(FixLength, TruncatePadIdentity) {
  AudioClip six{std::vector<double>(96000, 0.1), 16000};
  AudioClip t = fix_length(six, 5.0);
  EXPECT_EQ(t.samples.size(), 80000u);
  EXPECT_EQ(t.samples.front(), 0.1);

  AudioClip four{std::vector<double>(64000, 0.1), 16000};
  AudioClip p = fix_length(four, 5.0);
  ASSERT_EQ(p.samples.size(), 80000u);
  EXPECT_EQ(p.samples[63999], 0.1);
  for (std::size_t i = 64000; i < 80000; ++i) ASSERT_EQ(p.samples[i], 0.0);

  AudioClip five{std::vector<double>(80000, 0.3), 16000};
  EXPECT_EQ(fix_length(five, 5.0).samples, five.samples);
}

TEST(MelFilterbank, RowsNonnegativeAndNormalized) {
  Tensor fb = mel_filterbank(64, 1024, 16000);
  ASSERT_EQ(fb.shape(), (Shape{64, 513}));
  for (std::size_t m = 0; m < 64; ++m) {
    double s = 0.0;
    for (std::size_t k = 0; k < 513; ++k) {
      EXPECT_GE(fb.at({m, k}), 0.0);
      s += fb.at({m, k});
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
  EXPECT_NEAR(hz_to_mel(1000.0), 2595.0 * std::log10(1.0 + 1000.0 / 700.0), 1e-12);
}

TEST(LogMel, FiveSecondInputShape) {
  AudioClip c{std::vector<double>(80000, 0.0), 16000};
  LogMelSpectrogram s = extract_logmel(c);
  EXPECT_EQ(s.values.shape(), (Shape{1, 201, 64}));
}

TEST(LogMel, SilenceFloor) {
  AudioClip c{std::vector<double>(16000, 0.0), 16000};
  LogMelSpectrogram s = extract_logmel(c);
  for (double v : s.values.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(LogMel, ShapeLaw) {
  for (std::size_t len : {399u, 400u, 401u, 80000u}) {
    AudioClip c = sine(700.0, static_cast<double>(len) / 16000.0, 16000);
    ASSERT_EQ(c.samples.size(), len);
    LogMelSpectrogram s = extract_logmel(c);
    EXPECT_EQ(s.frames(), 1 + len / 400) << len;
    EXPECT_EQ(s.values.dim(2), 64u);
  }
}

TEST(LogMel, ToneLandsInNearestBand) {
  const auto centers = mel_center_frequencies(64, 16000);
  std::size_t nearest = 0;
  for (std::size_t m = 1; m < centers.size(); ++m)
    if (std::abs(centers[m] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = m;
  LogMelSpectrogram s = extract_logmel(sine(1000.0, 1.0, 16000));
  for (std::size_t t = 0; t < s.frames(); ++t) {
    std::size_t arg = 0;
    for (std::size_t m = 1; m < 64; ++m)
      if (s.values.at({0, t, m}) > s.values.at({0, t, arg})) arg = m;
    EXPECT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(LogMel, DeterministicAndScaleMonotone) {
  AudioClip c = sine(523.0, 0.5, 16000, 0.3);
  for (std::size_t i = 0; i < c.samples.size(); ++i) c.samples[i] += 0.1 * std::sin(0.37 * i * i);
  LogMelSpectrogram a = extract_logmel(c);
  EXPECT_EQ(a.values, extract_logmel(c).values);
  AudioClip louder = c;
  for (double& v : louder.samples) v *= 2.0;
  LogMelSpectrogram b = extract_logmel(louder);
  for (std::size_t i = 0; i < a.values.numel(); ++i) EXPECT_GE(b.values[i], a.values[i]);
}

TEST(LogMel, RejectsBadOptions) {
  AudioClip c{std::vector<double>(1000, 0.0), 16000};
  LogMelOptions o;
  o.hop = 0;
  EXPECT_THROW(extract_logmel(c, o), ConfigError);
  o = {};
  o.window = 2048;
  EXPECT_THROW(extract_logmel(c, o), ConfigError);
  AudioClip tiny{std::vector<double>(1, 0.0), 16000};
  EXPECT_THROW(extract_logmel(tiny), DataError);
}
