#include "agcn/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>

#include "agcn/error.hpp"

namespace agcn {

namespace {

constexpr double kLogFloor = 1e-10;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::ostream& out, std::uint16_t v) {
  out.put(static_cast<char>(v & 0xff));
  out.put(static_cast<char>((v >> 8) & 0xff));
}

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  // |X_k|^2 for k in [0, n/2].
  void power(double* dst) {
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) dst[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

// Mirror index without repeating the edge sample, valid for any offset.
std::size_t reflect_index(long i, std::size_t len) {
  const long period = 2 * (static_cast<long>(len) - 1);
  long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long>(len)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

AudioClip read_wav(std::istream& in) {
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw DataError("wav: truncated RIFF header at byte " + std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw DataError("wav: missing RIFF tag at byte 0");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw DataError("wav: missing WAVE tag at byte 8");

  int channels = 0, rate = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::size_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) {
        throw DataError("wav: truncated fmt chunk at byte " + std::to_string(pos));
      }
      const unsigned char* f = bytes.data() + body;
      std::uint16_t format = le16(f);
      if (format == 0xFFFE && size >= 40 && body + 40 <= bytes.size()) format = le16(f + 24);
      if (format != 1) {
        throw DataError("wav: non-PCM format " + std::to_string(format) + " at byte " + std::to_string(body));
      }
      channels = le16(f + 2);
      rate = static_cast<int>(le32(f + 4));
      bits = le16(f + 14);
      if (bits != 16) {
        throw DataError("wav: unsupported " + std::to_string(bits) + "-bit samples at byte " +
                        std::to_string(body + 14));
      }
      if (channels != 1 && channels != 2) {
        throw DataError("wav: unsupported channel count " + std::to_string(channels) + " at byte " +
                        std::to_string(body + 2));
      }
      if (rate <= 0) throw DataError("wav: invalid sample rate at byte " + std::to_string(body + 4));
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data chunk before fmt chunk at byte " + std::to_string(pos));
      const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
      if (body + size > bytes.size()) {
        throw DataError("wav: truncated data chunk at byte " + std::to_string(bytes.size()) + " (expected " +
                        std::to_string(size) + " bytes from byte " + std::to_string(body) + ")");
      }
      if (size % frame_bytes != 0) {
        throw DataError("wav: partial sample frame at byte " + std::to_string(body + size - size % frame_bytes));
      }
      const std::size_t frames = size / frame_bytes;
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const auto v = static_cast<std::int16_t>(le16(bytes.data() + body + i * frame_bytes + 2 * c));
          acc += static_cast<double>(v) / 32768.0;
        }
        clip.samples[i] = acc / channels;
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw DataError("wav: no data chunk before byte " + std::to_string(bytes.size()));
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_wav(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_wav(std::ostream& out, const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw ConfigError("wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate * 2));
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
  }
  if (!out) throw DataError("wav: write failed");
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_wav(out, clip);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw ConfigError("resample: target rate must be positive");
  if (clip.sample_rate <= 0) throw ConfigError("resample: source rate must be positive");
  if (target_rate == clip.sample_rate || clip.samples.empty()) {
    AudioClip out = clip;
    out.sample_rate = target_rate;
    return out;
  }
  const std::size_t len = clip.samples.size();
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(len) * target_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) * step;
    auto lo = static_cast<std::size_t>(t);
    if (lo >= len - 1) {
      out.samples[i] = clip.samples[len - 1];
      continue;
    }
    const double frac = t - static_cast<double>(lo);
    const double a = clip.samples[lo];
    out.samples[i] = a + frac * (clip.samples[lo + 1] - a);
  }
  return out;
}

AudioClip fix_length(const AudioClip& clip, double seconds) {
  if (!(seconds > 0.0)) throw ConfigError("fix_length: seconds must be positive");
  AudioClip out = clip;
  out.samples.resize(static_cast<std::size_t>(std::llround(seconds * clip.sample_rate)), 0.0);
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges_hz(int n_mels, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / (n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(int n_mels, int sample_rate) {
  const auto edges = mel_edges_hz(n_mels, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  if (n_mels < 1 || n_fft < 2 || sample_rate <= 0) {
    throw ConfigError("mel_filterbank: n_mels, n_fft and sample_rate must be positive");
  }
  const auto bins = static_cast<std::size_t>(n_fft / 2 + 1);
  const auto edges = mel_edges_hz(n_mels, sample_rate);
  Tensor fb({static_cast<std::size_t>(n_mels), bins});
  for (std::size_t m = 0; m < static_cast<std::size_t>(n_mels); ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      fb[m * bins + k] = w;
      sum += w;
    }
    if (sum <= 0.0) {
      throw ConfigError("mel_filterbank: band " + std::to_string(m) +
                        " covers no FFT bin; lower n_mels or raise n_fft");
    }
    for (std::size_t k = 0; k < bins; ++k) fb[m * bins + k] /= sum;
  }
  return fb;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  }
  return w;
}

LogMelSpectrogram extract_logmel(const AudioClip& clip, const LogMelOptions& opt) {
  if (opt.hop < 1) throw ConfigError("extract_logmel: hop must be >= 1");
  if (opt.window < 1 || opt.window > opt.n_fft) throw ConfigError("extract_logmel: need 1 <= window <= n_fft");
  if (opt.n_fft % 2 != 0) throw ConfigError("extract_logmel: n_fft must be even");
  if (clip.sample_rate <= 0) throw ConfigError("extract_logmel: sample rate must be positive");
  const std::size_t len = clip.samples.size();
  if (len < 2) {
    throw DataError("extract_logmel: clip of " + std::to_string(len) +
                    " samples is too short to reflect-pad into one window");
  }

  const Tensor fb = mel_filterbank(opt.n_mels, opt.n_fft, clip.sample_rate);
  const auto window = hann_window(opt.window);
  const std::size_t n_fft = static_cast<std::size_t>(opt.n_fft);
  const std::size_t bins = n_fft / 2 + 1;
  const std::size_t hop = static_cast<std::size_t>(opt.hop);
  const long pad = opt.n_fft / 2;
  const std::size_t win_offset = (n_fft - window.size()) / 2;
  const std::size_t frames = 1 + len / hop;
  const std::size_t mels = static_cast<std::size_t>(opt.n_mels);

  LogMelSpectrogram out;
  out.values = Tensor({1, frames, mels});
  out.hop = opt.hop;
  out.window = opt.window;
  out.n_mels = opt.n_mels;
  out.sample_rate = clip.sample_rate;

  RealFft fft(opt.n_fft);
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    double* frame = fft.input();
    std::fill(frame, frame + n_fft, 0.0);
    const long start = static_cast<long>(t * hop) - pad;
    for (std::size_t i = 0; i < window.size(); ++i) {
      const long src = start + static_cast<long>(win_offset + i);
      frame[win_offset + i] = clip.samples[reflect_index(src, len)] * window[i];
    }
    fft.power(power.data());
    for (std::size_t m = 0; m < mels; ++m) {
      const double* row = fb.data().data() + m * bins;
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += row[k] * power[k];
      out.values[t * mels + m] = std::log(e + kLogFloor);
    }
  }
  return out;
}

}  // namespace agcn
