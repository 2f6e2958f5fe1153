#include "agcn/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "agcn/error.hpp"

namespace agcn {

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'G', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void read_exact(std::istream& in, void* dst, std::size_t n, std::size_t offset, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError(std::string("AGT1: truncated ") + what + " at byte " + std::to_string(offset));
  }
}

}  // namespace

void write_agt(std::ostream& out, const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw ConfigError("AGT1: rank must be 1..255");
  out.write(kMagic.data(), 4);
  out.put(static_cast<char>(t.rank()));
  for (auto d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("AGT1: dim exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  std::vector<unsigned char> payload(t.numel() * 4);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
    payload[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
    payload[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    payload[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    payload[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("AGT1: write failed");
}

Tensor read_agt(std::istream& in) {
  std::array<char, 4> magic{};
  read_exact(in, magic.data(), 4, 0, "magic");
  if (magic != kMagic) throw DataError("AGT1: bad magic at byte 0");
  unsigned char rank = 0;
  read_exact(in, &rank, 1, 4, "rank");
  if (rank == 0) throw DataError("AGT1: zero rank at byte 4");
  Shape shape(rank);
  std::size_t offset = 5;
  for (auto& d : shape) {
    unsigned char b[4];
    read_exact(in, b, 4, offset, "dims");
    d = get_u32(b);
    if (d == 0) throw DataError("AGT1: zero dim at byte " + std::to_string(offset));
    offset += 4;
  }
  const std::size_t n = shape_numel(shape);
  std::vector<unsigned char> payload(n * 4);
  read_exact(in, payload.data(), payload.size(), offset, "payload");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<float>(get_u32(&payload[4 * i]));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_agt(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_agt(out, t);
}

Tensor load_agt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_agt(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Tensor round_to_f32(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.data()) v = static_cast<float>(v);
  return out;
}

}  // namespace agcn
