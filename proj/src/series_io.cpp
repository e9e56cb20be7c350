#include "ksnarmax/series_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ksnarmax/errors.hpp"

namespace ksnarmax::io {

namespace {

template <class UInt>
void put_le(std::vector<unsigned char>& buf, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    buf.push_back(static_cast<unsigned char>(value >> (8 * i)));
  }
}

void put_f64(std::vector<unsigned char>& buf, double value) {
  put_le(buf, std::bit_cast<std::uint64_t>(value));
}

template <class UInt>
UInt get_le(const unsigned char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

}  // namespace

void write_series(const std::filesystem::path& path, std::string_view magic, std::uint32_t modes,
                  std::uint64_t length_field, double delta, std::span<const Complex> payload) {
  if (magic.size() != 4) throw ArgumentError("write_series: magic must be 4 bytes");
  if (modes == 0 || payload.size() % modes != 0) {
    throw ArgumentError("write_series: payload is not a whole number of K-vectors");
  }
  std::vector<unsigned char> buf;
  buf.reserve(kHeaderBytes + payload.size() * 16);
  buf.insert(buf.end(), magic.begin(), magic.end());
  put_le<std::uint32_t>(buf, kFormatVersion);
  put_le<std::uint32_t>(buf, modes);
  put_le<std::uint64_t>(buf, length_field);
  put_f64(buf, delta);
  for (const Complex& c : payload) {
    put_f64(buf, c.real());
    put_f64(buf, c.imag());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed writing " + path.string());
}

RawSeries read_series(const std::filesystem::path& path, std::string_view magic,
                      std::uint64_t vector_offset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < kHeaderBytes) throw FormatError(name + ": truncated header");
  if (std::memcmp(buf.data(), magic.data(), 4) != 0) {
    throw FormatError(name + ": bad magic, expected " + std::string(magic));
  }
  const unsigned char* p = buf.data();
  if (get_le<std::uint32_t>(p + 4) != kFormatVersion) throw FormatError(name + ": unsupported version");
  RawSeries raw;
  raw.modes = get_le<std::uint32_t>(p + 8);
  raw.length_field = get_le<std::uint64_t>(p + 12);
  raw.delta = get_f64(p + 20);
  if (raw.modes == 0) throw FormatError(name + ": zero modes");
  const std::uint64_t vectors = raw.length_field + vector_offset;
  const std::uint64_t payload_bytes = buf.size() - kHeaderBytes;
  if (vectors > payload_bytes / (16ull * raw.modes) ||
      payload_bytes != vectors * 16ull * raw.modes) {
    throw FormatError(name + ": payload length does not match header");
  }
  raw.payload.resize(vectors * raw.modes);
  const unsigned char* q = p + kHeaderBytes;
  for (auto& c : raw.payload) {
    c = Complex{get_f64(q), get_f64(q + 8)};
    q += 16;
  }
  return raw;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  return fnv1a(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()), seed);
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

std::uint64_t hash_samples(std::span<const Complex> samples, std::uint64_t seed) {
  std::uint64_t h = seed;
  std::vector<unsigned char> word;
  word.reserve(16);
  for (const Complex& c : samples) {
    word.clear();
    put_f64(word, c.real());
    put_f64(word, c.imag());
    h = fnv1a(word, h);
  }
  return h;
}

}  // namespace ksnarmax::io
