#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ksnarmax/spectral.hpp"

namespace ksnarmax::io {

/// Binary series layout shared by observation ("KSOB") and model-error ("KSMZ") files.
/// All fields little-endian:
///   magic[4] | version u32 = 1 | K u32 | T u64 | delta f64 | payload
/// The payload is interleaved (Re, Im) f64 pairs, mode-major within each time step.
inline constexpr std::size_t kHeaderBytes = 28;
inline constexpr std::uint32_t kFormatVersion = 1;

struct RawSeries {
  std::uint32_t modes = 0;
  std::uint64_t length_field = 0;
  double delta = 0.0;
  std::vector<Complex> payload;
};

/// `payload` must hold a whole number of K-vectors.
void write_series(const std::filesystem::path& path, std::string_view magic, std::uint32_t modes,
                  std::uint64_t length_field, double delta, std::span<const Complex> payload);

/// Reads a file written by write_series. The number of stored vectors is
/// length_field + vector_offset (1 for observations, 0 for model error).
/// Throws FormatError on any mismatch or truncation.
RawSeries read_series(const std::filesystem::path& path, std::string_view magic,
                      std::uint64_t vector_offset);

/// 64-bit FNV-1a, used for provenance hashes.
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 14695981039346656037ull);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t value);

/// Hash of a sequence of complex samples (bit patterns, platform-endian independent).
std::uint64_t hash_samples(std::span<const Complex> samples, std::uint64_t seed = 14695981039346656037ull);

}  // namespace ksnarmax::io
