#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace asa {

/// 8-bit RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::uint8_t* at(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
};

/// Decodes binary PPM (P6) or PGM (P5) with maxval 255. Throws MediaError.
Image decode_image(const std::vector<std::uint8_t>& bytes);
Image read_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Image& image);
void write_ppm(const Image& image, const std::filesystem::path& path);

/// Mono waveform in [-1, 1].
struct Waveform {
  int sample_rate = 16000;
  std::vector<double> samples;

  double duration_s() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

/// Reads RIFF/WAVE PCM (8/16/24/32-bit) or IEEE float (32-bit). Multi-channel
/// input is averaged to mono. Throws MediaError.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(const std::vector<std::uint8_t>& bytes);
/// Writes 16-bit PCM mono.
void write_wav(const Waveform& wave, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace asa
