#include "asa/media.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "asa/common.hpp"

namespace asa {

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

// Reads one whitespace-delimited header integer, skipping '#' comments.
int header_int(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw MediaError("malformed PNM header");
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    if (v > 1'000'000) throw MediaError("PNM dimension too large");
    ++pos;
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MediaError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Image decode_image(const std::vector<std::uint8_t>& b) {
  if (b.size() < 3 || b[0] != 'P' || (b[1] != '6' && b[1] != '5')) throw MediaError("not a binary PPM/PGM image");
  const bool gray = b[1] == '5';
  std::size_t pos = 2;
  Image img;
  img.width = header_int(b, pos);
  img.height = header_int(b, pos);
  const int maxval = header_int(b, pos);
  if (maxval != 255) throw MediaError("only 8-bit PNM images are supported");
  if (img.width <= 0 || img.height <= 0) throw MediaError("empty image");
  if (pos >= b.size() || !std::isspace(b[pos])) throw MediaError("malformed PNM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  const std::size_t need = n * (gray ? 1 : 3);
  if (b.size() - pos < need) throw MediaError("truncated image data");
  img.rgb.resize(n * 3);
  if (gray) {
    for (std::size_t i = 0; i < n; ++i) img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = b[pos + i];
  } else {
    std::memcpy(img.rgb.data(), b.data() + pos, need);
  }
  return img;
}

Image read_image(const std::filesystem::path& path) { return decode_image(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Waveform decode_wav(const std::vector<std::uint8_t>& b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw MediaError("not a RIFF/WAVE file");
  std::size_t pos = 12;
  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= b.size()) {
    const std::uint32_t len = le32(b.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > b.size() && std::memcmp(b.data() + pos, "data", 4) != 0) throw MediaError("truncated WAV chunk");
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (len < 16) throw MediaError("short fmt chunk");
      format = le16(b.data() + body);
      channels = le16(b.data() + body + 2);
      rate = le32(b.data() + body + 4);
      bits = le16(b.data() + body + 14);
      if (format == 0xFFFE && len >= 26) format = le16(b.data() + body + 24);  // WAVE_FORMAT_EXTENSIBLE
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      data = b.data() + body;
      data_len = std::min<std::size_t>(len, b.size() - body);
    }
    pos = body + len + (len & 1);
  }
  if (!data || channels <= 0 || rate == 0) throw MediaError("WAV lacks fmt or data chunk");
  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) throw MediaError("unsupported WAV encoding " + std::to_string(format));
  if (is_float && bits != 32) throw MediaError("unsupported float WAV width");
  if (!is_float && bits != 8 && bits != 16 && bits != 24 && bits != 32) throw MediaError("unsupported PCM width");
  const std::size_t bytes_per = static_cast<std::size_t>(bits / 8);
  const std::size_t frame = bytes_per * channels;
  const std::size_t frames = data_len / frame;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + f * frame + c * bytes_per;
      double v = 0.0;
      if (is_float) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else if (bits == 8) {
        v = (static_cast<int>(p[0]) - 128) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (x & 0x800000) x |= ~0xFFFFFF;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
      acc += v;
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

Waveform read_wav(const std::filesystem::path& path) { return decode_wav(read_file_bytes(path)); }

void write_wav(const Waveform& wave, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(wave.samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put32(out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32767.0))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace asa
