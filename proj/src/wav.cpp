// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace convbf {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::vector<char>& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;  // little-endian host assumed
}

std::uint16_t get_u16(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("wav: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InvalidInput("wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
    const char* body = bytes.data() + pos + 8;
    if (pos + 8 + chunk_len > bytes.size())
      throw InvalidInput("wav: truncated chunk in " + path);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw InvalidInput("wav: malformed fmt chunk");
      format = get_u16(body);
      channels = get_u16(body + 2);
      rate = get_u32(body + 4);
      bits = get_u16(body + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (data == nullptr) throw InvalidInput("wav: no data chunk in " + path);
  if (channels == 0 || rate == 0) throw InvalidInput("wav: malformed header in " + path);

  WavData wav;
  wav.sample_rate_hz = static_cast<int>(rate);

  if (format == kFormatPcm && bits == 16) {
    const std::uint32_t frames = data_len / (2u * channels);
    wav.samples.resize(frames, channels);
    for (std::uint32_t i = 0; i < frames; ++i) {
      for (std::uint16_t c = 0; c < channels; ++c) {
        std::int16_t s;
        std::memcpy(&s, data + (static_cast<size_t>(i) * channels + c) * 2, 2);
        wav.samples(i, c) = static_cast<double>(s) / 32768.0;
      }
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::uint32_t frames = data_len / (4u * channels);
    wav.samples.resize(frames, channels);
    for (std::uint32_t i = 0; i < frames; ++i) {
      for (std::uint16_t c = 0; c < channels; ++c) {
        float s;
        std::memcpy(&s, data + (static_cast<size_t>(i) * channels + c) * 4, 4);
        wav.samples(i, c) = static_cast<double>(s);
      }
    }
  } else {
    throw InvalidInput("wav: unsupported sample format (need PCM16 or float32): " + path);
  }
  return wav;
}

void write_wav_float32(const std::string& path, const Eigen::MatrixXd& samples,
                       int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw InvalidInput("wav: sample rate must be positive");
  if (samples.size() == 0) throw InvalidInput("wav: nothing to write");

  const auto frames = static_cast<std::uint32_t>(samples.rows());
  const auto channels = static_cast<std::uint16_t>(samples.cols());
  const std::uint32_t data_len = frames * channels * 4u;

  std::vector<char> out;
  out.reserve(58 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 4 + 26 + 12 + 8 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});

  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 18);
  put_u16(out, kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * channels * 4u);
  put_u16(out, static_cast<std::uint16_t>(channels * 4u));
  put_u16(out, 32);
  put_u16(out, 0);  // no extension

  out.insert(out.end(), {'f', 'a', 'c', 't'});
  put_u32(out, 4);
  put_u32(out, frames);

  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const float s = static_cast<float>(samples(i, c));
      const char* p = reinterpret_cast<const char*>(&s);
      out.insert(out.end(), p, p + 4);
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidInput("wav: cannot write " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw InvalidInput("wav: write failed for " + path);
}

}  // namespace convbf
