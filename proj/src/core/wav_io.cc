// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/core/wav_io.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "asvlab/core/error.h"

namespace asvlab {

namespace {

struct RiffHeader {
  char riff[4];
  uint32_t size;
  char wave[4];
};

void WriteU32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
void WriteU16(std::ofstream& os, uint16_t v) {
  os.write(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

Waveform LoadWaveform(const std::string& path, int expected_rate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);

  RiffHeader hdr;
  is.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));
  if (!is || std::strncmp(hdr.riff, "RIFF", 4) != 0 ||
      std::strncmp(hdr.wave, "WAVE", 4) != 0)
    throw Error(ErrorKind::kFormat, "not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;

  while (is) {
    char id[4];
    uint32_t chunk_size = 0;
    is.read(id, 4);
    is.read(reinterpret_cast<char*>(&chunk_size), 4);
    if (!is) break;
    if (std::strncmp(id, "fmt ", 4) == 0) {
      std::vector<char> body(chunk_size);
      is.read(body.data(), chunk_size);
      if (chunk_size < 16) throw Error(ErrorKind::kFormat, "short fmt chunk");
      std::memcpy(&format, body.data() + 0, 2);
      std::memcpy(&channels, body.data() + 2, 2);
      std::memcpy(&rate, body.data() + 4, 4);
      std::memcpy(&bits, body.data() + 14, 2);
      have_fmt = true;
    } else if (std::strncmp(id, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorKind::kFormat, "data before fmt chunk");
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      if (!pcm16 && !float32)
        throw Error(ErrorKind::kFormat,
                    "unsupported codec (only 16-bit PCM or 32-bit float)");
      if (channels != 1)
        throw Error(ErrorKind::kFormat, "unsupported channel count (only mono)");
      data.resize(chunk_size);
      is.read(data.data(), chunk_size);
      have_data = true;
      break;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data)
    throw Error(ErrorKind::kFormat, "missing fmt/data chunk: " + path);
  if (expected_rate > 0 && static_cast<int>(rate) != expected_rate)
    throw Error(ErrorKind::kRate, "sample rate " + std::to_string(rate) +
                                      " != expected " +
                                      std::to_string(expected_rate));

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1) {
    const size_t n = data.size() / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t q;
      std::memcpy(&q, data.data() + 2 * i, 2);
      // -32768 has no positive counterpart at this scale; pin it to -1.
      w.samples[i] = q == -32768 ? -1.0f : q / 32767.0f;
    }
  } else {
    const size_t n = data.size() / 4;
    w.samples.resize(n);
    std::memcpy(w.samples.data(), data.data(), n * 4);
  }
  return w;
}

void SaveWaveform(const Waveform& w, const std::string& path,
                  WavEncoding encoding) {
  ValidateWaveform(w);

  const bool f32 = encoding == WavEncoding::kFloat32;
  const uint16_t bytes_per = f32 ? 4 : 2;
  std::vector<char> data(w.samples.size() * bytes_per);
  if (f32) {
    std::memcpy(data.data(), w.samples.data(), data.size());
  } else {
    for (size_t i = 0; i < w.samples.size(); ++i) {
      long q = std::lround(static_cast<double>(w.samples[i]) * 32767.0);
      if (q > 32767) q = 32767;
      if (q < -32767) q = -32767;
      const int16_t s = static_cast<int16_t>(q);
      std::memcpy(data.data() + 2 * i, &s, 2);
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(data.size());
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteU32(os, 16);
  WriteU16(os, f32 ? 3 : 1);  // codec
  WriteU16(os, 1);            // mono
  WriteU32(os, static_cast<uint32_t>(w.sample_rate));
  WriteU32(os, static_cast<uint32_t>(w.sample_rate) * bytes_per);
  WriteU16(os, bytes_per);
  WriteU16(os, f32 ? 32 : 16);
  os.write("data", 4);
  WriteU32(os, data_bytes);
  os.write(data.data(), data_bytes);
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path);
}

}  // namespace asvlab
