#include "tango/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tango/errors.hpp"

namespace tango {

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated WAV " + path);
  return v;
}

}  // namespace

std::size_t write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (!(w.sample_rate > 0.0)) throw ParameterError("sample rate must be > 0");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, 1);  // PCM
  put<std::uint16_t>(out, 1);  // mono
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * 2);
  put<std::uint16_t>(out, 2);
  put<std::uint16_t>(out, 16);
  out.write("data", 4);
  put<std::uint32_t>(out, data_bytes);
  std::size_t clipped = 0;
  for (double x : w.samples) {
    if (x > 1.0 || x < -1.0) ++clipped;
    const double c = std::clamp(x, -1.0, 1.0);
    const long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
    put<std::int16_t>(out, static_cast<std::int16_t>(q));
  }
  return clipped;
}

Waveform read_wav(const std::filesystem::path& path) {
  const auto p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p);
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("not a RIFF file: " + p);
  get<std::uint32_t>(in, p);
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("not a WAVE file: " + p);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const auto size = get<std::uint32_t>(in, p);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get<std::uint16_t>(in, p);
      channels = get<std::uint16_t>(in, p);
      rate = get<std::uint32_t>(in, p);
      get<std::uint32_t>(in, p);
      get<std::uint16_t>(in, p);
      bits = get<std::uint16_t>(in, p);
      in.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("WAV data before fmt chunk: " + p);
      if (format != 1 || channels != 1 || bits != 16) {
        throw FormatError("only 16-bit PCM mono WAV is supported: " + p);
      }
      Waveform w;
      w.sample_rate = rate;
      w.samples.resize(size / 2);
      for (auto& s : w.samples) s = get<std::int16_t>(in, p) / 32768.0;
      return w;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw FormatError("WAV has no data chunk: " + p);
}

}  // namespace tango
