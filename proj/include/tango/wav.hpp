#pragma once

#include <filesystem>

#include "tango/signal.hpp"

namespace tango {

// 16-bit PCM mono RIFF/WAVE. Samples outside [-1, 1] are clamped; the
// number clamped is returned so callers can report it.
std::size_t write_wav(const std::filesystem::path& path, const Waveform& w);

// Reads 16-bit PCM mono; values scaled to [-1, 1).
Waveform read_wav(const std::filesystem::path& path);

}  // namespace tango
