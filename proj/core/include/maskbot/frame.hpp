#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace maskbot {

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Frame() = default;
  /// Throws ValidationError for non-positive sizes or channels other than 1/3.
  Frame(int width, int height, int channels, std::uint8_t fill = 0);

  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(channels);
  }
  std::uint8_t* pixel(int x, int y) { return data.data() + index(x, y); }
  const std::uint8_t* pixel(int x, int y) const { return data.data() + index(x, y); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  bool operator==(const Frame&) const = default;
};

/// Binary PPM (P6) for 3 channels, PGM (P5) for 1; maxval 255.
void write_pnm(std::ostream& out, const Frame& frame);
void write_pnm(const std::filesystem::path& path, const Frame& frame);

/// Reads P5/P6 with maxval 255; '#' comments in the header are skipped.
/// Throws ParseError (line 0 for binary payload problems) or Error(kIoError).
Frame read_pnm(std::istream& in);
Frame read_pnm(const std::filesystem::path& path);

}  // namespace maskbot
