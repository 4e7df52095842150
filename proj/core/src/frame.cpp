#include "maskbot/frame.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "maskbot/error.hpp"

namespace maskbot {

Frame::Frame(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
  if (w <= 0) throw ValidationError("frame.width", "> 0");
  if (h <= 0) throw ValidationError("frame.height", "> 0");
  if (c != 1 && c != 3) throw ValidationError("frame.channels", "1 or 3");
  data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                  static_cast<std::size_t>(c),
              fill);
}

void write_pnm(std::ostream& out, const Frame& frame) {
  out << (frame.channels == 3 ? "P6" : "P5") << '\n'
      << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data.data()),
            static_cast<std::streamsize>(frame.data.size()));
}

void write_pnm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_pnm(out, frame);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

namespace {

// Next header token, skipping whitespace and comments; tracks line numbers.
std::string next_token(std::istream& in, int& line) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      ++line;
      continue;
    }
    if (std::isspace(ch)) {
      if (ch == '\n') ++line;
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int header_int(std::istream& in, int& line, const char* what) {
  const std::string tok = next_token(in, line);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, std::string("bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

Frame read_pnm(std::istream& in) {
  int line = 1;
  const std::string magic = next_token(in, line);
  if (magic != "P5" && magic != "P6") throw ParseError(line, "unsupported magic '" + magic + "'");
  const int w = header_int(in, line, "width");
  const int h = header_int(in, line, "height");
  const int maxval = header_int(in, line, "maxval");
  if (w <= 0 || h <= 0) throw ParseError(line, "non-positive size");
  if (maxval != 255) throw ParseError(line, "only maxval 255 supported");
  Frame frame(w, h, magic == "P6" ? 3 : 1);
  in.read(reinterpret_cast<char*>(frame.data.data()),
          static_cast<std::streamsize>(frame.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(frame.data.size())) {
    throw ParseError(0, "truncated pixel data");
  }
  return frame;
}

Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_pnm(in);
}

}  // namespace maskbot
