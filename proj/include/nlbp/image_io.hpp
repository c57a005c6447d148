#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nlbp/core.hpp"

namespace nlbp {

namespace detail {
inline int pnm_next_int(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw std::runtime_error("malformed PNM header: " + path);
  return v;
}
}  // namespace detail

/// Reads P2/P5 (gray) and P3/P6 (RGB) with maxval <= 255.
inline ColorImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path.string());
  std::string magic;
  in >> magic;
  bool gray = magic == "P2" || magic == "P5";
  bool rgb = magic == "P3" || magic == "P6";
  if (!gray && !rgb)
    throw std::runtime_error("unsupported PNM magic '" + magic + "' in " +
                             path.string());
  bool ascii = magic == "P2" || magic == "P3";
  int w = detail::pnm_next_int(in, path.string());
  int h = detail::pnm_next_int(in, path.string());
  int maxval = detail::pnm_next_int(in, path.string());
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
    throw std::runtime_error("unsupported PNM geometry/maxval in " +
                             path.string());
  ColorImage img;
  img.width = w;
  img.height = h;
  img.channels = gray ? 1 : 3;
  std::size_t count = static_cast<std::size_t>(w) * h * img.channels;
  img.data.resize(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      int v = detail::pnm_next_int(in, path.string());
      img.data[i] = static_cast<std::uint8_t>(v);
    }
  } else {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw std::runtime_error("truncated PNM data in " + path.string());
  }
  return img;
}

inline GrayImage read_gray_pnm(const std::filesystem::path& path) {
  return to_grayscale(read_pnm(path));
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path.string());
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.pixels().size()));
}

inline bool has_pnm_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace nlbp
