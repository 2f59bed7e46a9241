/*
 * Copyright 2026 The fgmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fgmae/data/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "fgmae/core/error.hpp"

namespace fgmae {

std::uint8_t quantize(double v, double lo, double hi) {
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

std::string encode_ppm(const RgbImage& image, const std::string& comment) {
  require(image.width > 0 && image.height > 0, ErrorKind::InvalidArgument, "empty image");
  require(image.rgb.size() == static_cast<std::size_t>(image.width) * image.height * 3, ErrorKind::Shape,
          "pixel buffer does not match image size");
  require(comment.find('\n') == std::string::npos, ErrorKind::InvalidArgument, "PPM comment must be one line");
  std::string out = "P6\n";
  if (!comment.empty()) out += "# " + comment + "\n";
  out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

RgbImage decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&] {
    skip();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    require(pos > start, ErrorKind::Io, "malformed PPM header");
    return std::stoi(bytes.substr(start, pos - start));
  };
  require(bytes.compare(0, 2, "P6") == 0, ErrorKind::Io, "not a binary PPM (P6)");
  pos = 2;
  RgbImage img;
  img.width = number();
  img.height = number();
  require(number() == 255, ErrorKind::Io, "only maxval 255 is supported");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
  require(bytes.size() - std::min(pos, bytes.size()) == n, ErrorKind::Io, "PPM raster size mismatch");
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image, const std::string& comment) {
  const std::string bytes = encode_ppm(image, comment);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  return decode_ppm(std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
}

}  // namespace fgmae
