#include "semenet/image/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "semenet/error.hpp"

namespace semenet {

namespace {

std::string describe(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

GrayImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw InvalidInputError("cannot decode PNG " + describe(path) + ": " + image.message);
  }
  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw InvalidInputError("cannot decode PNG " + describe(path) + ": " + msg);
  }
  const std::size_t w = image.width, h = image.height;
  if (!colour) return GrayImage(w, h, std::move(buf));
  std::vector<std::uint8_t> gray(w * h);
  for (std::size_t i = 0; i < w * h; ++i) {
    gray[i] = clamp_round(0.299 * buf[3 * i] + 0.587 * buf[3 * i + 1] + 0.114 * buf[3 * i + 2]);
  }
  return GrayImage(w, h, std::move(gray));
}

std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (next_token(in) != "P5") throw InvalidInputError("not a binary PGM: " + describe(path));
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token(in));
    h = std::stoul(next_token(in));
    maxval = std::stoul(next_token(in));
  } catch (const std::exception&) {
    throw InvalidInputError("malformed PGM header in " + describe(path));
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw InvalidInputError("unsupported PGM geometry or depth in " + describe(path));
  }
  std::vector<std::uint8_t> samples(w * h);
  in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(samples.size()));
  if (static_cast<std::size_t>(in.gcount()) != samples.size()) {
    throw InvalidInputError("truncated PGM " + describe(path));
  }
  if (maxval != 255) {
    for (auto& s : samples) s = clamp_round(255.0 * s / static_cast<double>(maxval));
  }
  return GrayImage(w, h, std::move(samples));
}

void write_png_raw(const std::filesystem::path& path, std::size_t w, std::size_t h, bool colour,
                   const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error("cannot write PNG " + describe(path) + ": " + image.message);
  }
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open image " + describe(path));
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(magic), 0, 8) == 0) return read_png(path);
  throw InvalidInputError("unrecognised image format " + describe(path));
}

void write_gray(const std::filesystem::path& path, const GrayImage& img) {
  if (path.extension() == ".pgm") {
    write_pgm(path, img);
  } else {
    write_png(path, img);
  }
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  write_png_raw(path, img.width(), img.height(), false, img.samples().data());
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_png_raw(path, img.width, img.height, true, img.samples.data());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write PGM " + describe(path));
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.samples().data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace semenet
