#include "mcnet/image_io.hpp"

#include <fstream>

#include "mcnet/error.hpp"

namespace mcnet {

namespace {

[[noreturn]] void bad_pgm(const std::string& path, std::istream& in,
                          const std::string& what) {
  const auto off = in.tellg();
  fail(ErrorClass::io, "'" + path + "': " + what + " (byte offset " +
                           std::to_string(long(off)) + ")");
}

// Skips whitespace and '#' comments inside the header.
void skip_header_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& in, const std::string& path,
                    const char* field) {
  skip_header_space(in);
  int value = 0;
  if (!(in >> value) || value < 0) {
    bad_pgm(path, in, std::string("bad ") + field + " in header");
  }
  return value;
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorClass::io, "cannot open '" + path + "'");
  }
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 == 'P' && m1 == '2') {
    fail(ErrorClass::io,
         "'" + path + "': ASCII PGM (P2) is not supported, use binary P5");
  }
  if (m0 != 'P' || m1 != '5') {
    bad_pgm(path, in, "not a P5 PGM header");
  }
  const int w = read_header_int(in, path, "width");
  const int h = read_header_int(in, path, "height");
  const int maxval = read_header_int(in, path, "maxval");
  if (maxval <= 0 || maxval > 65535) {
    bad_pgm(path, in, "maxval " + std::to_string(maxval) + " out of range");
  }
  // Exactly one whitespace byte separates the header from the payload.
  int sep = in.get();
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
    bad_pgm(path, in, "missing whitespace before payload");
  }

  GrayImage img(h, w, maxval);
  const size_t n = img.px.size();
  if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n))) {
      bad_pgm(path, in, "truncated payload");
    }
    for (size_t i = 0; i < n; ++i) img.px[i] = raw[i];
  } else {
    std::vector<unsigned char> raw(n * 2);
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 std::streamsize(n * 2))) {
      bad_pgm(path, in, "truncated payload");
    }
    for (size_t i = 0; i < n; ++i) {
      img.px[i] = uint16_t(raw[2 * i] << 8 | raw[2 * i + 1]);  // big-endian
    }
  }
  for (uint16_t v : img.px) {
    if (v > maxval) {
      bad_pgm(path, in, "sample " + std::to_string(v) + " exceeds maxval");
    }
  }
  return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
  if (img.h <= 0 || img.w <= 0 || img.maxval <= 0 || img.maxval > 65535) {
    fail(ErrorClass::io, "save_pgm: invalid image header for '" + path + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorClass::io, "cannot open '" + path + "' for writing");
  }
  out << "P5\n" << img.w << " " << img.h << "\n" << img.maxval << "\n";
  if (img.maxval < 256) {
    std::vector<unsigned char> raw(img.px.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      raw[i] = (unsigned char)(img.px[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              std::streamsize(raw.size()));
  } else {
    std::vector<unsigned char> raw(img.px.size() * 2);
    for (size_t i = 0; i < img.px.size(); ++i) {
      raw[2 * i] = (unsigned char)(img.px[i] >> 8);
      raw[2 * i + 1] = (unsigned char)(img.px[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              std::streamsize(raw.size()));
  }
  if (!out) {
    fail(ErrorClass::io, "write failed for '" + path + "'");
  }
}

}  // namespace mcnet
