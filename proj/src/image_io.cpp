#include "fovnoise/image_io.hpp"

#include "fovnoise/errors.hpp"

#include <ImfArray.h>
#include <ImfChannelList.h>
#include <ImfFrameBuffer.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>
#include <ImfRgbaFile.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

namespace fovnoise {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw IoError(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

struct MemoryReader {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset = 0;
};

Frame read_png_stream(png_structp png, png_infop info) {
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> data(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  std::array<FieldMap, 3> rgb;
  for (auto& c : rgb) c.resize(h, w);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v;
        if (out_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + (x * 3 + static_cast<png_uint_32>(c)) * 2, 2);
          v = static_cast<float>(s) / 65535.0f;
        } else {
          v = static_cast<float>(rows[y][x * 3 + static_cast<png_uint_32>(c)]) / 255.0f;
        }
        rgb[static_cast<std::size_t>(c)](y, x) = v;
      }
    }
  }
  return Frame(std::move(rgb[0]), std::move(rgb[1]), std::move(rgb[2]));
}

void write_png_stream(png_structp png, png_infop info, const Frame& frame, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("png: bit depth must be 8 or 16");
  const auto w = static_cast<png_uint_32>(frame.dims().width);
  const auto h = static_cast<png_uint_32>(frame.dims().height);
  png_set_IHDR(png, info, w, h, bit_depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);

  const std::size_t bpc = static_cast<std::size_t>(bit_depth / 8);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3 * bpc);
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(frame.channel(c)(y, x)), 0.0, 1.0);
        const auto q = static_cast<std::uint32_t>(std::lround(v * scale));
        const std::size_t at = (static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)) * bpc;
        if (bpc == 2) {
          const auto s = static_cast<std::uint16_t>(q);
          std::memcpy(&row[at], &s, 2);
        } else {
          row[at] = static_cast<png_byte>(q);
        }
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngRead() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw IoError("png: cannot create read struct");
    info = png_create_info_struct(png);
  }
  ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngWrite() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw IoError("png: cannot create write struct");
    info = png_create_info_struct(png);
  }
  ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

Frame read_png(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw IoError("not a PNG: " + path.string());
  PngRead r;
  png_init_io(r.png, f.get());
  png_set_sig_bytes(r.png, 8);
  return read_png_stream(r.png, r.info);
}

void write_png(const std::filesystem::path& path, const Frame& frame, int bit_depth) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path.string());
  PngWrite wr;
  png_init_io(wr.png, f.get());
  write_png_stream(wr.png, wr.info, frame, bit_depth);
}

Frame read_exr(const std::filesystem::path& path) {
  try {
    Imf::RgbaInputFile file(path.c_str());
    const Imath::Box2i dw = file.dataWindow();
    const int w = dw.max.x - dw.min.x + 1;
    const int h = dw.max.y - dw.min.y + 1;
    Imf::Array2D<Imf::Rgba> px(h, w);
    file.setFrameBuffer(&px[0][0] - dw.min.x - dw.min.y * w, 1, static_cast<std::size_t>(w));
    file.readPixels(dw.min.y, dw.max.y);
    std::array<FieldMap, 3> rgb;
    for (auto& c : rgb) c.resize(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Imf::Rgba& p = px[y][x];
        const float lin[3] = {p.r, p.g, p.b};
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = std::isfinite(lin[c]) ? std::clamp(static_cast<double>(lin[c]), 0.0, 1.0) : 0.0;
          rgb[c](y, x) = static_cast<float>(std::clamp(linear_to_srgb(v), 0.0, 1.0));
        }
      }
    return Frame(std::move(rgb[0]), std::move(rgb[1]), std::move(rgb[2]));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("exr: " + path.string() + ": " + e.what());
  }
}

void write_exr(const std::filesystem::path& path, const Frame& frame) {
  const auto w = static_cast<int>(frame.dims().width);
  const auto h = static_cast<int>(frame.dims().height);
  Imf::Array2D<Imf::Rgba> px(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      px[y][x] = Imf::Rgba(static_cast<float>(srgb_to_linear(frame.channel(0)(y, x))),
                           static_cast<float>(srgb_to_linear(frame.channel(1)(y, x))),
                           static_cast<float>(srgb_to_linear(frame.channel(2)(y, x))), 1.0f);
  try {
    Imf::RgbaOutputFile file(path.c_str(), w, h, Imf::WRITE_RGBA);
    file.setFrameBuffer(&px[0][0], 1, static_cast<std::size_t>(w));
    file.writePixels(h);
  } catch (const std::exception& e) {
    throw IoError("exr: " + path.string() + ": " + e.what());
  }
}

}  // namespace

Frame read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".exr") return read_exr(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const std::filesystem::path& path, const Frame& frame, int png_bit_depth) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, frame, png_bit_depth);
  if (ext == ".exr") return write_exr(path, frame);
  throw IoError("unsupported image format: " + path.string());
}

std::vector<std::uint8_t> encode_png(const Frame& frame, int bit_depth) {
  std::vector<std::uint8_t> out;
  PngWrite wr;
  png_set_write_fn(
      wr.png, &out,
      [](png_structp png, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
        buf->insert(buf->end(), data, data + n);
      },
      [](png_structp) {});
  write_png_stream(wr.png, wr.info, frame, bit_depth);
  return out;
}

Frame decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG buffer");
  MemoryReader reader{&bytes, 0};
  PngRead r;
  png_set_read_fn(r.png, &reader, [](png_structp png, png_bytep out, png_size_t n) {
    auto* rd = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (rd->offset + n > rd->bytes->size()) png_error(png, "truncated buffer");
    std::memcpy(out, rd->bytes->data() + rd->offset, n);
    rd->offset += n;
  });
  return read_png_stream(r.png, r.info);
}

FieldMap read_exr_field(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  try {
    Imf::InputFile file(path.c_str());
    const Imath::Box2i dw = file.header().dataWindow();
    const int w = dw.max.x - dw.min.x + 1;
    const int h = dw.max.y - dw.min.y + 1;
    const auto& channels = file.header().channels();
    const char* name = channels.findChannel("Y") ? "Y" : channels.findChannel("R") ? "R" : nullptr;
    if (!name) throw IoError("exr: " + path.string() + ": no Y or R channel");
    FieldMap f(h, w);
    Imf::FrameBuffer fb;
    fb.insert(name, Imf::Slice(Imf::FLOAT, reinterpret_cast<char*>(f.data() - dw.min.x - std::ptrdiff_t(dw.min.y) * w),
                               sizeof(float), sizeof(float) * std::size_t(w)));
    file.setFrameBuffer(fb);
    file.readPixels(dw.min.y, dw.max.y);
    return f;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("exr: " + path.string() + ": " + e.what());
  }
}

void write_exr_field(const std::filesystem::path& path, const FieldMap& field) {
  const auto w = static_cast<int>(field.cols());
  const auto h = static_cast<int>(field.rows());
  try {
    Imf::Header header(w, h);
    header.channels().insert("Y", Imf::Channel(Imf::FLOAT));
    Imf::OutputFile file(path.c_str(), header);
    Imf::FrameBuffer fb;
    fb.insert("Y", Imf::Slice(Imf::FLOAT, const_cast<char*>(reinterpret_cast<const char*>(field.data())), sizeof(float),
                              sizeof(float) * std::size_t(w)));
    file.setFrameBuffer(fb);
    file.writePixels(h);
  } catch (const std::exception& e) {
    throw IoError("exr: " + path.string() + ": " + e.what());
  }
}

void write_png_field(const std::filesystem::path& path, const FieldMap& field, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("write_png_field: need hi > lo");
  FieldMap scaled = ((field.cast<double>() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0).cast<float>();
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path.string());
  PngWrite wr;
  png_init_io(wr.png, f.get());
  write_png_stream(wr.png, wr.info, Frame::gray(scaled), 16);
}

}  // namespace fovnoise
