#include "amdnet/image_io.hpp"

#include <algorithm>
#include <cstdio>
#include <csetjmp>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "amdnet/errors.hpp"

namespace amdnet {

bool is_supported_image(const std::string& filename) {
    const auto dot = filename.find_last_of('.');
    if (dot == std::string::npos) return false;
    std::string ext = filename.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == "png" || ext == "jpg" || ext == "jpeg";
}

namespace {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

ImageU8 read_png_file(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: failed to decode " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: unexpected channel count in " + path);
    }

    ImageU8 img = ImageU8::make(w, h, 3, ColorSpace::Rgb);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        rows[static_cast<std::size_t>(y)] = img.data.data() + static_cast<std::size_t>(y) * w * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

ImageU8 read_jpeg_file(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("jpeg: failed to decode " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    ImageU8 img = ImageU8::make(w, h, 3, ColorSpace::Rgb);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw IoError("cannot open image: " + path);

    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, fc.f) != 2) throw IoError("cannot read image: " + path);
    std::rewind(fc.f);

    if (magic[0] == 0x89 && magic[1] == 'P') return read_png_file(fc.f, path);
    if (magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg_file(fc.f, path);
    throw IoError("unsupported image format: " + path);
}

void write_png(const ImageU8& img, const std::string& path) {
    validate_image(img);
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw IoError("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to write " + path);
    }
    png_init_io(png, fc.f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_const_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            img.data.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    }
    png_write_rows(png, const_cast<png_bytepp>(rows.data()),
                   static_cast<png_uint_32>(img.height));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace amdnet
