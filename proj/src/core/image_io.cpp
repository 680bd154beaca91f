#include "core/image_io.hpp"
#include "core/error.hpp"
#include <png.h>
#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vf {
namespace {

uint8_t to_byte(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<uint8_t>(std::lround(v * 255.0));
}

void ycrcb_to_rgb(double y, double cr, double cb, double& r, double& g, double& b) {
    r = y + 1.402 * (cr - 0.5);
    g = y - 0.714136 * (cr - 0.5) - 0.344136 * (cb - 0.5);
    b = y + 1.772 * (cb - 0.5);
}

} // namespace

void write_png_rgb(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb) {
    VF_CHECK(static_cast<size_t>(width) * height * 3 == rgb.size(), "write_png_rgb: buffer size mismatch");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    VF_CHECK(f, "cannot open " << path << " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    VF_CHECK(png, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    VF_CHECK(info, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        VF_FAIL("libpng error while writing " << path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int row = 0; row < height; ++row)
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<size_t>(row) * width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

void save_slice_montage(const std::string& path, const Tensor& vol, int n_slices) {
    VF_CHECK(vol.ndim() == 4, "save_slice_montage expects (C,D,H,W)");
    int64_t C = vol.dim(0), D = vol.dim(1), H = vol.dim(2), W = vol.dim(3);
    VF_CHECK(C == 1 || C == 3, "montage supports 1 or 3 channels, got " << C);
    n_slices = static_cast<int>(std::min<int64_t>(n_slices, D));
    VF_CHECK(n_slices >= 1, "need at least one slice");
    int width = static_cast<int>(W) * n_slices;
    int height = static_cast<int>(H);
    std::vector<uint8_t> rgb(static_cast<size_t>(width) * height * 3, 0);
    for (int s = 0; s < n_slices; ++s) {
        int64_t z = (n_slices == 1) ? D / 2 : static_cast<int64_t>(s) * (D - 1) / (n_slices - 1);
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) {
                double r, g, b;
                if (C == 1) {
                    r = g = b = vol.at(0, z, y, x);
                } else {
                    ycrcb_to_rgb(vol.at(0, z, y, x), vol.at(1, z, y, x), vol.at(2, z, y, x), r, g, b);
                }
                size_t o = (static_cast<size_t>(y) * width + static_cast<size_t>(s) * W + x) * 3;
                rgb[o] = to_byte(r);
                rgb[o + 1] = to_byte(g);
                rgb[o + 2] = to_byte(b);
            }
        }
    }
    write_png_rgb(path, width, height, rgb);
}

} // namespace vf
