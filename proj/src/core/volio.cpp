#include "core/volio.hpp"
#include "core/error.hpp"
#include <zlib.h>
#include <cstdio>
#include <cstring>
#include <vector>

namespace vf {
namespace {

void write_exact(std::FILE* f, const void* p, size_t n, const std::string& path) {
    VF_CHECK(std::fwrite(p, 1, n, f) == n, "short write to " << path);
}

void read_exact(std::FILE* f, void* p, size_t n, const std::string& path) {
    VF_CHECK(std::fread(p, 1, n, f) == n, "short read from " << path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

void write_ufv(const std::string& path, const Tensor& vol, int dtype) {
    VF_CHECK(vol.ndim() == 4, "write_ufv expects (C,D,H,W), got ndim=" << vol.ndim());
    VF_CHECK(dtype == 0 || dtype == 1, "write_ufv: dtype must be 0 (f32) or 1 (f64)");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    VF_CHECK(f, "cannot open " << path << " for writing");
    write_exact(f, "UFV1", 4, path);
    int32_t hdr[5] = {static_cast<int32_t>(dtype),
                      static_cast<int32_t>(vol.dim(0)), static_cast<int32_t>(vol.dim(1)),
                      static_cast<int32_t>(vol.dim(2)), static_cast<int32_t>(vol.dim(3))};
    write_exact(f, hdr, sizeof(hdr), path);
    if (dtype == 0) {
        std::vector<float> buf(static_cast<size_t>(vol.numel()));
        for (int64_t i = 0; i < vol.numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(vol[i]);
        write_exact(f, buf.data(), buf.size() * sizeof(float), path);
    } else {
        write_exact(f, vol.data(), static_cast<size_t>(vol.numel()) * sizeof(double), path);
    }
    std::fclose(f);
}

Tensor read_ufv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    VF_CHECK(f, "cannot open " << path);
    char magic[4];
    read_exact(f, magic, 4, path);
    VF_CHECK(std::memcmp(magic, "UFV1", 4) == 0, path << ": bad magic");
    int32_t hdr[5];
    read_exact(f, hdr, sizeof(hdr), path);
    int dtype = hdr[0];
    VF_CHECK(dtype == 0 || dtype == 1, path << ": unsupported dtype " << dtype);
    for (int i = 1; i < 5; ++i) VF_CHECK(hdr[i] > 0, path << ": nonpositive dimension");
    Tensor out({hdr[1], hdr[2], hdr[3], hdr[4]});
    if (dtype == 0) {
        std::vector<float> buf(static_cast<size_t>(out.numel()));
        read_exact(f, buf.data(), buf.size() * sizeof(float), path);
        for (int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<double>(buf[static_cast<size_t>(i)]);
    } else {
        read_exact(f, out.data(), static_cast<size_t>(out.numel()) * sizeof(double), path);
    }
    std::fclose(f);
    return out;
}

// ---------------------------------------------------------------- NIfTI-1

namespace {

#pragma pack(push, 1)
struct NiftiHeader {
    int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    int32_t extents;
    int16_t session_error;
    char regular;
    char dim_info;
    int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    int16_t intent_code;
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

void gz_read_exact(gzFile f, void* p, size_t n, const std::string& path) {
    VF_CHECK(gzread(f, p, static_cast<unsigned>(n)) == static_cast<int>(n), "short read from " << path);
}

} // namespace

VolumeFile read_nifti(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    VF_CHECK(f, "cannot open " << path);
    NiftiHeader h;
    gz_read_exact(f, &h, sizeof(h), path);
    VF_CHECK(h.sizeof_hdr == 348, path << ": not a NIfTI-1 file (sizeof_hdr=" << h.sizeof_hdr << ")");
    VF_CHECK(std::memcmp(h.magic, "n+1", 3) == 0 || std::memcmp(h.magic, "ni1", 3) == 0,
             path << ": bad NIfTI magic");
    int nd = h.dim[0];
    VF_CHECK(nd >= 3 && nd <= 4, path << ": expected 3D or 4D volume, dim[0]=" << nd);
    int64_t nx = h.dim[1], ny = h.dim[2], nz = h.dim[3];
    int64_t nc = (nd == 4) ? std::max<int64_t>(1, h.dim[4]) : 1;
    VF_CHECK(nx > 0 && ny > 0 && nz > 0, path << ": bad dims");
    int64_t nvox = nx * ny * nz * nc;

    int64_t offset = static_cast<int64_t>(h.vox_offset);
    VF_CHECK(offset >= 348, path << ": vox_offset too small");
    std::vector<char> skip(static_cast<size_t>(offset - 348));
    if (!skip.empty()) gz_read_exact(f, skip.data(), skip.size(), path);

    double slope = (h.scl_slope == 0.0f) ? 1.0 : static_cast<double>(h.scl_slope);
    double inter = static_cast<double>(h.scl_inter);

    std::vector<double> raw(static_cast<size_t>(nvox));
    switch (h.datatype) {
    case 2: { // uint8
        std::vector<uint8_t> buf(static_cast<size_t>(nvox));
        gz_read_exact(f, buf.data(), buf.size(), path);
        for (int64_t i = 0; i < nvox; ++i) raw[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)];
        break;
    }
    case 4: { // int16
        std::vector<int16_t> buf(static_cast<size_t>(nvox));
        gz_read_exact(f, buf.data(), buf.size() * 2, path);
        for (int64_t i = 0; i < nvox; ++i) raw[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)];
        break;
    }
    case 16: { // float32
        std::vector<float> buf(static_cast<size_t>(nvox));
        gz_read_exact(f, buf.data(), buf.size() * 4, path);
        for (int64_t i = 0; i < nvox; ++i) raw[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)];
        break;
    }
    case 64: { // float64
        gz_read_exact(f, raw.data(), raw.size() * 8, path);
        break;
    }
    default:
        gzclose(f);
        VF_FAIL(path << ": unsupported NIfTI datatype " << h.datatype);
    }
    gzclose(f);

    VolumeFile out;
    out.data = Tensor({nc, nz, ny, nx});
    // NIfTI stores x fastest, then y, z, then the 4th dimension.
    for (int64_t c = 0; c < nc; ++c)
        for (int64_t z = 0; z < nz; ++z)
            for (int64_t y = 0; y < ny; ++y)
                for (int64_t x = 0; x < nx; ++x)
                    out.data.at(c, z, y, x) =
                        slope * raw[static_cast<size_t>(x + nx * (y + ny * (z + nz * c)))] + inter;
    out.spacing = {static_cast<double>(h.pixdim[3]), static_cast<double>(h.pixdim[2]),
                   static_cast<double>(h.pixdim[1])};
    for (double& s : out.spacing)
        if (!(s > 0.0)) s = 1.0;
    return out;
}

void write_nifti(const std::string& path, const VolumeFile& vol) {
    VF_CHECK(vol.data.ndim() == 4, "write_nifti expects (C,D,H,W)");
    int64_t nc = vol.data.dim(0), nz = vol.data.dim(1), ny = vol.data.dim(2), nx = vol.data.dim(3);
    NiftiHeader h;
    std::memset(&h, 0, sizeof(h));
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = static_cast<int16_t>(nc > 1 ? 4 : 3);
    h.dim[1] = static_cast<int16_t>(nx);
    h.dim[2] = static_cast<int16_t>(ny);
    h.dim[3] = static_cast<int16_t>(nz);
    h.dim[4] = static_cast<int16_t>(nc > 1 ? nc : 1);
    for (int i = h.dim[0] + 1; i < 8; ++i) h.dim[i] = 1;
    h.datatype = 16;
    h.bitpix = 32;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(vol.spacing[2]);
    h.pixdim[2] = static_cast<float>(vol.spacing[1]);
    h.pixdim[3] = static_cast<float>(vol.spacing[0]);
    for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.sform_code = 1;
    h.srow_x[0] = h.pixdim[1];
    h.srow_y[1] = h.pixdim[2];
    h.srow_z[2] = h.pixdim[3];
    std::memcpy(h.magic, "n+1", 4);

    gzFile f = gzopen(path.c_str(), "wb");
    VF_CHECK(f, "cannot open " << path << " for writing");
    VF_CHECK(gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)), "short write to " << path);
    char pad[4] = {0, 0, 0, 0};
    VF_CHECK(gzwrite(f, pad, 4) == 4, "short write to " << path);
    std::vector<float> buf(static_cast<size_t>(vol.data.numel()));
    size_t idx = 0;
    for (int64_t c = 0; c < nc; ++c)
        for (int64_t z = 0; z < nz; ++z)
            for (int64_t y = 0; y < ny; ++y)
                for (int64_t x = 0; x < nx; ++x)
                    buf[idx++] = static_cast<float>(vol.data.at(c, z, y, x));
    VF_CHECK(gzwrite(f, buf.data(), static_cast<unsigned>(buf.size() * 4)) ==
                 static_cast<int>(buf.size() * 4),
             "short write to " << path);
    gzclose(f);
}

VolumeFile read_volume(const std::string& path) {
    if (ends_with(path, ".ufv")) {
        VolumeFile v;
        v.data = read_ufv(path);
        return v;
    }
    if (ends_with(path, ".nii") || ends_with(path, ".nii.gz")) return read_nifti(path);
    VF_FAIL("unknown volume extension on " << path << " (expected .ufv, .nii, .nii.gz)");
}

void write_volume(const std::string& path, const VolumeFile& vol) {
    if (ends_with(path, ".ufv")) {
        write_ufv(path, vol.data);
        return;
    }
    if (ends_with(path, ".nii") || ends_with(path, ".nii.gz")) {
        write_nifti(path, vol);
        return;
    }
    VF_FAIL("unknown volume extension on " << path << " (expected .ufv, .nii, .nii.gz)");
}

} // namespace vf
