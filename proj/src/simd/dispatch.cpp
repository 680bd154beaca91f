#include "simd/kernels.hpp"
#include "core/error.hpp"
#include <cstdlib>
#include <cstring>
#include <string>

namespace vf::simd {
namespace {

const Kernels* g_active = nullptr;

const Kernels* pick_default() {
    if (const char* env = std::getenv("VOXFUSE_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
        if (std::strcmp(env, "avx2") == 0) {
            VF_CHECK(avx2_supported(), "VOXFUSE_KERNELS=avx2 but cpu lacks avx2+fma");
            return &avx2_kernels();
        }
        VF_FAIL("unknown VOXFUSE_KERNELS value '" << env << "' (expected scalar or avx2)");
    }
    return avx2_supported() ? &avx2_kernels() : &scalar_kernels();
}

} // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& active() {
    if (!g_active) g_active = pick_default();
    return *g_active;
}

void force_backend(const char* name) {
    if (!name) {
        g_active = pick_default();
        return;
    }
    if (std::strcmp(name, "scalar") == 0) {
        g_active = &scalar_kernels();
    } else if (std::strcmp(name, "avx2") == 0) {
        VF_CHECK(avx2_supported(), "avx2 backend requested but cpu lacks avx2+fma");
        g_active = &avx2_kernels();
    } else {
        VF_FAIL("unknown kernel backend '" << name << "'");
    }
}

} // namespace vf::simd
