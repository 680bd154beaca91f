#include "ad/ops.hpp"
#include "simd/kernels.hpp"
#include "vol/warp.hpp"
#include "vol/patch.hpp"
#include <cmath>

namespace vf::ad {
namespace {

// Output extent along one axis for stride-s convolution with padding p.
int64_t conv_out_dim(int64_t n, int64_t k, int64_t s, int64_t p) {
    return (n + 2 * p - k) / s + 1;
}

// Valid output range [lo, hi) along one axis for kernel offset ko:
// input index = out*s + ko - p must land in [0, n).
void valid_range(int64_t n_out, int64_t n_in, int64_t ko, int64_t s, int64_t p, int64_t& lo,
                 int64_t& hi) {
    int64_t shift = ko - p;
    lo = shift < 0 ? ((-shift) + s - 1) / s : 0;
    // out*s + shift <= n_in - 1
    hi = (n_in - 1 - shift) / s + 1;
    if (hi > n_out) hi = n_out;
    if (lo > hi) lo = hi;
}

struct ConvDims {
    int64_t Ci, D, H, W, Co, k, Do, Ho, Wo;
    int64_t s, p;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
    VF_CHECK(x.ndim() == 4 && w.ndim() == 5, "conv3d: bad ranks");
    ConvDims d;
    d.Ci = x.dim(0);
    d.D = x.dim(1);
    d.H = x.dim(2);
    d.W = x.dim(3);
    d.Co = w.dim(0);
    VF_CHECK(w.dim(1) == d.Ci, "conv3d: channel mismatch (x " << d.Ci << ", w " << w.dim(1) << ")");
    VF_CHECK(w.dim(2) == w.dim(3) && w.dim(3) == w.dim(4), "conv3d: kernel must be cubic");
    d.k = w.dim(2);
    d.s = stride;
    d.p = pad < 0 ? d.k / 2 : pad;
    d.Do = conv_out_dim(d.D, d.k, d.s, d.p);
    d.Ho = conv_out_dim(d.H, d.k, d.s, d.p);
    d.Wo = conv_out_dim(d.W, d.k, d.s, d.p);
    VF_CHECK(d.Do >= 1 && d.Ho >= 1 && d.Wo >= 1, "conv3d: output collapses to zero");
    return d;
}

// Unit-stride same-pad 3x3x3 case: fused nine-tap row sweeps (three source
// rows per kernel-z layer) instead of 27 axpy passes over the output.
bool fused3(const ConvDims& d) { return d.k == 3 && d.s == 1 && d.p == 1 && d.W >= 2; }

bool all_zero9(const double* w9) {
    for (int t = 0; t < 9; ++t)
        if (w9[t] != 0.0) return false;
    return true;
}

void conv_forward3(const ConvDims& d, const double* x, const double* w, double* out) {
    const auto& K = simd::active();
    int64_t sp = d.D * d.H * d.W;
    for (int64_t co = 0; co < d.Co; ++co) {
        double* oc = out + co * sp;
        for (int64_t ci = 0; ci < d.Ci; ++ci) {
            const double* xc = x + ci * sp;
            const double* wb = w + (co * d.Ci + ci) * 27;
            for (int64_t kz = 0; kz < 3; ++kz) {
                const double* w9 = wb + kz * 9;
                if (all_zero9(w9)) continue;
                int64_t zlo = kz == 0 ? 1 : 0;
                int64_t zhi = kz == 2 ? d.D - 1 : d.D;
                for (int64_t zo = zlo; zo < zhi; ++zo) {
                    const double* plane = xc + (zo + kz - 1) * d.H * d.W;
                    double* orow = oc + zo * d.H * d.W;
                    for (int64_t yo = 0; yo < d.H; ++yo) {
                        K.conv9_row(d.W, yo > 0 ? plane + (yo - 1) * d.W : nullptr,
                                    plane + yo * d.W,
                                    yo + 1 < d.H ? plane + (yo + 1) * d.W : nullptr,
                                    orow + yo * d.W, w9);
                    }
                }
            }
        }
    }
}

void conv_backward3(const ConvDims& d, const double* x, const double* w, const double* gout,
                    double* gx, double* gw) {
    const auto& K = simd::active();
    int64_t sp = d.D * d.H * d.W;
    for (int64_t co = 0; co < d.Co; ++co) {
        const double* gc = gout + co * sp;
        for (int64_t ci = 0; ci < d.Ci; ++ci) {
            const double* xc = x + ci * sp;
            double* gxc = gx ? gx + ci * sp : nullptr;
            const double* wb = w + (co * d.Ci + ci) * 27;
            double* gwb = gw ? gw + (co * d.Ci + ci) * 27 : nullptr;
            for (int64_t kz = 0; kz < 3; ++kz) {
                if (gwb) {
                    double taps[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
                    int64_t zlo = kz == 0 ? 1 : 0;
                    int64_t zhi = kz == 2 ? d.D - 1 : d.D;
                    for (int64_t zo = zlo; zo < zhi; ++zo) {
                        const double* plane = xc + (zo + kz - 1) * d.H * d.W;
                        const double* grow = gc + zo * d.H * d.W;
                        for (int64_t yo = 0; yo < d.H; ++yo) {
                            K.dot9_row(d.W, grow + yo * d.W,
                                       yo > 0 ? plane + (yo - 1) * d.W : nullptr,
                                       plane + yo * d.W,
                                       yo + 1 < d.H ? plane + (yo + 1) * d.W : nullptr, taps);
                        }
                    }
                    for (int t = 0; t < 9; ++t) gwb[kz * 9 + t] += taps[t];
                }
                if (gxc) {
                    // adjoint taps: gx[zi,yi,i] += w[kz,ky,kx] * g[zi+1-kz, yi+1-ky, i+1-kx]
                    double wrev[9];
                    for (int a = 0; a < 3; ++a)
                        for (int t = 0; t < 3; ++t)
                            wrev[3 * a + t] = wb[kz * 9 + (2 - a) * 3 + (2 - t)];
                    if (all_zero9(wrev)) continue;
                    for (int64_t zi = 0; zi < d.D; ++zi) {
                        int64_t zo = zi + 1 - kz;
                        if (zo < 0 || zo >= d.D) continue;
                        const double* gplane = gc + zo * d.H * d.W;
                        double* gxrow = gxc + zi * d.H * d.W;
                        for (int64_t yi = 0; yi < d.H; ++yi) {
                            K.conv9_row(d.W, yi > 0 ? gplane + (yi - 1) * d.W : nullptr,
                                        gplane + yi * d.W,
                                        yi + 1 < d.H ? gplane + (yi + 1) * d.W : nullptr,
                                        gxrow + yi * d.W, wrev);
                        }
                    }
                }
            }
        }
    }
}

void conv_forward(const ConvDims& d, const double* x, const double* w, const double* b,
                  double* out) {
    const auto& K = simd::active();
    int64_t osp = d.Do * d.Ho * d.Wo;
    int64_t isp = d.D * d.H * d.W;
    for (int64_t co = 0; co < d.Co; ++co) {
        double bv = b ? b[co] : 0.0;
        double* oc = out + co * osp;
        for (int64_t i = 0; i < osp; ++i) oc[i] = bv;
    }
    if (fused3(d)) {
        conv_forward3(d, x, w, out);
        return;
    }
    int64_t xlo, xhi;
    for (int64_t co = 0; co < d.Co; ++co) {
        double* oc = out + co * osp;
        for (int64_t ci = 0; ci < d.Ci; ++ci) {
            const double* xc = x + ci * isp;
            for (int64_t kz = 0; kz < d.k; ++kz)
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        double wv = w[(((co * d.Ci + ci) * d.k + kz) * d.k + ky) * d.k + kx];
                        if (wv == 0.0) continue;
                        valid_range(d.Wo, d.W, kx, d.s, d.p, xlo, xhi);
                        if (xlo >= xhi) continue;
                        int64_t zlo, zhi, ylo, yhi;
                        valid_range(d.Do, d.D, kz, d.s, d.p, zlo, zhi);
                        valid_range(d.Ho, d.H, ky, d.s, d.p, ylo, yhi);
                        for (int64_t zo = zlo; zo < zhi; ++zo) {
                            int64_t zi = zo * d.s + kz - d.p;
                            for (int64_t yo = ylo; yo < yhi; ++yo) {
                                int64_t yi = yo * d.s + ky - d.p;
                                const double* xrow = xc + (zi * d.H + yi) * d.W + (xlo * d.s + kx - d.p);
                                double* orow = oc + (zo * d.Ho + yo) * d.Wo + xlo;
                                if (d.s == 1)
                                    K.axpy(xhi - xlo, wv, xrow, orow);
                                else
                                    K.axpy_s2load(xhi - xlo, wv, xrow, orow);
                            }
                        }
                    }
        }
    }
}

void conv_backward(const ConvDims& d, const double* x, const double* w, const double* gout,
                   double* gx, double* gw, double* gb) {
    const auto& K = simd::active();
    int64_t osp = d.Do * d.Ho * d.Wo;
    int64_t isp = d.D * d.H * d.W;
    if (gb) {
        for (int64_t co = 0; co < d.Co; ++co) gb[co] += K.sum(osp, gout + co * osp);
    }
    if (!gx && !gw) return;
    if (fused3(d)) {
        conv_backward3(d, x, w, gout, gx, gw);
        return;
    }
    int64_t xlo, xhi;
    for (int64_t co = 0; co < d.Co; ++co) {
        const double* gc = gout + co * osp;
        for (int64_t ci = 0; ci < d.Ci; ++ci) {
            const double* xc = x + ci * isp;
            double* gxc = gx ? gx + ci * isp : nullptr;
            for (int64_t kz = 0; kz < d.k; ++kz)
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        int64_t widx = (((co * d.Ci + ci) * d.k + kz) * d.k + ky) * d.k + kx;
                        double wv = w[widx];
                        valid_range(d.Wo, d.W, kx, d.s, d.p, xlo, xhi);
                        if (xlo >= xhi) continue;
                        int64_t zlo, zhi, ylo, yhi;
                        valid_range(d.Do, d.D, kz, d.s, d.p, zlo, zhi);
                        valid_range(d.Ho, d.H, ky, d.s, d.p, ylo, yhi);
                        double gw_acc = 0.0;
                        for (int64_t zo = zlo; zo < zhi; ++zo) {
                            int64_t zi = zo * d.s + kz - d.p;
                            for (int64_t yo = ylo; yo < yhi; ++yo) {
                                int64_t yi = yo * d.s + ky - d.p;
                                int64_t xoff = (zi * d.H + yi) * d.W + (xlo * d.s + kx - d.p);
                                const double* grow = gc + (zo * d.Ho + yo) * d.Wo + xlo;
                                if (gw) {
                                    if (d.s == 1)
                                        gw_acc += K.dot(xhi - xlo, grow, xc + xoff);
                                    else
                                        gw_acc += K.dot_s2(xhi - xlo, grow, xc + xoff);
                                }
                                if (gxc && wv != 0.0) {
                                    if (d.s == 1)
                                        K.axpy(xhi - xlo, wv, grow, gxc + xoff);
                                    else
                                        K.axpy_s2store(xhi - xlo, wv, grow, gxc + xoff);
                                }
                            }
                        }
                        if (gw) gw[widx] += gw_acc;
                    }
        }
    }
}

} // namespace

Val conv3d(const Val& x, const Val& w, const Val& b, int stride, int pad) {
    VF_CHECK(stride == 1 || stride == 2, "conv3d: stride must be 1 or 2");
    ConvDims d = conv_dims(x->value, w->value, stride, pad);
    VF_CHECK(b->value.numel() == d.Co, "conv3d: bias mismatch");
    Tensor out({d.Co, d.Do, d.Ho, d.Wo});
    conv_forward(d, x->value.data(), w->value.data(), b->value.data(), out.data());
    return make_op({x, w, b}, std::move(out), [d](Node& n) {
        Node& xn = *n.inputs[0];
        Node& wn = *n.inputs[1];
        Node& bn = *n.inputs[2];
        conv_backward(d, xn.value.data(), wn.value.data(), n.grad.data(),
                      xn.requires_grad ? xn.ensure_grad().data() : nullptr,
                      wn.requires_grad ? wn.ensure_grad().data() : nullptr,
                      bn.requires_grad ? bn.ensure_grad().data() : nullptr);
    }, "conv3d");
}

Val conv3d_transpose2(const Val& x, const Val& w, const Val& b) {
    VF_CHECK(x->value.ndim() == 4 && w->value.ndim() == 5, "conv3d_transpose2: bad ranks");
    int64_t Ci = x->value.dim(0), D = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    VF_CHECK(w->value.dim(0) == Ci && w->value.dim(2) == 2 && w->value.dim(3) == 2 &&
                 w->value.dim(4) == 2,
             "conv3d_transpose2: weight must be (Ci,Co,2,2,2)");
    int64_t Co = w->value.dim(1);
    VF_CHECK(b->value.numel() == Co, "conv3d_transpose2: bias mismatch");
    int64_t Do = 2 * D, Ho = 2 * H, Wo = 2 * W;
    Tensor out({Co, Do, Ho, Wo});
    const auto& K = simd::active();
    int64_t osp = Do * Ho * Wo, isp = D * H * W;
    for (int64_t co = 0; co < Co; ++co) {
        double* oc = out.data() + co * osp;
        double bv = b->value[co];
        for (int64_t i = 0; i < osp; ++i) oc[i] = bv;
    }
    for (int64_t ci = 0; ci < Ci; ++ci) {
        const double* xc = x->value.data() + ci * isp;
        for (int64_t co = 0; co < Co; ++co) {
            double* oc = out.data() + co * osp;
            for (int64_t kz = 0; kz < 2; ++kz)
                for (int64_t ky = 0; ky < 2; ++ky)
                    for (int64_t kx = 0; kx < 2; ++kx) {
                        double wv = w->value[(((ci * Co + co) * 2 + kz) * 2 + ky) * 2 + kx];
                        if (wv == 0.0) continue;
                        for (int64_t z = 0; z < D; ++z)
                            for (int64_t y = 0; y < H; ++y) {
                                const double* xrow = xc + (z * H + y) * W;
                                double* orow = oc + ((2 * z + kz) * Ho + (2 * y + ky)) * Wo + kx;
                                K.axpy_s2store(W, wv, xrow, orow);
                            }
                    }
        }
    }
    return make_op({x, w, b}, std::move(out), [Ci, Co, D, H, W, Ho, Wo](Node& n) {
        const auto& K = simd::active();
        Node& xn = *n.inputs[0];
        Node& wn = *n.inputs[1];
        Node& bn = *n.inputs[2];
        int64_t osp = 2 * D * Ho * Wo, isp = D * H * W;
        if (bn.requires_grad) {
            Tensor& gb = bn.ensure_grad();
            for (int64_t co = 0; co < Co; ++co) gb[co] += K.sum(osp, n.grad.data() + co * osp);
        }
        bool wx = xn.requires_grad, ww = wn.requires_grad;
        if (!wx && !ww) return;
        Tensor* gx = wx ? &xn.ensure_grad() : nullptr;
        Tensor* gw = ww ? &wn.ensure_grad() : nullptr;
        for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xc = xn.value.data() + ci * isp;
            double* gxc = gx ? gx->data() + ci * isp : nullptr;
            for (int64_t co = 0; co < Co; ++co) {
                const double* gc = n.grad.data() + co * osp;
                for (int64_t kz = 0; kz < 2; ++kz)
                    for (int64_t ky = 0; ky < 2; ++ky)
                        for (int64_t kx = 0; kx < 2; ++kx) {
                            int64_t widx = (((ci * Co + co) * 2 + kz) * 2 + ky) * 2 + kx;
                            double wv = wn.value[widx];
                            double acc = 0.0;
                            for (int64_t z = 0; z < D; ++z)
                                for (int64_t y = 0; y < H; ++y) {
                                    const double* grow =
                                        gc + ((2 * z + kz) * Ho + (2 * y + ky)) * Wo + kx;
                                    int64_t xoff = (z * H + y) * W;
                                    if (gxc) K.axpy_s2load(W, wv, grow, gxc + xoff);
                                    if (gw) acc += K.dot_s2(W, xc + xoff, grow);
                                }
                            if (gw) gw->data()[widx] += acc;
                        }
            }
        }
    }, "conv3d_transpose2");
}

// -------------------------------------------------------------- up/down scale

namespace {

// One axis of factor-2 trilinear upsampling (half-voxel-centre convention):
// out[2i]   = 0.25*in[clamp(i-1)] + 0.75*in[i]
// out[2i+1] = 0.75*in[i]          + 0.25*in[clamp(i+1)]
void upsample_axis(const double* src, double* dst, int64_t n_pre, int64_t n, int64_t n_post) {
    for (int64_t a = 0; a < n_pre; ++a)
        for (int64_t b = 0; b < n_post; ++b) {
            const double* s = src + (a * n) * n_post + b;
            double* d = dst + (a * 2 * n) * n_post + b;
            for (int64_t i = 0; i < n; ++i) {
                double lo = s[(i > 0 ? i - 1 : 0) * n_post];
                double mid = s[i * n_post];
                double hi = s[(i < n - 1 ? i + 1 : n - 1) * n_post];
                d[(2 * i) * n_post] = 0.25 * lo + 0.75 * mid;
                d[(2 * i + 1) * n_post] = 0.75 * mid + 0.25 * hi;
            }
        }
}

void upsample_axis_adjoint(const double* gdst, double* gsrc, int64_t n_pre, int64_t n,
                           int64_t n_post) {
    for (int64_t a = 0; a < n_pre; ++a)
        for (int64_t b = 0; b < n_post; ++b) {
            const double* gd = gdst + (a * 2 * n) * n_post + b;
            double* gs = gsrc + (a * n) * n_post + b;
            for (int64_t i = 0; i < n; ++i) {
                double g0 = gd[(2 * i) * n_post];
                double g1 = gd[(2 * i + 1) * n_post];
                gs[(i > 0 ? i - 1 : 0) * n_post] += 0.25 * g0;
                gs[i * n_post] += 0.75 * g0 + 0.75 * g1;
                gs[(i < n - 1 ? i + 1 : n - 1) * n_post] += 0.25 * g1;
            }
        }
}

} // namespace

Val upsample2_trilinear(const Val& x) {
    VF_CHECK(x->value.ndim() == 4, "upsample2 expects (C,D,H,W)");
    int64_t C = x->value.dim(0), D = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    Tensor t1({C, 2 * D, H, W});
    upsample_axis(x->value.data(), t1.data(), C, D, H * W);
    Tensor t2({C, 2 * D, 2 * H, W});
    upsample_axis(t1.data(), t2.data(), C * 2 * D, H, W);
    Tensor out({C, 2 * D, 2 * H, 2 * W});
    upsample_axis(t2.data(), out.data(), C * 2 * D * 2 * H, W, 1);
    return make_op({x}, std::move(out), [C, D, H, W](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor g2({C, 2 * D, 2 * H, W});
        upsample_axis_adjoint(n.grad.data(), g2.data(), C * 2 * D * 2 * H, W, 1);
        Tensor g1({C, 2 * D, H, W});
        upsample_axis_adjoint(g2.data(), g1.data(), C * 2 * D, H, W);
        Tensor g0({C, D, H, W});
        upsample_axis_adjoint(g1.data(), g0.data(), C, D, H * W);
        accumulate(*n.inputs[0], g0);
    }, "upsample2");
}

Val avgpool(const Val& x, int factor) {
    VF_CHECK(x->value.ndim() == 4 && factor >= 1, "avgpool: bad args");
    int64_t C = x->value.dim(0), D = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    VF_CHECK(D % factor == 0 && H % factor == 0 && W % factor == 0, "avgpool: dims not divisible");
    int64_t Do = D / factor, Ho = H / factor, Wo = W / factor;
    double inv = 1.0 / (static_cast<double>(factor) * factor * factor);
    Tensor out({C, Do, Ho, Wo});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t z = 0; z < D; ++z)
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x2 = 0; x2 < W; ++x2)
                    out.at(c, z / factor, y / factor, x2 / factor) +=
                        x->value.at(c, z, y, x2) * inv;
    return make_op({x}, std::move(out), [C, D, H, W, factor, inv](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.inputs[0]->ensure_grad();
        Tensor gt = g; // accumulate into a copy to keep at() indexing simple
        for (int64_t c = 0; c < C; ++c)
            for (int64_t z = 0; z < D; ++z)
                for (int64_t y = 0; y < H; ++y)
                    for (int64_t x2 = 0; x2 < W; ++x2)
                        gt.at(c, z, y, x2) += n.grad.at(c, z / factor, y / factor, x2 / factor) * inv;
        g = std::move(gt);
    }, "avgpool");
}

// --------------------------------------------------------------- warp & grad

Val warp(const Val& v, const Val& phi) {
    Tensor out = vol::warp_forward(v->value, phi->value);
    return make_op({v, phi}, std::move(out), [](Node& n) {
        Node& vn = *n.inputs[0];
        Node& pn = *n.inputs[1];
        bool wv = vn.requires_grad, wp = pn.requires_grad;
        if (!wv && !wp) return;
        vol::warp_backward(vn.value, pn.value, n.grad, wv ? &vn.ensure_grad() : nullptr,
                           wp ? &pn.ensure_grad() : nullptr);
    }, "warp");
}

namespace {

// Per-axis finite-difference stencil: central interior, one-sided borders.
void grad_axis(const double* src, double* dst, int64_t n_pre, int64_t n, int64_t n_post) {
    for (int64_t a = 0; a < n_pre; ++a)
        for (int64_t b = 0; b < n_post; ++b) {
            const double* s = src + (a * n) * n_post + b;
            double* d = dst + (a * n) * n_post + b;
            if (n == 1) {
                d[0] = 0.0;
                continue;
            }
            d[0] = s[n_post] - s[0];
            for (int64_t i = 1; i < n - 1; ++i)
                d[i * n_post] = 0.5 * (s[(i + 1) * n_post] - s[(i - 1) * n_post]);
            d[(n - 1) * n_post] = s[(n - 1) * n_post] - s[(n - 2) * n_post];
        }
}

void grad_axis_adjoint(const double* gdst, double* gsrc, int64_t n_pre, int64_t n, int64_t n_post) {
    for (int64_t a = 0; a < n_pre; ++a)
        for (int64_t b = 0; b < n_post; ++b) {
            const double* gd = gdst + (a * n) * n_post + b;
            double* gs = gsrc + (a * n) * n_post + b;
            if (n == 1) continue;
            gs[n_post] += gd[0];
            gs[0] -= gd[0];
            for (int64_t i = 1; i < n - 1; ++i) {
                gs[(i + 1) * n_post] += 0.5 * gd[i * n_post];
                gs[(i - 1) * n_post] -= 0.5 * gd[i * n_post];
            }
            gs[(n - 1) * n_post] += gd[(n - 1) * n_post];
            gs[(n - 2) * n_post] -= gd[(n - 1) * n_post];
        }
}

} // namespace

Val spatial_gradient(const Val& v) {
    VF_CHECK(v->value.ndim() == 4, "spatial_gradient expects (C,D,H,W)");
    int64_t C = v->value.dim(0), D = v->value.dim(1), H = v->value.dim(2), W = v->value.dim(3);
    int64_t sp = D * H * W;
    Tensor out({3 * C, D, H, W});
    for (int64_t c = 0; c < C; ++c) {
        const double* src = v->value.data() + c * sp;
        grad_axis(src, out.data() + (3 * c + 0) * sp, 1, D, H * W); // d/dz
        grad_axis(src, out.data() + (3 * c + 1) * sp, D, H, W);    // d/dy
        grad_axis(src, out.data() + (3 * c + 2) * sp, D * H, W, 1); // d/dx
    }
    return make_op({v}, std::move(out), [C, D, H, W, sp](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.inputs[0]->ensure_grad();
        for (int64_t c = 0; c < C; ++c) {
            double* gs = g.data() + c * sp;
            grad_axis_adjoint(n.grad.data() + (3 * c + 0) * sp, gs, 1, D, H * W);
            grad_axis_adjoint(n.grad.data() + (3 * c + 1) * sp, gs, D, H, W);
            grad_axis_adjoint(n.grad.data() + (3 * c + 2) * sp, gs, D * H, W, 1);
        }
    }, "spatial_gradient");
}

// ------------------------------------------------------------------- patches

Val patch_rows(const Val& x, int Q) {
    Tensor out = vol::patch_rows_forward(x->value, Q);
    int64_t C = x->value.dim(0), D = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    return make_op({x}, std::move(out), [Q, C, D, H, W](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        accumulate(*n.inputs[0], vol::patch_rows_inverse(n.grad, Q, C, D, H, W));
    }, "patch_rows");
}

Val rows_to_patches(const Val& x, int Q, int64_t C, int64_t D, int64_t H, int64_t W) {
    Tensor out = vol::patch_rows_inverse(x->value, Q, C, D, H, W);
    return make_op({x}, std::move(out), [Q](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        accumulate(*n.inputs[0], vol::patch_rows_forward(n.grad, Q));
    }, "rows_to_patches");
}

} // namespace vf::ad
