#include "ad/ops.hpp"
#include "simd/kernels.hpp"
#include "simd/linalg.hpp"
#include <cmath>

namespace vf::ad {
namespace {

const double kInvSqrt2 = 0.70710678118654752440;
const double kInvSqrt2Pi = 0.39894228040143267794;

bool wants(const Val& v) { return v->requires_grad; }

} // namespace

Val make_op(std::vector<Val> inputs, Tensor value, std::function<void(Node&)> backprop,
            const char* name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    n->name = name;
    for (auto& in : n->inputs)
        if (in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

// ---------------------------------------------------------------- elementwise

Val add(const Val& a, const Val& b) {
    VF_CHECK(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor out(a->value.shape());
    simd::active().add(out.numel(), a->value.data(), b->value.data(), out.data());
    return make_op({a, b}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) accumulate(*n.inputs[0], n.grad);
        if (wants(n.inputs[1])) accumulate(*n.inputs[1], n.grad);
    }, "add");
}

Val sub(const Val& a, const Val& b) {
    VF_CHECK(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor out = vf::sub(a->value, b->value);
    return make_op({a, b}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) accumulate(*n.inputs[0], n.grad);
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            simd::active().axpy(n.grad.numel(), -1.0, n.grad.data(), g.data());
        }
    }, "sub");
}

Val mul(const Val& a, const Val& b) {
    VF_CHECK(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor out(a->value.shape());
    simd::active().mul(out.numel(), a->value.data(), b->value.data(), out.data());
    return make_op({a, b}, std::move(out), [](Node& n) {
        const Tensor& av = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        if (wants(n.inputs[0]))
            simd::active().fmadd(n.grad.numel(), n.grad.data(), bv.data(),
                                 n.inputs[0]->ensure_grad().data());
        if (wants(n.inputs[1]))
            simd::active().fmadd(n.grad.numel(), n.grad.data(), av.data(),
                                 n.inputs[1]->ensure_grad().data());
    }, "mul");
}

Val divv(const Val& a, const Val& b) {
    VF_CHECK(a->value.same_shape(b->value), "div: shape mismatch");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] / b->value[i];
    return make_op({a, b}, std::move(out), [](Node& n) {
        const Tensor& av = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] / bv[i];
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] -= n.grad[i] * av[i] / (bv[i] * bv[i]);
        }
    }, "div");
}

Val add_scalar(const Val& a, double c) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + c;
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) accumulate(*n.inputs[0], n.grad);
    }, "add_scalar");
}

Val mul_scalar(const Val& a, double c) {
    Tensor out = vf::scaled(a->value, c);
    return make_op({a}, std::move(out), [c](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::active().axpy(n.grad.numel(), c, n.grad.data(), g.data());
        }
    }, "mul_scalar");
}

Val mul_scalarval(const Val& a, const Val& s) {
    VF_CHECK(s->value.numel() == 1, "mul_scalarval: s must be scalar");
    Tensor out = vf::scaled(a->value, s->value[0]);
    return make_op({a, s}, std::move(out), [](Node& n) {
        double sv = n.inputs[1]->value[0];
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::active().axpy(n.grad.numel(), sv, n.grad.data(), g.data());
        }
        if (wants(n.inputs[1]))
            n.inputs[1]->ensure_grad()[0] += dot_flat(n.grad, n.inputs[0]->value);
    }, "mul_scalarval");
}

Val neg(const Val& a) { return mul_scalar(a, -1.0); }

Val vexp(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::exp(a->value[i]);
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0]))
            simd::active().fmadd(n.grad.numel(), n.grad.data(), n.value.data(),
                                 n.inputs[0]->ensure_grad().data());
    }, "exp");
}

Val vlog(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        VF_CHECK(a->value[i] > 0.0, "log of nonpositive value");
        out[i] = std::log(a->value[i]);
    }
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] / n.inputs[0]->value[i];
        }
    }, "log");
}

Val vsqrt(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        VF_CHECK(a->value[i] >= 0.0, "sqrt of negative value");
        out[i] = std::sqrt(a->value[i]);
    }
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] += n.grad[i] * 0.5 / std::max(n.value[i], 1e-300);
        }
    }, "sqrt");
}

Val vabs(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(a->value[i]);
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& x = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] += n.grad[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
        }
    }, "abs");
}

Val square(const Val& a) {
    Tensor out(a->value.shape());
    simd::active().mul(out.numel(), a->value.data(), a->value.data(), out.data());
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& x = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i) g[i] += 2.0 * n.grad[i] * x[i];
        }
    }, "square");
}

Val sigmoid(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
        }
    }, "sigmoid");
}

Val vtanh(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
        }
    }, "tanh");
}

Val relu(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] > 0.0 ? a->value[i] : 0.0;
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& x = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                if (x[i] > 0.0) g[i] += n.grad[i];
        }
    }, "relu");
}

Val gelu(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        double x = a->value[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& xv = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i) {
                double x = xv[i];
                double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                g[i] += n.grad[i] * (cdf + x * pdf);
            }
        }
    }, "gelu");
}

Val silu(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-a->value[i]));
        out[i] = a->value[i] * s;
    }
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& xv = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i) {
                double s = 1.0 / (1.0 + std::exp(-xv[i]));
                g[i] += n.grad[i] * s * (1.0 + xv[i] * (1.0 - s));
            }
        }
    }, "silu");
}

Val softplus(const Val& a) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        double x = a->value[i];
        out[i] = x > 30.0 ? x : std::log1p(std::exp(x));
    }
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            const Tensor& xv = n.inputs[0]->value;
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                g[i] += n.grad[i] / (1.0 + std::exp(-xv[i]));
        }
    }, "softplus");
}

Val maximum(const Val& a, const Val& b) {
    VF_CHECK(a->value.same_shape(b->value), "maximum: shape mismatch");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(a->value[i], b->value[i]);
    return make_op({a, b}, std::move(out), [](Node& n) {
        const Tensor& av = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        // ties route to the first argument
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                if (av[i] >= bv[i]) g[i] += n.grad[i];
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                if (bv[i] > av[i]) g[i] += n.grad[i];
        }
    }, "maximum");
}

// ---------------------------------------------------------------- reductions

Val sum_all(const Val& a) {
    Tensor out = Tensor::scalar(simd::active().sum(a->value.numel(), a->value.data()));
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            double gv = n.grad[0];
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += gv;
        }
    }, "sum_all");
}

Val mean_all(const Val& a) {
    VF_CHECK(a->value.numel() > 0, "mean_all of empty tensor");
    return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->value.numel()));
}

// ------------------------------------------------------- shape / data movement

Val reshape(const Val& a, std::vector<int64_t> shape) {
    Tensor out = a->value.reshaped(std::move(shape));
    return make_op({a}, std::move(out), [](Node& n) {
        if (wants(n.inputs[0]))
            accumulate(*n.inputs[0], n.grad.reshaped(n.inputs[0]->value.shape()));
    }, "reshape");
}

Val transpose2d(const Val& a) {
    VF_CHECK(a->value.ndim() == 2, "transpose2d expects 2D");
    int64_t N = a->value.dim(0), M = a->value.dim(1);
    Tensor out({M, N});
    for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < M; ++j) out.at(j, i) = a->value.at(i, j);
    return make_op({a}, std::move(out), [N, M](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t j = 0; j < M; ++j)
                for (int64_t i = 0; i < N; ++i) g.at(i, j) += n.grad.at(j, i);
        }
    }, "transpose2d");
}

Val concat_rows(const std::vector<Val>& parts) {
    VF_CHECK(!parts.empty(), "concat_rows: empty");
    int64_t M = parts[0]->value.dim(1), N = 0;
    for (auto& p : parts) {
        VF_CHECK(p->value.ndim() == 2 && p->value.dim(1) == M, "concat_rows: column mismatch");
        N += p->value.dim(0);
    }
    Tensor out({N, M});
    int64_t r = 0;
    for (auto& p : parts) {
        std::copy(p->value.data(), p->value.data() + p->value.numel(), out.data() + r * M);
        r += p->value.dim(0);
    }
    return make_op(parts, std::move(out), [M](Node& n) {
        int64_t r = 0;
        for (auto& in : n.inputs) {
            int64_t cnt = in->value.numel();
            if (wants(in)) {
                Tensor& g = in->ensure_grad();
                simd::active().axpy(cnt, 1.0, n.grad.data() + r * M, g.data());
            }
            r += in->value.dim(0);
        }
    }, "concat_rows");
}

Val slice_rows(const Val& a, int64_t r0, int64_t r1) {
    VF_CHECK(a->value.ndim() == 2 && 0 <= r0 && r0 < r1 && r1 <= a->value.dim(0),
             "slice_rows: bad range");
    int64_t M = a->value.dim(1);
    Tensor out({r1 - r0, M});
    std::copy(a->value.data() + r0 * M, a->value.data() + r1 * M, out.data());
    return make_op({a}, std::move(out), [r0, M](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::active().axpy(n.grad.numel(), 1.0, n.grad.data(), g.data() + r0 * M);
        }
    }, "slice_rows");
}

Val gather_rows(const Val& a, std::vector<int64_t> idx) {
    VF_CHECK(a->value.ndim() == 2, "gather_rows expects 2D");
    int64_t M = a->value.dim(1), N = a->value.dim(0);
    Tensor out({static_cast<int64_t>(idx.size()), M});
    for (size_t i = 0; i < idx.size(); ++i) {
        VF_CHECK(idx[i] >= 0 && idx[i] < N, "gather_rows: index out of range");
        std::copy(a->value.data() + idx[i] * M, a->value.data() + (idx[i] + 1) * M,
                  out.data() + static_cast<int64_t>(i) * M);
    }
    return make_op({a}, std::move(out), [idx = std::move(idx), M](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (size_t i = 0; i < idx.size(); ++i)
                simd::active().axpy(M, 1.0, n.grad.data() + static_cast<int64_t>(i) * M,
                                    g.data() + idx[i] * M);
        }
    }, "gather_rows");
}

Val gather_flat(const Val& a, std::vector<int64_t> idx) {
    Tensor out({static_cast<int64_t>(idx.size())});
    for (size_t i = 0; i < idx.size(); ++i) {
        VF_CHECK(idx[i] >= 0 && idx[i] < a->value.numel(), "gather_flat: index out of range");
        out[static_cast<int64_t>(i)] = a->value[idx[i]];
    }
    return make_op({a}, std::move(out), [idx = std::move(idx)](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (size_t i = 0; i < idx.size(); ++i) g[idx[i]] += n.grad[static_cast<int64_t>(i)];
        }
    }, "gather_flat");
}

Val slice_flat(const Val& a, int64_t offset, int64_t count) {
    VF_CHECK(offset >= 0 && count >= 0 && offset + count <= a->value.numel(),
             "slice_flat: bad range");
    Tensor out({count});
    std::copy(a->value.data() + offset, a->value.data() + offset + count, out.data());
    return make_op({a}, std::move(out), [offset](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::active().axpy(n.grad.numel(), 1.0, n.grad.data(), g.data() + offset);
        }
    }, "slice_flat");
}

Val concat_flat(const std::vector<Val>& parts) {
    VF_CHECK(!parts.empty(), "concat_flat: empty");
    int64_t total = 0;
    for (auto& p : parts) total += p->value.numel();
    Tensor out({total});
    int64_t o = 0;
    for (auto& p : parts) {
        std::copy(p->value.data(), p->value.data() + p->value.numel(), out.data() + o);
        o += p->value.numel();
    }
    return make_op(parts, std::move(out), [](Node& n) {
        int64_t o = 0;
        for (auto& in : n.inputs) {
            if (wants(in)) {
                Tensor& g = in->ensure_grad();
                simd::active().axpy(in->value.numel(), 1.0, n.grad.data() + o, g.data());
            }
            o += in->value.numel();
        }
    }, "concat_flat");
}

Val concat_ch(const Val& a, const Val& b) {
    VF_CHECK(a->value.ndim() == 4 && b->value.ndim() == 4, "concat_ch expects 4D");
    for (int i = 1; i < 4; ++i)
        VF_CHECK(a->value.dim(i) == b->value.dim(i), "concat_ch: spatial mismatch");
    int64_t Ca = a->value.dim(0), Cb = b->value.dim(0);
    Tensor out({Ca + Cb, a->value.dim(1), a->value.dim(2), a->value.dim(3)});
    std::copy(a->value.data(), a->value.data() + a->value.numel(), out.data());
    std::copy(b->value.data(), b->value.data() + b->value.numel(), out.data() + a->value.numel());
    return make_op({a, b}, std::move(out), [](Node& n) {
        int64_t na = n.inputs[0]->value.numel();
        if (wants(n.inputs[0]))
            simd::active().axpy(na, 1.0, n.grad.data(), n.inputs[0]->ensure_grad().data());
        if (wants(n.inputs[1]))
            simd::active().axpy(n.inputs[1]->value.numel(), 1.0, n.grad.data() + na,
                                n.inputs[1]->ensure_grad().data());
    }, "concat_ch");
}

Val slice_ch(const Val& a, int64_t c0, int64_t c1) {
    VF_CHECK(a->value.ndim() == 4 && 0 <= c0 && c0 < c1 && c1 <= a->value.dim(0),
             "slice_ch: bad range");
    int64_t sp = a->value.dim(1) * a->value.dim(2) * a->value.dim(3);
    Tensor out({c1 - c0, a->value.dim(1), a->value.dim(2), a->value.dim(3)});
    std::copy(a->value.data() + c0 * sp, a->value.data() + c1 * sp, out.data());
    return make_op({a}, std::move(out), [c0, sp](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::active().axpy(n.grad.numel(), 1.0, n.grad.data(), g.data() + c0 * sp);
        }
    }, "slice_ch");
}

// ---------------------------------------------------------------- broadcasts

Val mul_channel(const Val& x, const Val& s) {
    VF_CHECK(x->value.ndim() == 4 && s->value.numel() == x->value.dim(0),
             "mul_channel: shape mismatch");
    int64_t C = x->value.dim(0);
    int64_t sp = x->value.numel() / C;
    Tensor out(x->value.shape());
    for (int64_t c = 0; c < C; ++c) {
        const double* xd = x->value.data() + c * sp;
        double* od = out.data() + c * sp;
        double sv = s->value[c];
        for (int64_t i = 0; i < sp; ++i) od[i] = xd[i] * sv;
    }
    return make_op({x, s}, std::move(out), [C, sp](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t c = 0; c < C; ++c)
                simd::active().axpy(sp, n.inputs[1]->value[c], n.grad.data() + c * sp,
                                    g.data() + c * sp);
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t c = 0; c < C; ++c)
                g[c] += simd::active().dot(sp, n.grad.data() + c * sp,
                                           n.inputs[0]->value.data() + c * sp);
        }
    }, "mul_channel");
}

Val add_channel(const Val& x, const Val& b) {
    VF_CHECK(x->value.ndim() == 4 && b->value.numel() == x->value.dim(0),
             "add_channel: shape mismatch");
    int64_t C = x->value.dim(0);
    int64_t sp = x->value.numel() / C;
    Tensor out(x->value.shape());
    for (int64_t c = 0; c < C; ++c) {
        const double* xd = x->value.data() + c * sp;
        double* od = out.data() + c * sp;
        double bv = b->value[c];
        for (int64_t i = 0; i < sp; ++i) od[i] = xd[i] + bv;
    }
    return make_op({x, b}, std::move(out), [C, sp](Node& n) {
        if (wants(n.inputs[0])) accumulate(*n.inputs[0], n.grad);
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t c = 0; c < C; ++c)
                g[c] += simd::active().sum(sp, n.grad.data() + c * sp);
        }
    }, "add_channel");
}

Val scale_rows(const Val& x, const Val& s) {
    VF_CHECK(x->value.ndim() == 2 && s->value.numel() == x->value.dim(0),
             "scale_rows: shape mismatch");
    int64_t N = x->value.dim(0), K = x->value.dim(1);
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < N; ++i) {
        double sv = s->value[i];
        const double* xd = x->value.data() + i * K;
        double* od = out.data() + i * K;
        for (int64_t j = 0; j < K; ++j) od[j] = xd[j] * sv;
    }
    return make_op({x, s}, std::move(out), [N, K](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().axpy(K, n.inputs[1]->value[i], n.grad.data() + i * K,
                                    g.data() + i * K);
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                g[i] += simd::active().dot(K, n.grad.data() + i * K,
                                           n.inputs[0]->value.data() + i * K);
        }
    }, "scale_rows");
}

Val outer(const Val& a, const Val& b) {
    VF_CHECK(a->value.ndim() == 1 && b->value.ndim() == 1, "outer expects 1D inputs");
    int64_t N = a->value.numel(), S = b->value.numel();
    Tensor out({N, S});
    for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < S; ++j) out.at(i, j) = a->value[i] * b->value[j];
    return make_op({a, b}, std::move(out), [N, S](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                g[i] += simd::active().dot(S, n.grad.data() + i * S, n.inputs[1]->value.data());
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().axpy(S, n.inputs[0]->value[i], n.grad.data() + i * S, g.data());
        }
    }, "outer");
}

Val add_rowvec(const Val& x, const Val& b) {
    VF_CHECK(x->value.ndim() == 2 && b->value.numel() == x->value.dim(1),
             "add_rowvec: shape mismatch");
    int64_t N = x->value.dim(0), K = x->value.dim(1);
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < N; ++i)
        simd::active().add(K, x->value.data() + i * K, b->value.data(), out.data() + i * K);
    return make_op({x, b}, std::move(out), [N, K](Node& n) {
        if (wants(n.inputs[0])) accumulate(*n.inputs[0], n.grad);
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().axpy(K, 1.0, n.grad.data() + i * K, g.data());
        }
    }, "add_rowvec");
}

Val mul_rowvec(const Val& x, const Val& b) {
    VF_CHECK(x->value.ndim() == 2 && b->value.numel() == x->value.dim(1),
             "mul_rowvec: shape mismatch");
    int64_t N = x->value.dim(0), K = x->value.dim(1);
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < N; ++i)
        simd::active().mul(K, x->value.data() + i * K, b->value.data(), out.data() + i * K);
    return make_op({x, b}, std::move(out), [N, K](Node& n) {
        const Tensor& xv = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().fmadd(K, n.grad.data() + i * K, bv.data(), g.data() + i * K);
        }
        if (wants(n.inputs[1])) {
            Tensor& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().fmadd(K, n.grad.data() + i * K, xv.data() + i * K, g.data());
        }
    }, "mul_rowvec");
}

// ------------------------------------------------------------------- matrix

Val matmul(const Val& a, const Val& b) {
    VF_CHECK(a->value.ndim() == 2 && b->value.ndim() == 2 && a->value.dim(1) == b->value.dim(0),
             "matmul: shape mismatch");
    Tensor out = simd::matmul(a->value, b->value);
    return make_op({a, b}, std::move(out), [](Node& n) {
        const Tensor& av = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        if (wants(n.inputs[0])) {
            // gA = gY * B^T
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::gemm_bt(av.dim(0), bv.dim(1), av.dim(1), n.grad.data(), bv.data(), g.data());
        }
        if (wants(n.inputs[1])) {
            // gB = A^T * gY
            Tensor& g = n.inputs[1]->ensure_grad();
            simd::gemm_at(av.dim(1), av.dim(0), bv.dim(1), av.data(), n.grad.data(), g.data());
        }
    }, "matmul");
}

Val matmul_bt(const Val& a, const Val& b) {
    VF_CHECK(a->value.ndim() == 2 && b->value.ndim() == 2 && a->value.dim(1) == b->value.dim(1),
             "matmul_bt: shape mismatch");
    Tensor out = simd::matmul_bt(a->value, b->value);
    return make_op({a, b}, std::move(out), [](Node& n) {
        const Tensor& av = n.inputs[0]->value;
        const Tensor& bv = n.inputs[1]->value;
        if (wants(n.inputs[0])) {
            // gA = gY * B
            Tensor& g = n.inputs[0]->ensure_grad();
            simd::gemm(av.dim(0), bv.dim(0), av.dim(1), n.grad.data(), bv.data(), g.data());
        }
        if (wants(n.inputs[1])) {
            // gB = gY^T * A
            Tensor& g = n.inputs[1]->ensure_grad();
            simd::gemm_at(bv.dim(0), av.dim(0), av.dim(1), n.grad.data(), av.data(), g.data());
        }
    }, "matmul_bt");
}

Val linear(const Val& x, const Val& w, const Val& b) {
    VF_CHECK(x->value.ndim() == 2 && w->value.ndim() == 2 && x->value.dim(1) == w->value.dim(1),
             "linear: shape mismatch (x " << x->value.dim(1) << " vs w " << w->value.dim(1) << ")");
    VF_CHECK(b->value.numel() == w->value.dim(0), "linear: bias mismatch");
    return add_rowvec(matmul_bt(x, w), b);
}

Val softmax_rows(const Val& a) {
    VF_CHECK(a->value.ndim() == 2, "softmax_rows expects 2D");
    int64_t N = a->value.dim(0), M = a->value.dim(1);
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < N; ++i) {
        const double* xr = a->value.data() + i * M;
        double* yr = out.data() + i * M;
        double mx = xr[0];
        for (int64_t j = 1; j < M; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (int64_t j = 0; j < M; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        for (int64_t j = 0; j < M; ++j) yr[j] /= z;
    }
    return make_op({a}, std::move(out), [N, M](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i) {
                const double* yr = n.value.data() + i * M;
                const double* gr = n.grad.data() + i * M;
                double dotv = simd::active().dot(M, gr, yr);
                double* gx = g.data() + i * M;
                for (int64_t j = 0; j < M; ++j) gx[j] += yr[j] * (gr[j] - dotv);
            }
        }
    }, "softmax_rows");
}

Val l2norm_rows(const Val& a, double eps) {
    VF_CHECK(a->value.ndim() == 2, "l2norm_rows expects 2D");
    int64_t N = a->value.dim(0), M = a->value.dim(1);
    Tensor out(a->value.shape());
    Tensor norms({N});
    for (int64_t i = 0; i < N; ++i) {
        const double* xr = a->value.data() + i * M;
        double nrm = std::sqrt(simd::active().dot(M, xr, xr) + eps);
        norms[i] = nrm;
        double inv = 1.0 / nrm;
        for (int64_t j = 0; j < M; ++j) out.data()[i * M + j] = xr[j] * inv;
    }
    return make_op({a}, std::move(out), [N, M, norms = std::move(norms)](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i) {
                const double* yr = n.value.data() + i * M;   // x / ||x||
                const double* gr = n.grad.data() + i * M;
                double inv = 1.0 / norms[i];
                double dotv = simd::active().dot(M, gr, yr);
                double* gx = g.data() + i * M;
                for (int64_t j = 0; j < M; ++j) gx[j] += inv * (gr[j] - dotv * yr[j]);
            }
        }
    }, "l2norm_rows");
}

Val mean_rows(const Val& a) {
    VF_CHECK(a->value.ndim() == 2, "mean_rows expects 2D");
    int64_t N = a->value.dim(0), M = a->value.dim(1);
    Tensor out({M});
    for (int64_t i = 0; i < N; ++i)
        simd::active().axpy(M, 1.0 / static_cast<double>(N), a->value.data() + i * M, out.data());
    return make_op({a}, std::move(out), [N, M](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                simd::active().axpy(M, 1.0 / static_cast<double>(N), n.grad.data(),
                                    g.data() + i * M);
        }
    }, "mean_rows");
}

Val cross_entropy_logits(const Val& logits, std::vector<int64_t> targets) {
    VF_CHECK(logits->value.ndim() == 2, "cross_entropy_logits expects 2D");
    int64_t N = logits->value.dim(0), K = logits->value.dim(1);
    VF_CHECK(static_cast<int64_t>(targets.size()) == N, "cross_entropy_logits: target count");
    Tensor probs({N, K});
    double loss = 0.0;
    for (int64_t i = 0; i < N; ++i) {
        const double* xr = logits->value.data() + i * K;
        double* pr = probs.data() + i * K;
        double mx = xr[0];
        for (int64_t j = 1; j < K; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (int64_t j = 0; j < K; ++j) {
            pr[j] = std::exp(xr[j] - mx);
            z += pr[j];
        }
        for (int64_t j = 0; j < K; ++j) pr[j] /= z;
        int64_t t = targets[static_cast<size_t>(i)];
        VF_CHECK(t >= 0 && t < K, "cross_entropy_logits: bad target " << t);
        loss -= std::log(std::max(pr[t], 1e-300));
    }
    loss /= static_cast<double>(N);
    return make_op({logits}, Tensor::scalar(loss),
                   [N, K, targets = std::move(targets), probs = std::move(probs)](Node& n) {
        if (wants(n.inputs[0])) {
            Tensor& g = n.inputs[0]->ensure_grad();
            double gv = n.grad[0] / static_cast<double>(N);
            for (int64_t i = 0; i < N; ++i) {
                const double* pr = probs.data() + i * K;
                double* gx = g.data() + i * K;
                for (int64_t j = 0; j < K; ++j) gx[j] += gv * pr[j];
                gx[targets[static_cast<size_t>(i)]] -= gv;
            }
        }
    }, "cross_entropy_logits");
}

Val pick(const Val& a, int64_t flat_index) {
    VF_CHECK(flat_index >= 0 && flat_index < a->value.numel(), "pick: index out of range");
    return make_op({a}, Tensor::scalar(a->value[flat_index]), [flat_index](Node& n) {
        if (wants(n.inputs[0])) n.inputs[0]->ensure_grad()[flat_index] += n.grad[0];
    }, "pick");
}

// ------------------------------------------------------------ selective scan

Val scan_flat(const Val& abar, const Val& bbar, const Val& cmat, const Val& x, const Val& h) {
    VF_CHECK(x->value.ndim() == 2, "scan: x must be (N,M)");
    int64_t N = x->value.dim(0), M = x->value.dim(1);
    VF_CHECK(abar->value.ndim() == 2 && abar->value.dim(0) == N, "scan: abar must be (N,S)");
    int64_t S = abar->value.dim(1);
    VF_CHECK(bbar->value.ndim() == 2 && bbar->value.dim(0) == N && bbar->value.dim(1) == S * M,
             "scan: bbar must be (N,S*M)");
    VF_CHECK(cmat->value.ndim() == 2 && cmat->value.dim(0) == N && cmat->value.dim(1) == M * S,
             "scan: cmat must be (N,M*S)");
    bool has_h = static_cast<bool>(h);
    if (has_h)
        VF_CHECK(h->value.numel() == S, "scan: h must have length S, got " << h->value.numel());

    const auto& K = simd::active();
    Tensor out({N * M + S});
    Tensor states({N, S});
    std::vector<double> s(static_cast<size_t>(S), 0.0);
    std::vector<double> r(static_cast<size_t>(S), 0.0);
    for (int64_t i = 0; i < N; ++i) {
        const double* ar = abar->value.data() + i * S;
        const double* br = bbar->value.data() + i * S * M;
        const double* cr = cmat->value.data() + i * M * S;
        const double* xr = x->value.data() + i * M;
        for (int64_t a = 0; a < S; ++a)
            s[static_cast<size_t>(a)] = ar[a] * s[static_cast<size_t>(a)] + K.dot(M, br + a * M, xr);
        std::copy(s.begin(), s.end(), states.data() + i * S);
        if (has_h) {
            const double* hv = h->value.data();
            for (int64_t a = 0; a < S; ++a) r[static_cast<size_t>(a)] = s[static_cast<size_t>(a)] + ar[a] * hv[a];
        } else {
            r = s;
        }
        double* yr = out.data() + i * M;
        for (int64_t m = 0; m < M; ++m) yr[m] = K.dot(S, cr + m * S, r.data());
    }
    std::copy(s.begin(), s.end(), out.data() + N * M);

    std::vector<Val> inputs = {abar, bbar, cmat, x};
    if (has_h) inputs.push_back(h);
    return make_op(std::move(inputs), std::move(out),
                   [N, M, S, has_h, states = std::move(states)](Node& n) {
        const auto& K = simd::active();
        Node& abar_n = *n.inputs[0];
        Node& bbar_n = *n.inputs[1];
        Node& cmat_n = *n.inputs[2];
        Node& x_n = *n.inputs[3];
        Node* h_n = has_h ? n.inputs[4].get() : nullptr;
        const double* gy = n.grad.data();          // (N,M)
        const double* ghf = n.grad.data() + N * M; // (S)

        std::vector<double> carry(ghf, ghf + S);
        std::vector<double> gr(static_cast<size_t>(S));
        std::vector<double> gs(static_cast<size_t>(S));
        std::vector<double> rvec(static_cast<size_t>(S));

        bool wa = abar_n.requires_grad, wb = bbar_n.requires_grad, wc = cmat_n.requires_grad,
             wx = x_n.requires_grad, wh = h_n && h_n->requires_grad;
        Tensor* ga = wa ? &abar_n.ensure_grad() : nullptr;
        Tensor* gb = wb ? &bbar_n.ensure_grad() : nullptr;
        Tensor* gc = wc ? &cmat_n.ensure_grad() : nullptr;
        Tensor* gx = wx ? &x_n.ensure_grad() : nullptr;
        Tensor* gh = wh ? &h_n->ensure_grad() : nullptr;

        for (int64_t i = N - 1; i >= 0; --i) {
            const double* ar = abar_n.value.data() + i * S;
            const double* br = bbar_n.value.data() + i * S * M;
            const double* cr = cmat_n.value.data() + i * M * S;
            const double* xr = x_n.value.data() + i * M;
            const double* si = states.data() + i * S;
            const double* gyr = gy + i * M;

            // r_i = s_i + a_i ⊙ h
            if (has_h) {
                const double* hv = h_n->value.data();
                for (int64_t a = 0; a < S; ++a) rvec[static_cast<size_t>(a)] = si[a] + ar[a] * hv[a];
            } else {
                std::copy(si, si + S, rvec.begin());
            }

            // gr = C_i^T gy_i ; gC_i = gy_i r_i^T
            std::fill(gr.begin(), gr.end(), 0.0);
            for (int64_t m = 0; m < M; ++m) {
                if (gyr[m] != 0.0) K.axpy(S, gyr[m], cr + m * S, gr.data());
            }
            if (wc) {
                double* gcr = gc->data() + i * M * S;
                for (int64_t m = 0; m < M; ++m)
                    if (gyr[m] != 0.0) K.axpy(S, gyr[m], rvec.data(), gcr + m * S);
            }

            for (int64_t a = 0; a < S; ++a) gs[static_cast<size_t>(a)] = gr[static_cast<size_t>(a)] + carry[static_cast<size_t>(a)];

            if (wa) {
                double* gar = ga->data() + i * S;
                if (i > 0) {
                    const double* sp = states.data() + (i - 1) * S;
                    for (int64_t a = 0; a < S; ++a) gar[a] += gs[static_cast<size_t>(a)] * sp[a];
                }
                if (has_h) {
                    const double* hv = h_n->value.data();
                    for (int64_t a = 0; a < S; ++a) gar[a] += gr[static_cast<size_t>(a)] * hv[a];
                }
            }
            if (wb) {
                double* gbr = gb->data() + i * S * M;
                for (int64_t a = 0; a < S; ++a)
                    if (gs[static_cast<size_t>(a)] != 0.0) K.axpy(M, gs[static_cast<size_t>(a)], xr, gbr + a * M);
            }
            if (wx) {
                double* gxr = gx->data() + i * M;
                for (int64_t a = 0; a < S; ++a)
                    if (gs[static_cast<size_t>(a)] != 0.0) K.axpy(M, gs[static_cast<size_t>(a)], br + a * M, gxr);
            }
            if (wh) {
                double* ghd = gh->data();
                for (int64_t a = 0; a < S; ++a) ghd[a] += ar[a] * gr[static_cast<size_t>(a)];
            }
            for (int64_t a = 0; a < S; ++a) carry[static_cast<size_t>(a)] = ar[a] * gs[static_cast<size_t>(a)];
        }
    }, "scan");
}

} // namespace vf::ad
