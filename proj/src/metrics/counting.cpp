#include "metrics/counting.hpp"
#include <algorithm>
#include "core/error.hpp"

namespace vf::metrics {

Layer conv3d_layer(std::string tag, int64_t c_in, int64_t c_out, int64_t k, int64_t positions,
                   int64_t uses) {
    Layer l;
    l.kind = "conv3d";
    l.tag = std::move(tag);
    l.c_in = c_in;
    l.c_out = c_out;
    l.k = k;
    l.positions = positions;
    l.uses = uses;
    return l;
}

Layer tconv3d_layer(std::string tag, int64_t c_in, int64_t c_out, int64_t positions,
                    int64_t uses) {
    Layer l;
    l.kind = "tconv3d";
    l.tag = std::move(tag);
    l.c_in = c_in;
    l.c_out = c_out;
    l.k = 2;
    l.positions = positions;
    l.uses = uses;
    return l;
}

Layer linear_layer(std::string tag, int64_t in, int64_t out, int64_t rows, int64_t uses) {
    Layer l;
    l.kind = "linear";
    l.tag = std::move(tag);
    l.in = in;
    l.out = out;
    l.rows = rows;
    l.uses = uses;
    return l;
}

Layer table_layer(std::string tag, int64_t n, int64_t m) {
    Layer l;
    l.kind = "table";
    l.tag = std::move(tag);
    l.n = n;
    l.m = m;
    return l;
}

Layer scan_layer(std::string tag, int64_t n, int64_t m, int64_t s, int64_t uses) {
    Layer l;
    l.kind = "scan";
    l.tag = std::move(tag);
    l.n = n;
    l.m = m;
    l.s = s;
    l.uses = uses;
    return l;
}

Layer attention_layer(std::string tag, int64_t rows, int64_t m, int64_t uses) {
    Layer l;
    l.kind = "attention";
    l.tag = std::move(tag);
    l.rows = rows;
    l.m = m;
    l.uses = uses;
    return l;
}

int64_t layer_params(const Layer& l) {
    if (l.kind == "conv3d" || l.kind == "tconv3d")
        return l.c_in * l.c_out * l.k * l.k * l.k + l.c_out;
    if (l.kind == "linear") return l.in * l.out + l.out;
    if (l.kind == "table") return l.n * l.m;
    if (l.kind == "scan" || l.kind == "attention") return 0; // operands are built elsewhere
    VF_FAIL("unsupported layer kind '" << l.kind << "' at " << l.tag);
}

int64_t layer_macs(const Layer& l) {
    int64_t macs = 0;
    if (l.kind == "conv3d" || l.kind == "tconv3d")
        macs = l.c_in * l.c_out * l.k * l.k * l.k * l.positions;
    else if (l.kind == "linear")
        macs = l.in * l.out * l.rows;
    else if (l.kind == "table")
        macs = 0;
    else if (l.kind == "scan")
        macs = l.n * (2 * l.m * l.s + 3 * l.s); // per token: inject, decay, read out
    else if (l.kind == "attention")
        macs = l.rows * l.rows * l.m;
    else
        VF_FAIL("unsupported layer kind '" << l.kind << "' at " << l.tag);
    return macs * l.uses;
}

CountReport count_layers(const std::vector<Layer>& layers) {
    CountReport r;
    for (const auto& l : layers) {
        r.params += layer_params(l);
        r.macs += layer_macs(l);
    }
    return r;
}

std::vector<Layer> mamba_block_layers(const std::string& tag, int64_t n_tokens, int64_t M,
                                      int64_t S, int64_t uses) {
    return {
        linear_layer(tag + ".proj_a", M, M, n_tokens, uses),
        linear_layer(tag + ".proj_z", M, M, n_tokens, uses),
        linear_layer(tag + ".proj_o", M, M, n_tokens, uses),
        linear_layer(tag + ".step", M, 1, n_tokens, uses),
        table_layer(tag + ".decay", S, 1),
        linear_layer(tag + ".input_map", M, S * M, n_tokens, uses),
        linear_layer(tag + ".readout_map", M, M * S, n_tokens, uses),
        scan_layer(tag + ".scan", n_tokens, M, S, uses),
    };
}

std::vector<Layer> dapl_layers(const dapl::DaplConfig& cfg, int64_t d, int64_t h, int64_t w) {
    int64_t C = cfg.enc_channels, M = cfg.M, S = cfg.S, Q = cfg.Q;
    int64_t vox = d * h * w;
    VF_CHECK(d % Q == 0 && h % Q == 0 && w % Q == 0, "volume dims must be divisible by the patch side");
    int64_t N = vox / (Q * Q * Q);
    std::vector<Layer> out = {
        conv3d_layer("dapl.enc1", 1, C, 3, vox, 2),
        conv3d_layer("dapl.enc2", C, C, 3, vox, 2),
        conv3d_layer("dapl.mix", 2 * C, C, 3, vox),
        linear_layer("dapl.embed", C * Q * Q * Q, M, N),
    };
    for (auto& l : mamba_block_layers("dapl.block1", N, M, S)) out.push_back(l);
    for (auto& l : mamba_block_layers("dapl.block2", N, M, S, 3)) out.push_back(l);
    out.push_back(linear_layer("dapl.cls1", 3 * S, 4 * S, 1));
    out.push_back(linear_layer("dapl.cls2", 4 * S, cfg.n_classes, 1));
    out.push_back(table_layer("dapl.prompt", cfg.n_classes * cfg.L, M));
    out.push_back(linear_layer("dapl.gate1", 3 * S, 4 * S, 1));
    out.push_back(linear_layer("dapl.gate2", 4 * S, cfg.n_classes * cfg.L * M, 1));
    return out;
}

std::vector<Layer> oufr_layers(const unify::OufrConfig& cfg) {
    int64_t M = cfg.M, S = cfg.S, T = 2 * cfg.n_tokens;
    std::vector<Layer> out = {
        linear_layer("oufr.embed", cfg.in_channels * cfg.Q * cfg.Q * cfg.Q, M, cfg.n_tokens, 2),
    };
    if (cfg.backbone == unify::Backbone::transformer) {
        out.push_back(table_layer("oufr.pos", T, M));
        // MLP width chosen so the stack matches the scan blocks it replaces
        int64_t scan_params = 3 * (M * M + M) + (M + 1) + S + (S * M * M + S * M)
                              + (M * S * M + M * S);
        int64_t fixed = 3 * (4 * (M * M + M) + 2 * M) + 3 * M + T * M;
        int64_t hid = std::max<int64_t>(4, (3 * scan_params - fixed) / (3 * (2 * M + 1)));
        for (int j = 0; j < 3; ++j) {
            std::string tag = "oufr.attn" + std::to_string(j);
            out.push_back(table_layer(tag + ".norm1", M, 1));
            out.push_back(table_layer(tag + ".norm2", M, 1));
            out.push_back(linear_layer(tag + ".q", M, M, T));
            out.push_back(linear_layer(tag + ".k", M, M, T));
            out.push_back(linear_layer(tag + ".v", M, M, T));
            out.push_back(linear_layer(tag + ".o", M, M, T));
            out.push_back(attention_layer(tag + ".scores", T, M));
            out.push_back(attention_layer(tag + ".apply", T, M));
            out.push_back(linear_layer(tag + ".mlp1", M, hid, T));
            out.push_back(linear_layer(tag + ".mlp2", hid, M, T));
        }
    } else {
        for (int j = 0; j < 3; ++j)
            for (auto& l : mamba_block_layers("oufr.block" + std::to_string(j), T, M, S))
                out.push_back(l);
    }
    return out;
}

namespace {

int64_t pool_factor_dims(int64_t d, int64_t h, int64_t w) {
    int64_t f = 1;
    while (d / f > 8 || h / f > 8 || w / f > 8) f *= 2;
    return f;
}

} // namespace

std::vector<Layer> fa_layers(const align::FaConfig& cfg, int64_t n_tokens) {
    std::vector<int64_t> ch =
        cfg.channels.empty() ? align::default_channels(cfg.J, cfg.M) : cfg.channels;
    VF_CHECK(static_cast<int64_t>(ch.size()) == cfg.J + 1, "stage channel list must have J+1 entries");
    int64_t d = cfg.vol_d, h = cfg.vol_h, w = cfg.vol_w;
    while (d * h * w > n_tokens) {
        d /= 2;
        h /= 2;
        w /= 2;
    }
    VF_CHECK(d * h * w == n_tokens, "token count does not match a halved grid of the volume");
    int64_t flat = cfg.prompt_rows * cfg.M;
    std::vector<Layer> out;
    for (int64_t j = 0; j < cfg.J; ++j) {
        std::string tag = "fa.stage" + std::to_string(j);
        int64_t ci = ch[static_cast<size_t>(j)], co = ch[static_cast<size_t>(j + 1)];
        int64_t vox = d * h * w;
        int64_t f = pool_factor_dims(d, h, w);
        int64_t pv = vox / (f * f * f);
        out.push_back(linear_layer(tag + ".mlp1", flat, cfg.mlp_hidden, 1));
        out.push_back(linear_layer(tag + ".mlp2", cfg.mlp_hidden, ci, 1));
        out.push_back(conv3d_layer(tag + ".proj_d", ci, cfg.corr_channels, 1, pv));
        out.push_back(conv3d_layer(tag + ".proj_r", ci, cfg.corr_channels, 1, pv));
        out.push_back(attention_layer(tag + ".scores", pv, cfg.corr_channels, 2));
        out.push_back(attention_layer(tag + ".apply", pv, ci, 2));
        out.push_back(conv3d_layer(tag + ".conv_d", 2 * ci, co, 3, vox));
        out.push_back(conv3d_layer(tag + ".conv_r", 2 * ci, co, 3, vox));
        if (ci != co) {
            out.push_back(conv3d_layer(tag + ".skip_d", ci, co, 1, vox));
            out.push_back(conv3d_layer(tag + ".skip_r", ci, co, 1, vox));
        }
        if (2 * d <= cfg.vol_d && 2 * h <= cfg.vol_h && 2 * w <= cfg.vol_w) {
            d *= 2;
            h *= 2;
            w *= 2;
        }
    }
    int64_t head_vox = cfg.vol_d * cfg.vol_h * cfg.vol_w;
    out.push_back(conv3d_layer("fa.head1", 2 * ch.back(), 16, 3, head_vox));
    out.push_back(conv3d_layer("fa.head2", 16, 3, 1, head_vox));
    return out;
}

namespace {

void basenet_layers(std::vector<Layer>& out, const std::string& tag, int64_t C,
                    const fuse::UfrfConfig& cfg, int64_t vox) {
    int64_t flat = cfg.prompt_rows * cfg.M;
    out.push_back(linear_layer(tag + ".mlp1", flat, cfg.mlp_hidden, 1));
    out.push_back(linear_layer(tag + ".mlp2", cfg.mlp_hidden, C, 1));
    out.push_back(conv3d_layer(tag + ".k", C, C, 1, vox));
    out.push_back(conv3d_layer(tag + ".q", C, C, 1, vox));
    out.push_back(conv3d_layer(tag + ".v", C, C, 1, vox));
    out.push_back(attention_layer(tag + ".scores", C, vox));
    out.push_back(attention_layer(tag + ".apply", C, vox));
    out.push_back(conv3d_layer(tag + ".o1", C, C, 1, vox));
    out.push_back(conv3d_layer(tag + ".o2", C, C, 1, vox));
}

} // namespace

std::vector<Layer> ufrf_layers(const fuse::UfrfConfig& cfg, int64_t d, int64_t h, int64_t w) {
    VF_CHECK(cfg.widths.size() == 3, "the fusion net is built around three scales");
    VF_CHECK(d % 4 == 0 && h % 4 == 0 && w % 4 == 0, "spatial dims must be divisible by 4");
    int64_t w0 = cfg.widths[0], w1 = cfg.widths[1], w2 = cfg.widths[2];
    int64_t vox = d * h * w, v2 = vox / 8, v3 = vox / 64;
    std::vector<Layer> out = {
        conv3d_layer("ufrf.enc1", cfg.in_channels, w0, 3, vox),
        conv3d_layer("ufrf.down1", w0, w1, 3, v2),
        conv3d_layer("ufrf.enc2", w1, w1, 3, v2),
        conv3d_layer("ufrf.down2", w1, w2, 3, v3),
        conv3d_layer("ufrf.enc3", w2, w2, 3, v3),
    };
    int64_t scale_vox[3] = {vox, v2, v3};
    for (int s = 0; s < 3; ++s) {
        int64_t C = cfg.widths[static_cast<size_t>(s)], vs = scale_vox[s];
        std::string tag = "ufrf.alsn" + std::to_string(s);
        basenet_layers(out, tag + ".base", C, cfg, vs);
        for (int64_t j = 0; j < cfg.branches; ++j) {
            std::string bt = tag + ".branch" + std::to_string(j);
            if (cfg.multi_expert) {
                basenet_layers(out, bt, C, cfg, vs);
            } else {
                out.push_back(conv3d_layer(bt + ".down", C, cfg.rank, 1, vs));
                out.push_back(linear_layer(bt + ".scale", cfg.M, cfg.rank, 1));
                out.push_back(conv3d_layer(bt + ".up", cfg.rank, C, 1, vs));
            }
        }
    }
    out.push_back(tconv3d_layer("ufrf.up2", w2, w1, v3));
    out.push_back(conv3d_layer("ufrf.dec2", 2 * w1, w1, 3, v2));
    out.push_back(tconv3d_layer("ufrf.up1", w1, w0, v2));
    out.push_back(conv3d_layer("ufrf.dec1", 2 * w0, w0, 3, vox));
    out.push_back(conv3d_layer("ufrf.luma", w0, 1, 1, vox));
    if (cfg.color) {
        out.push_back(conv3d_layer("ufrf.chroma1", w0 + 2, 8, 3, vox));
        out.push_back(conv3d_layer("ufrf.chroma2", 8, 2, 1, vox));
    }
    return out;
}

} // namespace vf::metrics
