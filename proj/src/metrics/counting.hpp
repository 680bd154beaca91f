#pragma once
#include <cstdint>
#include <string>
#include <vector>
#include "align/fa.hpp"
#include "fuse/ufrf.hpp"
#include "prompt/dapl.hpp"
#include "unify/oufr.hpp"

namespace vf::metrics {

// One counted compute element. Conventions: FLOPs = 2 * MACs; biases, an
// elementwise nonlinearity, a softmax, a pooling, or an interpolation cost
// no MACs; `uses` scales the MAC count for weights applied more than once
// per forward pass while parameters are counted a single time.
struct Layer {
    std::string kind; // conv3d | tconv3d | linear | table | scan | attention
    std::string tag;  // where it sits, e.g. "dapl.enc1"
    int64_t c_in = 0, c_out = 0, k = 1, positions = 0; // conv kinds
    int64_t in = 0, out = 0, rows = 0;                 // linear
    int64_t n = 0, m = 0, s = 0;                       // table (n x m), scan (n tokens, m, s)
    int64_t uses = 1;
};

Layer conv3d_layer(std::string tag, int64_t c_in, int64_t c_out, int64_t k, int64_t positions,
                   int64_t uses = 1);
// stride-2 transposed conv with a 2^3 kernel; positions are INPUT voxels
Layer tconv3d_layer(std::string tag, int64_t c_in, int64_t c_out, int64_t positions,
                    int64_t uses = 1);
Layer linear_layer(std::string tag, int64_t in, int64_t out, int64_t rows, int64_t uses = 1);
Layer table_layer(std::string tag, int64_t n, int64_t m); // learned constants, no MACs
// selective-scan recurrence over n tokens with token dim m and state dim s
// (the projections that build its per-token operators are separate linears)
Layer scan_layer(std::string tag, int64_t n, int64_t m, int64_t s, int64_t uses = 1);
// one rows x rows score-or-apply product at feature dim m
Layer attention_layer(std::string tag, int64_t rows, int64_t m, int64_t uses = 1);

int64_t layer_params(const Layer& l); // throws on an unknown kind, naming it
int64_t layer_macs(const Layer& l);

struct CountReport {
    int64_t params = 0;
    int64_t macs = 0;
    int64_t flops() const { return 2 * macs; }
    double params_m() const { return static_cast<double>(params) / 1e6; }
    double flops_g() const { return 2.0 * static_cast<double>(macs) / 1e9; }
};

CountReport count_layers(const std::vector<Layer>& layers);

// Analytic inventories mirroring the live modules' constructions; tests pin
// their parameter totals against the instantiated models.
std::vector<Layer> mamba_block_layers(const std::string& tag, int64_t n_tokens, int64_t M,
                                      int64_t S, int64_t uses = 1);
std::vector<Layer> dapl_layers(const dapl::DaplConfig& cfg, int64_t d, int64_t h, int64_t w);
std::vector<Layer> oufr_layers(const unify::OufrConfig& cfg);
std::vector<Layer> fa_layers(const align::FaConfig& cfg, int64_t n_tokens);
std::vector<Layer> ufrf_layers(const fuse::UfrfConfig& cfg, int64_t d, int64_t h, int64_t w);

} // namespace vf::metrics
