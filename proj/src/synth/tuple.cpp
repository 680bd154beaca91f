#include "synth/synth.hpp"
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include "core/rng.hpp"
#include "core/volio.hpp"
#include "vol/field.hpp"
#include "vol/warp.hpp"

namespace vf::synth {

Tensor make_misalignment(int64_t D, int64_t H, int64_t W, const MisalignSpec& m, uint64_t seed) {
    Rng rng(seed ^ 0x6d6973616c69676eULL);
    Tensor field({3, D, H, W}, 0.0);

    double deg2rad = 3.141592653589793 / 180.0;
    double az = rng.uniform(-m.max_affine_deg, m.max_affine_deg) * deg2rad;
    double ay = rng.uniform(-m.max_affine_deg, m.max_affine_deg) * deg2rad;
    double ax = rng.uniform(-m.max_affine_deg, m.max_affine_deg) * deg2rad;
    double t[3] = {rng.uniform(-m.max_trans, m.max_trans),
                   rng.uniform(-m.max_trans, m.max_trans),
                   rng.uniform(-m.max_trans, m.max_trans)};

    double cz = std::cos(az), sz = std::sin(az);
    double cy = std::cos(ay), sy = std::sin(ay);
    double cx = std::cos(ax), sx = std::sin(ax);
    double R[9] = {cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
                   sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
                   -sy,     cy * sx,                cy * cx};

    double cc[3] = {(static_cast<double>(D) - 1.0) / 2.0, (static_cast<double>(H) - 1.0) / 2.0,
                    (static_cast<double>(W) - 1.0) / 2.0};
    int64_t plane = D * H * W;
    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                double p[3] = {static_cast<double>(z) - cc[0], static_cast<double>(y) - cc[1],
                               static_cast<double>(x) - cc[2]};
                int64_t i = (z * H + y) * W + x;
                for (int axis = 0; axis < 3; ++axis) {
                    double rp = R[3 * axis] * p[0] + R[3 * axis + 1] * p[1] +
                                R[3 * axis + 2] * p[2];
                    field[axis * plane + i] = rp - p[axis] + t[axis];
                }
            }

    if (m.nonrigid_mag > 0.0) {
        Tensor noise({3, D, H, W});
        for (int64_t i = 0; i < noise.numel(); ++i) noise[i] = rng.normal();
        noise = vol::gauss_blur(noise, m.nonrigid_sigma);
        double mx = 0.0;
        for (int64_t i = 0; i < noise.numel(); ++i) mx = std::max(mx, std::fabs(noise[i]));
        if (mx > 0.0) {
            double s = m.nonrigid_mag / mx;
            for (int64_t i = 0; i < field.numel(); ++i) field[i] += s * noise[i];
        }
    }
    return field;
}

TrainingTuple make_tuple(const PhantomSpec& spec, Degradation kind, double severity,
                         uint64_t seed, int64_t D, int64_t H, int64_t W,
                         const MisalignSpec& mis) {
    auto [A, B] = make_phantom_pair(spec, D, H, W);

    Tensor u = make_misalignment(D, H, W, mis, seed * 0x9e3779b97f4a7c15ULL + 1);

    TrainingTuple t;
    t.clean_aligned = A;
    t.reference = B;
    t.fine_label = vol::warp_forward(A, u);
    t.degraded_moving = degrade(t.fine_label, kind, severity, seed * 0x9e3779b97f4a7c15ULL + 2);
    t.misaligned_reference = vol::warp_forward(B, u);
    t.phi_gt = vol::invert_field(u, 20);
    t.class_label = degradation_index(kind);
    t.severity = severity;
    t.seed = seed;
    return t;
}

void save_tuple(const TrainingTuple& t, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_ufv(dir + "/degraded_moving.ufv", t.degraded_moving);
    write_ufv(dir + "/reference.ufv", t.reference);
    write_ufv(dir + "/clean_aligned.ufv", t.clean_aligned);
    write_ufv(dir + "/misaligned_reference.ufv", t.misaligned_reference);
    write_ufv(dir + "/fine_label.ufv", t.fine_label);
    write_ufv(dir + "/phi_gt.ufv", t.phi_gt);
    nlohmann::json j;
    j["kind"] = degradation_name(degradation_from_index(t.class_label));
    j["class_label"] = t.class_label;
    j["severity"] = t.severity;
    j["seed"] = t.seed;
    j["spacing"] = {1.0, 1.0, 1.0};
    std::ofstream out(dir + "/tuple.json");
    VF_CHECK(out.good(), "cannot write " << dir << "/tuple.json");
    out << j.dump(2) << "\n";
}

TrainingTuple load_tuple(const std::string& dir) {
    TrainingTuple t;
    t.degraded_moving = read_ufv(dir + "/degraded_moving.ufv");
    t.reference = read_ufv(dir + "/reference.ufv");
    t.clean_aligned = read_ufv(dir + "/clean_aligned.ufv");
    t.misaligned_reference = read_ufv(dir + "/misaligned_reference.ufv");
    t.fine_label = read_ufv(dir + "/fine_label.ufv");
    t.phi_gt = read_ufv(dir + "/phi_gt.ufv");
    std::ifstream in(dir + "/tuple.json");
    VF_CHECK(in.good(), "cannot read " << dir << "/tuple.json");
    nlohmann::json j;
    in >> j;
    t.class_label = j.at("class_label").get<int>();
    t.severity = j.at("severity").get<double>();
    t.seed = j.at("seed").get<uint64_t>();
    return t;
}

} // namespace vf::synth
