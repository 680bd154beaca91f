#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include "core/tensor.hpp"

namespace vf::synth {

// Shared-geometry phantom generator. A carries the "moving" modality, B the
// reference modality; both depict the same random ellipsoid composite under
// different intensity maps. With color set, B gets Y/Cr/Cb channels where the
// chroma planes encode region identity.
struct PhantomSpec {
    uint64_t seed = 0;
    int n_blobs = 6;
    bool color = false;
};

std::pair<Tensor, Tensor> make_phantom_pair(const PhantomSpec& spec, int64_t D, int64_t H,
                                            int64_t W);

enum class Degradation { motion = 0, streak_noise = 1, lowdose = 2 };

int degradation_index(Degradation k);
Degradation degradation_from_index(int idx);
Degradation degradation_from_name(const std::string& name);
const char* degradation_name(Degradation k);

// Intensity-only corruption of a single-channel volume. severity in (0,1].
Tensor degrade(const Tensor& v, Degradation kind, double severity, uint64_t seed);

struct MisalignSpec {
    double max_affine_deg = 5.0;
    double max_trans = 3.0;
    double nonrigid_sigma = 3.0;
    double nonrigid_mag = 2.0;
};

// Composite displacement field: small random rotation + translation about the
// volume centre, plus a Gaussian-smoothed random field. Channels (dz,dy,dx).
Tensor make_misalignment(int64_t D, int64_t H, int64_t W, const MisalignSpec& m, uint64_t seed);

struct TrainingTuple {
    Tensor degraded_moving;      // degraded, misaligned moving image
    Tensor reference;            // clean reference, 1 or 3 channels
    Tensor clean_aligned;        // clean moving image in reference geometry
    Tensor misaligned_reference; // reference pushed through the same field
    Tensor fine_label;           // clean moving image in degraded geometry
    Tensor phi_gt;               // maps degraded geometry back onto the reference
    int class_label = 0;
    double severity = 0.0;
    uint64_t seed = 0;
};

TrainingTuple make_tuple(const PhantomSpec& spec, Degradation kind, double severity,
                         uint64_t seed, int64_t D, int64_t H, int64_t W,
                         const MisalignSpec& mis = {});

// One directory per tuple: the six volumes as .ufv plus a JSON sidecar.
void save_tuple(const TrainingTuple& t, const std::string& dir);
TrainingTuple load_tuple(const std::string& dir);

} // namespace vf::synth
