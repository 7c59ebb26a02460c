#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "voromesh/sampling.hpp"
#include "voromesh/voroloss.hpp"

namespace voromesh {

struct FitConfig {
    int grid_resolution = 32;
    int steps = 400;
    double learning_rate = 0.005;
    std::set<int> halving_steps{80, 120, 200, 250};
    double minibatch_fraction = 0.2;
    int k = 32;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    int full_loss_every = 100; // 0 disables the full-set loss column

    void validate(std::size_t sample_count) const;
};

// Mark every voxel of the g_s^3 grid over [-0.5,0.5]^3 that contains a sample
// and return the deduplicated corner nodes of the marked voxels. Samples
// outside the box are clamped (counted in *clamped if given).
GeneratorSet init_generators(const SurfacePointSet& samples, int grid_resolution,
                             int* clamped = nullptr);

struct RegularizerTerm {
    double value = 0.0;
    std::vector<Vec3> gradient;
};

// R(Q) = max_i ||q_i - v_i||, subgradient on the lowest-index argmax.
RegularizerTerm offset_regularizer(const GeneratorSet& generators);

// Standard Adam (beta1=0.9, beta2=0.999, eps=1e-8) with bias correction.
struct AdamState {
    std::vector<Vec3> m, v;
    long t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n), v(n) {}
    void step(std::vector<Vec3>& params, const std::vector<Vec3>& grad, double lr);
};

struct TracePoint {
    int step = 0;
    double lr = 0.0;
    double batch_loss = 0.0;
    std::optional<double> full_loss;
};

struct FitResult {
    GeneratorSet generators;
    std::vector<TracePoint> trace;
    int duplicate_jitters = 0; // post-fit coincident generators nudged apart
};

// Minimize VoroLoss(X, Q)/batch + lambda*R(Q) with Adam, drawing a fresh
// seeded minibatch each step; the learning rate halves cumulatively at each
// configured step.
FitResult fit(const SurfacePointSet& samples, const GeneratorSet& initial, const FitConfig& config);

void write_trace_csv(const std::vector<TracePoint>& trace, const std::string& path);

} // namespace voromesh
