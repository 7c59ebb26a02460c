#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "voromesh/knn.hpp"
#include "voromesh/vec3.hpp"

namespace voromesh {

// Voronoi generators. `initial_positions` are the grid nodes the generators
// were seeded from (the offset regularizer measures drift from them).
// `occupancy` is empty until cells have been tagged inside/outside.
struct GeneratorSet {
    std::vector<Vec3> positions;
    std::vector<Vec3> initial_positions;
    std::vector<std::uint8_t> occupancy; // empty, or one 0/1 flag per generator

    std::size_t size() const { return positions.size(); }
    bool tagged() const { return occupancy.size() == positions.size() && !positions.empty(); }

    static GeneratorSet from_positions(std::vector<Vec3> pos) {
        GeneratorSet g;
        g.initial_positions = pos;
        g.positions = std::move(pos);
        return g;
    }
};

KdTree build_index(const GeneratorSet& generators);

// Distance from x to the bisector plane of (q_i, q_j): |(x - m) . u| with
// m the midpoint and u the unit direction q_j - q_i.
double bisector_distance(const Vec3& x, const Vec3& q_i, const Vec3& q_j);

// Sum over samples of the squared distance to the nearest bisector between
// the sample's nearest generator and one of its k-1 next-nearest neighbors.
// Equals the squared distance to the nearest face of the full Voronoi
// diagram whenever k is large enough to cover the minimizing neighbor.
double voroloss(std::span<const Vec3> samples, const GeneratorSet& generators, int k,
                const KdTree* index = nullptr, int threads = 1);

struct VoroLossGrad {
    double loss = 0.0;
    std::vector<Vec3> gradient; // d loss / d q_i, one entry per generator
};

// Analytic gradient; the nearest-generator and argmin-bisector selections are
// treated as locally constant. Per-sample terms are computed in parallel and
// reduced in sample order, so results are thread-count independent.
VoroLossGrad voroloss_with_grad(std::span<const Vec3> samples, const GeneratorSet& generators,
                                int k, const KdTree* index = nullptr, int threads = 1);

} // namespace voromesh
