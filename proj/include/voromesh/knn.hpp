#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "voromesh/vec3.hpp"

namespace voromesh {

struct Neighbor {
    int index = -1;
    double dist_sq = 0.0;
};

// Exact k-nearest-neighbor search over a fixed point set. Results are sorted
// by (distance, index); equal distances break toward the lower index, so
// queries are deterministic.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points) { build(points); }

    void build(std::span<const Vec3> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    Neighbor nearest(const Vec3& q) const;

    // k smallest (distance, index) pairs, ascending.
    std::vector<Neighbor> query(const Vec3& q, int k) const;
    void query_into(const Vec3& q, int k, std::vector<Neighbor>& out) const;

    // Smallest pairwise distance in the set (index pair with lowest indices on ties).
    double min_pairwise_distance() const;

private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0; // leaf range into order_
        int axis = 0;
        double split = 0.0;
    };

    int build_node(int begin, int end);
    void search(int node, const Vec3& q, int k, std::vector<Neighbor>& heap) const;

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;

    static constexpr int kLeafSize = 16;
};

} // namespace voromesh
