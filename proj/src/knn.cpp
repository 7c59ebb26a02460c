#include "voromesh/knn.hpp"

#include <algorithm>
#include <stdexcept>

namespace voromesh {

namespace {

// Max-heap order: worst candidate on top. Ties compare by index so the kept
// set is exactly the k smallest (distance, index) pairs.
inline bool heap_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.index < b.index;
}

} // namespace

void KdTree::build(std::span<const Vec3> points) {
    points_.assign(points.begin(), points.end());
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.clear();
    nodes_.reserve(points_.size() / kLeafSize * 2 + 4);
    root_ = points_.empty() ? -1 : build_node(0, static_cast<int>(points_.size()));
}

int KdTree::build_node(int begin, int end) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Node n;
    n.begin = begin;
    n.end = end;

    if (end - begin <= kLeafSize) {
        nodes_[id] = n;
        return id;
    }

    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (int i = begin; i < end; ++i) {
        const Vec3& p = points_[order_[i]];
        lo = cwise_min(lo, p);
        hi = cwise_max(hi, p);
    }
    Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > (&ext.x)[axis]) axis = 2;

    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         double pa = points_[a][axis], pb = points_[b][axis];
                         if (pa != pb) return pa < pb;
                         return a < b; // strict weak order => deterministic build
                     });
    n.axis = axis;
    n.split = points_[order_[mid]][axis];
    n.left = build_node(begin, mid);
    n.right = build_node(mid, end);
    nodes_[id] = n;
    return id;
}

void KdTree::search(int node, const Vec3& q, int k, std::vector<Neighbor>& heap) const {
    const Node& n = nodes_[node];
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            int idx = order_[i];
            Neighbor cand{idx, dist_sq(points_[idx], q)};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), heap_less);
            } else if (heap_less(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), heap_less);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), heap_less);
            }
        }
        return;
    }
    double delta = q[n.axis] - n.split;
    int near = delta < 0.0 ? n.left : n.right;
    int far = delta < 0.0 ? n.right : n.left;
    search(near, q, k, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().dist_sq)
        search(far, q, k, heap);
}

Neighbor KdTree::nearest(const Vec3& q) const {
    std::vector<Neighbor> out;
    query_into(q, 1, out);
    return out.empty() ? Neighbor{} : out[0];
}

std::vector<Neighbor> KdTree::query(const Vec3& q, int k) const {
    std::vector<Neighbor> out;
    query_into(q, k, out);
    return out;
}

void KdTree::query_into(const Vec3& q, int k, std::vector<Neighbor>& out) const {
    out.clear();
    if (root_ < 0 || k <= 0) return;
    k = std::min<int>(k, static_cast<int>(points_.size()));
    out.reserve(static_cast<std::size_t>(k));
    search(root_, q, k, out);
    std::sort_heap(out.begin(), out.end(), heap_less);
}

double KdTree::min_pairwise_distance() const {
    if (points_.size() < 2) throw std::logic_error("min_pairwise_distance needs >= 2 points");
    double best = 1e300;
    std::vector<Neighbor> nn;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        query_into(points_[i], 2, nn);
        for (const auto& n : nn)
            if (n.index != static_cast<int>(i)) best = std::min(best, n.dist_sq);
    }
    return std::sqrt(best);
}

} // namespace voromesh
