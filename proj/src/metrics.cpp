#include "voromesh/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "voromesh/knn.hpp"
#include "voromesh/parallel.hpp"
#include "voromesh/sampling.hpp"

namespace voromesh {

namespace {

struct DirectedStats {
    double mean_sq = 0.0;      // mean squared NN distance
    double within_delta = 0.0; // fraction of samples with NN distance <= delta
    double mean_abs_ndot = 0.0;
};

// One direction: for every sample of `from`, nearest sample of `to`.
DirectedStats directed(const SurfacePointSet& from, const SurfacePointSet& to,
                       const KdTree& to_tree, double delta, int threads) {
    std::vector<double> d2(from.size());
    std::vector<double> ndot(from.size());
    parallel_for(from.size(), threads, [&](std::size_t i) {
        Neighbor nn = to_tree.nearest(from.points[i]);
        d2[i] = nn.dist_sq;
        ndot[i] = std::abs(dot(from.normals[i], to.normals[nn.index]));
    });

    DirectedStats s;
    long long hits = 0;
    const double delta_sq = delta * delta;
    for (std::size_t i = 0; i < from.size(); ++i) {
        s.mean_sq += d2[i];
        s.mean_abs_ndot += ndot[i];
        if (d2[i] <= delta_sq) ++hits;
    }
    const double n = static_cast<double>(from.size());
    s.mean_sq /= n;
    s.mean_abs_ndot /= n;
    s.within_delta = static_cast<double>(hits) / n;
    return s;
}

void check_inputs(const TriangleMesh& a, const TriangleMesh& b, std::size_t n) {
    if (a.empty() || b.empty()) throw std::invalid_argument("metrics: empty mesh");
    if (n == 0) throw std::invalid_argument("metrics: zero samples");
}

} // namespace

MetricReport evaluate_metrics(const TriangleMesh& a, const TriangleMesh& b, std::size_t n,
                              double delta, std::uint64_t seed, int threads) {
    check_inputs(a, b, n);
    SurfacePointSet sa = sample_surface(a, n, seed);
    SurfacePointSet sb = sample_surface(b, n, seed);
    KdTree ta(sa.points), tb(sb.points);

    DirectedStats ab = directed(sa, sb, tb, delta, threads);
    DirectedStats ba = directed(sb, sa, ta, delta, threads);

    MetricReport r;
    r.chamfer = 0.5 * (ab.mean_sq + ba.mean_sq);
    r.precision = ab.within_delta;
    r.recall = ba.within_delta;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.normal_consistency = 0.5 * (ab.mean_abs_ndot + ba.mean_abs_ndot);
    r.delta = delta;
    r.n_samples = n;
    r.seed = seed;
    return r;
}

double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n, std::uint64_t seed,
               int threads) {
    return evaluate_metrics(a, b, n, 0.003, seed, threads).chamfer;
}

F1Result f1_score(const TriangleMesh& a, const TriangleMesh& b, std::size_t n, double delta,
                  std::uint64_t seed, int threads) {
    MetricReport r = evaluate_metrics(a, b, n, delta, seed, threads);
    return {r.f1, r.precision, r.recall};
}

double normal_consistency(const TriangleMesh& a, const TriangleMesh& b, std::size_t n,
                          std::uint64_t seed, int threads) {
    return evaluate_metrics(a, b, n, 0.003, seed, threads).normal_consistency;
}

std::string MetricReport::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "{\n"
       << "  \"cd\": " << chamfer << ",\n"
       << "  \"cd_x1e5\": " << chamfer_x1e5() << ",\n"
       << "  \"f1\": " << f1 << ",\n"
       << "  \"precision\": " << precision << ",\n"
       << "  \"recall\": " << recall << ",\n"
       << "  \"normal_consistency\": " << normal_consistency << ",\n"
       << "  \"delta\": " << delta << ",\n"
       << "  \"n_samples\": " << n_samples << ",\n"
       << "  \"seed\": " << seed << "\n"
       << "}\n";
    return os.str();
}

std::string MetricReport::csv_header() {
    return "cd,cd_x1e5,f1,precision,recall,normal_consistency,delta,n_samples,seed";
}

std::string MetricReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(12);
    os << chamfer << ',' << chamfer_x1e5() << ',' << f1 << ',' << precision << ',' << recall << ','
       << normal_consistency << ',' << delta << ',' << n_samples << ',' << seed;
    return os.str();
}

} // namespace voromesh
