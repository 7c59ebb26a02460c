#include "voromesh/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voromesh/extraction.hpp"
#include "voromesh/rng.hpp"
#include "voromesh/voroloss.hpp"
#include "voromesh/voronoi.hpp"

namespace voromesh {

namespace {

GeneratorSet random_generators(Rng& rng, int count, double lo = -0.5, double hi = 0.5) {
    std::vector<Vec3> pos(count);
    for (auto& p : pos) p = uniform_vec(rng, lo, hi);
    return GeneratorSet::from_positions(std::move(pos));
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Loss via the bisector route (optionally through the corruptible hook),
// compared against exact distances to the faces of a diagram built with a
// widely inflated box, so face truncation cannot bias the reference.
SelfCheckReport::Entry theorem1_check(const SelfCheckOptions& opt) {
    SelfCheckReport::Entry e{"theorem1-bisector-vs-diagram", true, ""};
    Rng rng(opt.seed * 7919 + 1);
    auto bisector = opt.bisector_override
                        ? opt.bisector_override
                        : [](const Vec3& x, const Vec3& qi, const Vec3& qj) {
                              return bisector_distance(x, qi, qj);
                          };

    double worst = 0.0;
    const int instances = 20;
    for (int inst = 0; inst < instances; ++inst) {
        int n = 5 + static_cast<int>(uniform_index(rng, 46));
        GeneratorSet q = random_generators(rng, n);
        ClipBox probe_box = ClipBox::around(q.positions);
        ClipBox oracle_box = ClipBox::around(q.positions, 2.0);
        VoronoiDiagram diagram = compute_diagram(q, oracle_box, opt.threads);
        KdTree index = build_index(q);

        for (int p = 0; p < 200; ++p) {
            Vec3 x{uniform_in(rng, probe_box.lo.x, probe_box.hi.x),
                   uniform_in(rng, probe_box.lo.y, probe_box.hi.y),
                   uniform_in(rng, probe_box.lo.z, probe_box.hi.z)};
            auto nn = index.query(x, n);
            double best = 1e300;
            for (std::size_t c = 1; c < nn.size(); ++c)
                best = std::min(best, bisector(x, q.positions[nn[0].index],
                                               q.positions[nn[c].index]));
            double exact = distance_to_faces(diagram, x);
            double rel = std::abs(best - exact) / std::max(exact, 1e-300);
            worst = std::max(worst, rel);
        }
    }
    e.pass = worst < 1e-9;
    e.detail = "worst relative error " + fmt(worst);
    return e;
}

SelfCheckReport::Entry gradient_check(const SelfCheckOptions& opt) {
    SelfCheckReport::Entry e{"voroloss-gradient-fd", true, ""};
    Rng rng(opt.seed * 7919 + 2);
    const double h = 1e-6;
    long long checked = 0, failed = 0;
    for (int inst = 0; inst < 5; ++inst) {
        int n = 8 + static_cast<int>(uniform_index(rng, 25));
        GeneratorSet q = random_generators(rng, n);
        std::vector<Vec3> samples(60);
        for (auto& s : samples) s = uniform_vec(rng, -0.5, 0.5);
        int k = std::min<int>(8, n);

        VoroLossGrad lg = voroloss_with_grad(samples, q, k, nullptr, opt.threads);
        for (int gi = 0; gi < n; ++gi) {
            for (int a = 0; a < 3; ++a) {
                GeneratorSet qp = q, qm = q;
                qp.positions[gi][a] += h;
                qm.positions[gi][a] -= h;
                double fd = (voroloss(samples, qp, k) - voroloss(samples, qm, k)) / (2.0 * h);
                double an = lg.gradient[gi][a];
                double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
                ++checked;
                if (rel > 1e-5) ++failed;
            }
        }
    }
    double fail_rate = static_cast<double>(failed) / static_cast<double>(checked);
    e.pass = fail_rate <= 0.01;
    e.detail = std::to_string(failed) + "/" + std::to_string(checked) + " coordinates off";
    return e;
}

SelfCheckReport::Entry volume_check(const SelfCheckOptions& opt) {
    SelfCheckReport::Entry e{"cell-volume-conservation", true, ""};
    Rng rng(opt.seed * 7919 + 3);
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        int n = 5 + static_cast<int>(uniform_index(rng, 196));
        GeneratorSet q = random_generators(rng, n);
        ClipBox box = ClipBox::around(q.positions);
        VoronoiDiagram d = compute_diagram(q, box, opt.threads);
        double total = 0.0;
        for (const auto& c : d.cells) total += c.volume;
        worst = std::max(worst, std::abs(total - box.volume()) / box.volume());
    }
    e.pass = worst < 1e-6;
    e.detail = "worst relative volume error " + fmt(worst);
    return e;
}

SelfCheckReport::Entry knn_truncation_check(const SelfCheckOptions& opt) {
    SelfCheckReport::Entry e{"knn-truncation", true, ""};
    Rng rng(opt.seed * 7919 + 4);
    for (int inst = 0; inst < 5 && e.pass; ++inst) {
        GeneratorSet q = random_generators(rng, 500);
        std::vector<Vec3> probes(200);
        for (auto& p : probes) p = uniform_vec(rng, -0.45, 0.45);
        double truncated = voroloss(probes, q, 32, nullptr, opt.threads);
        double full = voroloss(probes, q, static_cast<int>(q.size()), nullptr, opt.threads);
        if (truncated != full) {
            e.pass = false;
            e.detail = "k=32 " + fmt(truncated) + " vs full " + fmt(full);
        }
    }
    if (e.pass) e.detail = "k=32 equals k=|Q| on all instances";
    return e;
}

SelfCheckReport::Entry watertight_check(const SelfCheckOptions& opt) {
    SelfCheckReport::Entry e{"extract-repair-watertight", true, ""};
    Rng rng(opt.seed * 7919 + 5);
    for (int inst = 0; inst < 20 && e.pass; ++inst) {
        int n = 10 + static_cast<int>(uniform_index(rng, 191));
        GeneratorSet q = random_generators(rng, n);
        ClipBox box = ClipBox::around(q.positions);
        VoronoiDiagram d = compute_diagram(q, box, opt.threads);
        std::vector<std::uint8_t> occ(d.cells.size());
        for (std::size_t i = 0; i < occ.size(); ++i)
            occ[i] = (!d.cells[i].clipped && uniform01(rng) < 0.5) ? 1 : 0;

        VoroMeshSurface surf = extract_voromesh(d, occ);
        if (surf.empty()) continue;
        surf = repair_nonmanifold(surf);
        WatertightReport rep = check_watertight(surf, opt.threads);
        if (!rep.watertight()) {
            e.pass = false;
            e.detail = "instance " + std::to_string(inst) + ": boundary=" +
                       std::to_string(rep.boundary_edges) + " nonmanifold=" +
                       std::to_string(rep.nonmanifold_edges) + " selfx=" +
                       std::to_string(rep.self_intersections);
        }
    }
    if (e.pass) e.detail = "all randomized extractions watertight";
    return e;
}

} // namespace

SelfCheckReport run_selfcheck(const SelfCheckOptions& options) {
    SelfCheckReport report;
    report.entries.push_back(theorem1_check(options));
    report.entries.push_back(gradient_check(options));
    report.entries.push_back(volume_check(options));
    report.entries.push_back(knn_truncation_check(options));
    report.entries.push_back(watertight_check(options));
    return report;
}

} // namespace voromesh
