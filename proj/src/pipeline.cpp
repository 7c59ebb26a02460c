#include "voromesh/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "voromesh/mesh_io.hpp"
#include "voromesh/rng.hpp"
#include "voromesh/sampling.hpp"

namespace voromesh {

namespace fs = std::filesystem;
using nlohmann::json;

bool winding_sanity_check(const TriangleMesh& mesh, std::uint64_t seed, std::string* detail) {
    Aabb b = mesh.bounds();
    Vec3 ext = b.extent();
    double pad = std::max({ext.x, ext.y, ext.z, 1e-9});
    Rng rng(seed ^ 0xda3e39cb94b95bdbull);

    // Far-field probes must be outside; random near-field probes must have
    // near-integral winding numbers.
    Vec3 far = b.hi + Vec3{pad, pad, pad};
    double w_far = winding_number(mesh, far);
    if (std::abs(w_far) > 0.1) {
        if (detail) *detail = "far-field winding " + std::to_string(w_far);
        return false;
    }
    for (int i = 0; i < 48; ++i) {
        Vec3 p{uniform_in(rng, b.lo.x - 0.2 * pad, b.hi.x + 0.2 * pad),
               uniform_in(rng, b.lo.y - 0.2 * pad, b.hi.y + 0.2 * pad),
               uniform_in(rng, b.lo.z - 0.2 * pad, b.hi.z + 0.2 * pad)};
        double w = winding_number(mesh, p);
        if (std::abs(w - std::round(w)) > 0.1) {
            if (detail)
                *detail = "fractional winding " + std::to_string(w) + " at probe " +
                          std::to_string(i);
            return false;
        }
    }
    return true;
}

PerturbResult extract_from_generators(const GeneratorSet& tagged, int threads) {
    if (!tagged.tagged())
        throw std::invalid_argument("extract_from_generators: generators lack occupancy");
    PerturbResult out;
    out.generators = tagged;

    ClipBox box = ClipBox::around(out.generators.positions);
    VoronoiDiagram diagram = compute_diagram(out.generators, box, threads);

    // The watertight guarantee needs clipped cells outside, whatever the
    // stored occupancy says.
    std::vector<std::uint8_t> occ(out.generators.occupancy.begin(), out.generators.occupancy.end());
    for (std::size_t i = 0; i < occ.size(); ++i)
        if (diagram.cells[i].clipped) occ[i] = 0;
    out.generators.occupancy.assign(occ.begin(), occ.end());

    out.surface = repair_nonmanifold(extract_voromesh(diagram, occ));
    out.watertight = check_watertight(out.surface, threads);
    return out;
}

PerturbResult perturb_and_extract(const GeneratorSet& tagged, double delta_fraction,
                                  int grid_resolution, std::uint64_t seed, int threads) {
    if (!tagged.tagged())
        throw std::invalid_argument("perturb_and_extract: generators lack occupancy");
    if (grid_resolution < 1)
        throw std::invalid_argument("perturb_and_extract: bad grid resolution");

    GeneratorSet moved = tagged;
    const double h = 1.0 / grid_resolution;
    const double amp = delta_fraction * h;
    Rng rng(seed);
    for (auto& p : moved.positions)
        p += uniform_vec(rng, -amp, amp);

    // Coincident positions would break diagram construction.
    if (moved.size() >= 2) {
        KdTree tree(moved.positions);
        if (tree.min_pairwise_distance() <= 1e-12) {
            for (auto& p : moved.positions) p += uniform_unit_vec(rng) * 1e-9;
        }
    }
    return extract_from_generators(moved, threads);
}

void save_generators(const GeneratorSet& generators, int grid_resolution, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fprintf(f, "# voromesh generators\n# grid %d\n# count %zu\n", grid_resolution,
                 generators.size());
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const Vec3& p = generators.positions[i];
        int occ = generators.occupancy.empty() ? -1 : static_cast<int>(generators.occupancy[i]);
        std::fprintf(f, "%.17g %.17g %.17g %d\n", p.x, p.y, p.z, occ);
    }
    std::fclose(f);
}

GeneratorSet load_generators(const std::string& path, int* grid_resolution) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    GeneratorSet g;
    std::vector<std::uint8_t> occ;
    bool any_tagged = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "grid" && grid_resolution) hs >> *grid_resolution;
            continue;
        }
        std::istringstream ls(line);
        Vec3 p;
        int o = -1;
        if (!(ls >> p.x >> p.y >> p.z))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed generator");
        ls >> o;
        g.positions.push_back(p);
        occ.push_back(o > 0 ? 1 : 0);
        if (o >= 0) any_tagged = true;
    }
    if (g.positions.empty()) throw std::runtime_error(path + ": no generators");
    g.initial_positions = g.positions;
    if (any_tagged) g.occupancy = std::move(occ);
    return g;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    PipelineResult result;
    json timings;
    auto t_start = std::chrono::steady_clock::now();
    auto stage_start = t_start;
    auto lap = [&](const char* name) {
        timings[name] = seconds_since(stage_start);
        stage_start = std::chrono::steady_clock::now();
    };

    LoadReport load_report;
    TriangleMesh input = load_mesh(config.input_path, &load_report);
    std::string sanity;
    if (!winding_sanity_check(input, config.fit.seed, &sanity))
        throw MeshIoError("input mesh failed the watertightness sanity check (" + sanity + ")");
    lap("load_s");

    auto [normalized_mesh, transform] = normalize(input);
    result.transform = transform;
    result.normalized_input = std::move(normalized_mesh);
    lap("normalize_s");

    SurfacePointSet samples =
        sample_surface(result.normalized_input, config.effective_sample_count(), config.fit.seed);
    lap("sample_s");

    int clamped = 0;
    GeneratorSet q0 = init_generators(samples, config.fit.grid_resolution, &clamped);
    if (clamped > 0)
        result.warnings += "clamped " + std::to_string(clamped) + " samples into the unit box; ";
    lap("init_s");

    FitResult fitres = fit(samples, q0, config.fit);
    result.trace = std::move(fitres.trace);
    if (fitres.duplicate_jitters > 0)
        result.warnings += "jittered " + std::to_string(fitres.duplicate_jitters) +
                           " duplicate generators; ";
    lap("fit_s");

    ClipBox box = ClipBox::around(fitres.generators.positions);
    VoronoiDiagram diagram = compute_diagram(fitres.generators, box, config.fit.threads);
    lap("diagram_s");

    std::vector<std::uint8_t> occ =
        assign_occupancy(diagram, result.normalized_input, config.fit.threads);
    result.generators = std::move(fitres.generators);
    result.generators.occupancy = occ;
    lap("occupancy_s");

    result.surface = repair_nonmanifold(extract_voromesh(diagram, occ));
    if (result.surface.empty()) result.warnings += "extraction produced an empty mesh; ";
    lap("extract_s");

    result.watertight = check_watertight(result.surface, config.fit.threads);
    lap("validate_s");

    if (!result.surface.empty()) {
        result.metrics = evaluate_metrics(result.normalized_input,
                                          result.surface.mesh.triangulated(),
                                          config.metric_samples, 0.003, config.metric_seed,
                                          config.fit.threads);
    }
    lap("metrics_s");

    if (config.write_artifacts) {
        fs::create_directories(config.out_dir);
        auto path = [&](const char* name) { return (fs::path(config.out_dir) / name).string(); };

        save_polygon_mesh(result.surface.mesh, path("voromesh.obj"));
        save_triangle_mesh(result.normalized_input, path("input_normalized.obj"));
        save_generators(result.generators, config.fit.grid_resolution, path("generators.xyz"));
        write_trace_csv(result.trace, path("trace.csv"));
        write_text(path("metrics.json"), result.metrics.to_json());
        write_text(path("watertight.json"), result.watertight.to_json());
        write_text(path("metrics.csv"),
                   MetricReport::csv_header() + "\n" + result.metrics.to_csv_row() + "\n");

        json manifest;
        manifest["command"] = "pipeline";
        manifest["input"] = config.input_path;
        manifest["grid"] = config.fit.grid_resolution;
        manifest["samples"] = config.effective_sample_count();
        manifest["steps"] = config.fit.steps;
        manifest["lr"] = config.fit.learning_rate;
        manifest["minibatch"] = config.fit.minibatch_fraction;
        manifest["k"] = config.fit.k;
        manifest["lambda"] = config.fit.lambda;
        manifest["seed"] = config.fit.seed;
        manifest["threads"] = config.fit.threads;
        manifest["metric_samples"] = config.metric_samples;
        manifest["metric_seed"] = config.metric_seed;
        manifest["generators"] = result.generators.size();
        manifest["surface_faces"] = result.surface.mesh.faces.size();
        manifest["watertight"] = result.watertight.watertight();
        manifest["normalization"] = {{"scale", result.transform.scale},
                                     {"translation",
                                      {result.transform.translation.x,
                                       result.transform.translation.y,
                                       result.transform.translation.z}}};
        manifest["load_report"] = {{"degenerate_faces_dropped", load_report.degenerate_faces_dropped},
                                   {"zero_area_faces", load_report.zero_area_faces}};
        if (!result.warnings.empty()) manifest["warnings"] = result.warnings;
        manifest["version"] = "0.1.0";
        timings["total_s"] = seconds_since(t_start);
        manifest["timings"] = timings;
        write_text(path("manifest.json"), manifest.dump(2) + "\n");
    }
    return result;
}

} // namespace voromesh
