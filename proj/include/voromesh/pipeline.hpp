#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "voromesh/extraction.hpp"
#include "voromesh/metrics.hpp"
#include "voromesh/optimizer.hpp"

namespace voromesh {

struct PipelineConfig {
    std::string input_path;
    std::string out_dir;
    FitConfig fit;
    std::size_t sample_count = 0; // 0 = 150 * grid_resolution^2
    std::size_t metric_samples = 100000;
    std::uint64_t metric_seed = 0;
    bool write_artifacts = true;

    std::size_t effective_sample_count() const {
        if (sample_count > 0) return sample_count;
        return static_cast<std::size_t>(150) * static_cast<std::size_t>(fit.grid_resolution) *
               static_cast<std::size_t>(fit.grid_resolution);
    }
};

struct PipelineResult {
    NormalizationTransform transform;
    TriangleMesh normalized_input;
    GeneratorSet generators; // fitted, occupancy-tagged
    VoroMeshSurface surface;
    WatertightReport watertight;
    MetricReport metrics;
    std::vector<TracePoint> trace;
    std::string warnings;
};

// Input sanity probe: winding numbers of a watertight mesh are near-integral
// everywhere and ~0 far outside.
bool winding_sanity_check(const TriangleMesh& mesh, std::uint64_t seed, std::string* detail = nullptr);

// normalize -> sample -> init -> fit -> diagram -> occupancy -> extract ->
// repair -> check -> metrics, with artifacts written under out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

// Re-extraction from an existing tagged generator set (noise study): uniform
// noise in [-delta_fraction*h, +delta_fraction*h] per coordinate with
// h = 1/grid_resolution; kept occupancy, newly clipped cells forced outside.
struct PerturbResult {
    GeneratorSet generators;
    VoroMeshSurface surface;
    WatertightReport watertight;
};

PerturbResult perturb_and_extract(const GeneratorSet& tagged, double delta_fraction,
                                  int grid_resolution, std::uint64_t seed, int threads);

// Extraction stage alone (diagram + occupancy handling + repair + check).
PerturbResult extract_from_generators(const GeneratorSet& tagged, int threads);

// Generators interchange file: "x y z occ" rows, occ in {-1,0,1} (-1 untagged),
// with a "# grid <g>" header carrying the voxel resolution.
void save_generators(const GeneratorSet& generators, int grid_resolution, const std::string& path);
GeneratorSet load_generators(const std::string& path, int* grid_resolution = nullptr);

} // namespace voromesh
