#pragma once

#include <cstdint>
#include <string>

#include "voromesh/mesh.hpp"

namespace voromesh {

// Sample-to-sample evaluation metrics in the normalized frame (the
// NDC/NMC-style convention: area-weighted samples on both meshes, nearest
// neighbors between the two samplings).
struct MetricReport {
    double chamfer = 0.0;            // raw symmetric mean squared NN distance
    double f1 = 0.0, precision = 0.0, recall = 0.0;
    double normal_consistency = 0.0;
    double delta = 0.003;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;

    double chamfer_x1e5() const { return chamfer * 1e5; }
    std::string to_json() const;
    std::string to_csv_row() const; // one line, no header
    static std::string csv_header();
};

double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n, std::uint64_t seed,
               int threads = 1);

struct F1Result {
    double f1 = 0.0, precision = 0.0, recall = 0.0;
};

F1Result f1_score(const TriangleMesh& a, const TriangleMesh& b, std::size_t n,
                  double delta = 0.003, std::uint64_t seed = 0, int threads = 1);

double normal_consistency(const TriangleMesh& a, const TriangleMesh& b, std::size_t n,
                          std::uint64_t seed = 0, int threads = 1);

// All three metrics from one shared sampling pass.
MetricReport evaluate_metrics(const TriangleMesh& a, const TriangleMesh& b, std::size_t n,
                              double delta = 0.003, std::uint64_t seed = 0, int threads = 1);

} // namespace voromesh
