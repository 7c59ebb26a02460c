#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "voromesh/mesh_io.hpp"
#include "voromesh/pipeline.hpp"
#include "voromesh/selfcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voromesh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInputData = 2;
constexpr int kExitValidation = 3;

struct CommonOpts {
    int grid = 32;
    std::size_t samples = 0; // 0 = 150*grid^2
    int steps = 400;
    double lr = 0.005;
    double minibatch = 0.2;
    int k = 32;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    std::string config;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_fit_flags) {
    if (with_fit_flags) {
        cmd->add_option("--grid", o.grid, "Voxel grid resolution g_s");
        cmd->add_option("--samples", o.samples, "Surface sample count (0 = 150*grid^2)");
        cmd->add_option("--steps", o.steps, "Optimization steps");
        cmd->add_option("--lr", o.lr, "Adam learning rate");
        cmd->add_option("--minibatch", o.minibatch, "Minibatch fraction of the sample set");
        cmd->add_option("--k", o.k, "Candidate neighbors per sample");
        cmd->add_option("--lambda", o.lambda, "Offset regularizer weight");
    }
    cmd->add_option("--seed", o.seed, "Random seed; all randomness derives from it");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--config", o.config, "JSON config file; command-line flags win");
}

// Config file: flat JSON keys mirroring the flags. Explicit flags win.
void apply_config_file(CLI::App* cmd, CommonOpts& o) {
    if (o.config.empty()) return;
    std::ifstream in(o.config);
    if (!in) throw MeshIoError("cannot open config '" + o.config + "'");
    json j = json::parse(in, nullptr, true, true);

    auto unset = [&](const char* flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    };
    if (j.contains("grid") && unset("--grid")) o.grid = j["grid"].get<int>();
    if (j.contains("samples") && unset("--samples")) o.samples = j["samples"].get<std::size_t>();
    if (j.contains("steps") && unset("--steps")) o.steps = j["steps"].get<int>();
    if (j.contains("lr") && unset("--lr")) o.lr = j["lr"].get<double>();
    if (j.contains("minibatch") && unset("--minibatch")) o.minibatch = j["minibatch"].get<double>();
    if (j.contains("k") && unset("--k")) o.k = j["k"].get<int>();
    if (j.contains("lambda") && unset("--lambda")) o.lambda = j["lambda"].get<double>();
    if (j.contains("seed") && unset("--seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads") && unset("--threads")) o.threads = j["threads"].get<int>();
    if (j.contains("out") && unset("--out")) o.out = j["out"].get<std::string>();
}

int resolve_thread_flag(CLI::App* cmd, int flag_value) {
    const CLI::Option* opt = cmd->get_option_no_throw("--threads");
    if (opt != nullptr && opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("VOROMESH_THREADS")) return std::atoi(env);
    return flag_value;
}

FitConfig make_fit_config(const CommonOpts& o) {
    FitConfig f;
    f.grid_resolution = o.grid;
    f.steps = o.steps;
    f.learning_rate = o.lr;
    f.minibatch_fraction = o.minibatch;
    f.k = o.k;
    f.lambda = o.lambda;
    f.seed = o.seed;
    f.threads = o.threads;
    return f;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& extra) {
    json manifest = extra;
    manifest["command"] = command;
    manifest["version"] = "0.1.0";
    write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Watertight surface meshing by direct optimization of Voronoi generators"};
    app.require_subcommand(1);

    // pipeline -----------------------------------------------------------
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Full run: fit, extract, validate, evaluate");
    CommonOpts po;
    std::string p_input;
    std::size_t p_metric_n = 100000;
    std::uint64_t p_metric_seed = 0;
    pipeline_cmd->add_option("--input", p_input, "Watertight input mesh (OBJ/OFF)")->required();
    add_common(pipeline_cmd, po, true);
    pipeline_cmd->add_option("--metric-n", p_metric_n, "Metric samples per side");
    pipeline_cmd->add_option("--metric-seed", p_metric_seed, "Metric sampling seed");

    // fit ------------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "Optimize generators for an input mesh");
    CommonOpts fo;
    std::string f_input;
    fit_cmd->add_option("--input", f_input, "Watertight input mesh (OBJ/OFF)")->required();
    add_common(fit_cmd, fo, true);

    // extract ----------------------------------------------------------------
    auto* extract_cmd = app.add_subcommand("extract", "Build the surface from saved generators");
    CommonOpts eo;
    std::string e_generators, e_input;
    extract_cmd->add_option("--generators", e_generators, "Generators file (x y z occ)")->required();
    extract_cmd->add_option("--input", e_input,
                            "Normalized mesh for occupancy tagging (required if untagged)");
    add_common(extract_cmd, eo, false);

    // eval ---------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "CD / F1 / NC between two meshes");
    CommonOpts vo;
    std::string v_input, v_recon;
    std::size_t v_metric_n = 100000;
    eval_cmd->add_option("--input", v_input, "Reference mesh")->required();
    eval_cmd->add_option("--recon", v_recon, "Reconstruction mesh")->required();
    eval_cmd->add_option("--metric-n", v_metric_n, "Metric samples per side");
    add_common(eval_cmd, vo, false);

    // perturb -------------------------------------------------------------
    auto* perturb_cmd = app.add_subcommand("perturb", "Noise study on saved tagged generators");
    CommonOpts ro;
    std::string r_generators, r_input;
    double r_delta = 0.0;
    perturb_cmd->add_option("--generators", r_generators, "Tagged generators file")->required();
    perturb_cmd->add_option("--delta", r_delta, "Noise amplitude, percent of voxel size")->required();
    perturb_cmd->add_option("--input", r_input, "Optional normalized mesh for metrics");
    perturb_cmd->add_option("--grid", ro.grid, "Voxel resolution (default: generators header)");
    add_common(perturb_cmd, ro, false);

    // selfcheck -----------------------------------------------------------
    auto* selfcheck_cmd = app.add_subcommand("selfcheck", "Randomized consistency suite");
    CommonOpts so;
    add_common(selfcheck_cmd, so, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (pipeline_cmd->parsed()) {
            apply_config_file(pipeline_cmd, po);
            po.threads = resolve_thread_flag(pipeline_cmd, po.threads);
            if (po.out.empty()) throw CLI::ValidationError("--out", "output directory required");

            PipelineConfig cfg;
            cfg.input_path = p_input;
            cfg.out_dir = po.out;
            cfg.fit = make_fit_config(po);
            cfg.sample_count = po.samples;
            cfg.metric_samples = p_metric_n;
            cfg.metric_seed = p_metric_seed;

            PipelineResult res = run_pipeline(cfg);
            if (!res.warnings.empty()) std::cerr << "warning: " << res.warnings << "\n";
            std::cout << "generators: " << res.generators.size()
                      << "  faces: " << res.surface.mesh.faces.size()
                      << "  watertight: " << (res.watertight.watertight() ? "yes" : "no")
                      << "  cd_x1e5: " << res.metrics.chamfer_x1e5()
                      << "  f1: " << res.metrics.f1
                      << "  nc: " << res.metrics.normal_consistency << "\n";
            return res.watertight.watertight() ? kExitOk : kExitValidation;
        }

        if (fit_cmd->parsed()) {
            apply_config_file(fit_cmd, fo);
            fo.threads = resolve_thread_flag(fit_cmd, fo.threads);
            if (fo.out.empty()) throw CLI::ValidationError("--out", "output directory required");
            fs::create_directories(fo.out);

            TriangleMesh input = load_mesh(f_input);
            std::string sanity;
            if (!winding_sanity_check(input, fo.seed, &sanity))
                throw MeshIoError("input mesh failed the watertightness sanity check (" + sanity + ")");
            auto [normalized_mesh, transform] = normalize(input);

            std::size_t count = fo.samples > 0
                                    ? fo.samples
                                    : static_cast<std::size_t>(150) * fo.grid * fo.grid;
            SurfacePointSet samples = sample_surface(normalized_mesh, count, fo.seed);
            GeneratorSet q0 = init_generators(samples, fo.grid);
            FitResult res = fit(samples, q0, make_fit_config(fo));

            save_generators(res.generators, fo.grid, (fs::path(fo.out) / "generators.xyz").string());
            write_trace_csv(res.trace, (fs::path(fo.out) / "trace.csv").string());
            save_triangle_mesh(normalized_mesh,
                               (fs::path(fo.out) / "input_normalized.obj").string());
            write_manifest(fo.out, "fit",
                           {{"input", f_input},
                            {"grid", fo.grid},
                            {"samples", count},
                            {"steps", fo.steps},
                            {"seed", fo.seed},
                            {"generators", res.generators.size()}});
            std::cout << "generators: " << res.generators.size() << "\n";
            return kExitOk;
        }

        if (extract_cmd->parsed()) {
            apply_config_file(extract_cmd, eo);
            eo.threads = resolve_thread_flag(extract_cmd, eo.threads);
            if (eo.out.empty()) throw CLI::ValidationError("--out", "output directory required");
            fs::create_directories(eo.out);

            int grid = 0;
            GeneratorSet gens = load_generators(e_generators, &grid);
            if (!gens.tagged()) {
                if (e_input.empty())
                    throw MeshIoError("generators are untagged; pass --input to assign occupancy");
                TriangleMesh gt = load_mesh(e_input);
                ClipBox box = ClipBox::around(gens.positions);
                VoronoiDiagram diagram = compute_diagram(gens, box, eo.threads);
                gens.occupancy = assign_occupancy(diagram, gt, eo.threads);
            }

            PerturbResult res = extract_from_generators(gens, eo.threads);
            save_polygon_mesh(res.surface.mesh, (fs::path(eo.out) / "voromesh.obj").string());
            write_text_file((fs::path(eo.out) / "watertight.json").string(),
                            res.watertight.to_json());
            write_manifest(eo.out, "extract",
                           {{"generators_file", e_generators},
                            {"generators", gens.size()},
                            {"watertight", res.watertight.watertight()}});
            std::cout << "faces: " << res.surface.mesh.faces.size() << "  watertight: "
                      << (res.watertight.watertight() ? "yes" : "no") << "\n";
            return res.watertight.watertight() ? kExitOk : kExitValidation;
        }

        if (eval_cmd->parsed()) {
            apply_config_file(eval_cmd, vo);
            vo.threads = resolve_thread_flag(eval_cmd, vo.threads);
            TriangleMesh a = load_mesh(v_input);
            TriangleMesh b = load_mesh(v_recon);
            MetricReport rep = evaluate_metrics(a, b, v_metric_n, 0.003, vo.seed, vo.threads);
            std::cout << rep.to_json();
            if (!vo.out.empty()) {
                fs::create_directories(vo.out);
                write_text_file((fs::path(vo.out) / "metrics.json").string(), rep.to_json());
                write_text_file((fs::path(vo.out) / "metrics.csv").string(),
                                MetricReport::csv_header() + "\n" + rep.to_csv_row() + "\n");
                write_manifest(vo.out, "eval", {{"input", v_input}, {"recon", v_recon}});
            }
            return kExitOk;
        }

        if (perturb_cmd->parsed()) {
            apply_config_file(perturb_cmd, ro);
            ro.threads = resolve_thread_flag(perturb_cmd, ro.threads);
            if (ro.out.empty()) throw CLI::ValidationError("--out", "output directory required");
            fs::create_directories(ro.out);

            int grid = 0;
            GeneratorSet gens = load_generators(r_generators, &grid);
            if (perturb_cmd->count("--grid") > 0) grid = ro.grid;
            if (grid < 1)
                throw MeshIoError("no grid resolution in generators header; pass --grid");
            if (!gens.tagged())
                throw MeshIoError("perturb needs tagged generators (run pipeline or extract first)");

            PerturbResult res =
                perturb_and_extract(gens, r_delta / 100.0, grid, ro.seed, ro.threads);
            save_polygon_mesh(res.surface.mesh, (fs::path(ro.out) / "voromesh.obj").string());
            save_generators(res.generators, grid, (fs::path(ro.out) / "generators.xyz").string());
            write_text_file((fs::path(ro.out) / "watertight.json").string(),
                            res.watertight.to_json());

            json manifest{{"generators_file", r_generators},
                          {"delta_percent", r_delta},
                          {"grid", grid},
                          {"seed", ro.seed},
                          {"watertight", res.watertight.watertight()}};
            if (!r_input.empty()) {
                TriangleMesh gt = load_mesh(r_input);
                MetricReport rep = evaluate_metrics(gt, res.surface.mesh.triangulated(), 100000,
                                                    0.003, ro.seed, ro.threads);
                write_text_file((fs::path(ro.out) / "metrics.json").string(), rep.to_json());
                manifest["cd"] = rep.chamfer;
            }
            write_manifest(ro.out, "perturb", manifest);
            std::cout << "watertight: " << (res.watertight.watertight() ? "yes" : "no") << "\n";
            return res.watertight.watertight() ? kExitOk : kExitValidation;
        }

        if (selfcheck_cmd->parsed()) {
            apply_config_file(selfcheck_cmd, so);
            so.threads = resolve_thread_flag(selfcheck_cmd, so.threads);
            SelfCheckOptions opts;
            opts.seed = so.seed;
            opts.threads = so.threads;
            SelfCheckReport report = run_selfcheck(opts);
            for (const auto& e : report.entries)
                std::cout << (e.pass ? "[PASS] " : "[FAIL] ") << e.name << ": " << e.detail << "\n";
            return report.all_pass() ? kExitOk : kExitValidation;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputData;
    }
    return kExitUsage;
}
