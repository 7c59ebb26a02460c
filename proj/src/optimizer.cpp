#include "voromesh/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "voromesh/rng.hpp"

namespace voromesh {

void FitConfig::validate(std::size_t sample_count) const {
    if (grid_resolution < 2) throw std::invalid_argument("fit: grid_resolution must be >= 2");
    if (steps < 0) throw std::invalid_argument("fit: steps must be >= 0");
    if (learning_rate <= 0.0) throw std::invalid_argument("fit: learning_rate must be positive");
    if (minibatch_fraction <= 0.0 || minibatch_fraction > 1.0)
        throw std::invalid_argument("fit: minibatch_fraction must be in (0,1]");
    if (minibatch_fraction * static_cast<double>(sample_count) < 1.0)
        throw std::invalid_argument("fit: minibatch would be empty");
    if (k < 2) throw std::invalid_argument("fit: k must be >= 2");
    if (lambda < 0.0) throw std::invalid_argument("fit: lambda must be >= 0");
    for (int s : halving_steps)
        if (s < 0) throw std::invalid_argument("fit: negative halving step");
}

GeneratorSet init_generators(const SurfacePointSet& samples, int grid_resolution, int* clamped) {
    if (samples.size() == 0) throw std::invalid_argument("init_generators: no samples");
    if (grid_resolution < 1) throw std::invalid_argument("init_generators: grid_resolution < 1");

    const int g = grid_resolution;
    const double h = 1.0 / g;
    int clamped_count = 0;

    // Voxel (ix,iy,iz) spans [-0.5 + i*h, -0.5 + (i+1)*h) per axis.
    std::map<std::array<int, 3>, bool> marked;
    for (const Vec3& p : samples.points) {
        std::array<int, 3> v;
        bool was_clamped = false;
        for (int a = 0; a < 3; ++a) {
            int i = static_cast<int>(std::floor((p[a] + 0.5) / h));
            if (i < 0) { i = 0; was_clamped = true; }
            if (i >= g) { i = g - 1; was_clamped = p[a] > 0.5 || was_clamped; }
            v[a] = i;
        }
        if (was_clamped) ++clamped_count;
        marked[v] = true;
    }
    if (clamped) *clamped = clamped_count;

    // Dedup the 8 corner nodes of every marked voxel; node (i,j,k) in [0,g]^3.
    std::map<std::array<int, 3>, bool> nodes;
    for (const auto& [v, _] : marked) {
        for (int dx = 0; dx <= 1; ++dx)
            for (int dy = 0; dy <= 1; ++dy)
                for (int dz = 0; dz <= 1; ++dz)
                    nodes[{v[0] + dx, v[1] + dy, v[2] + dz}] = true;
    }

    std::vector<Vec3> positions;
    positions.reserve(nodes.size());
    for (const auto& [n, _] : nodes)
        positions.push_back({-0.5 + n[0] * h, -0.5 + n[1] * h, -0.5 + n[2] * h});
    return GeneratorSet::from_positions(std::move(positions));
}

RegularizerTerm offset_regularizer(const GeneratorSet& generators) {
    RegularizerTerm out;
    out.gradient.assign(generators.size(), Vec3{});
    int argmax = -1;
    for (std::size_t i = 0; i < generators.size(); ++i) {
        double d = dist(generators.positions[i], generators.initial_positions[i]);
        if (d > out.value) {
            out.value = d;
            argmax = static_cast<int>(i);
        }
    }
    if (argmax >= 0 && out.value > 0.0) {
        Vec3 delta = generators.positions[argmax] - generators.initial_positions[argmax];
        out.gradient[argmax] = delta / out.value;
    }
    return out;
}

void AdamState::step(std::vector<Vec3>& params, const std::vector<Vec3>& grad, double lr) {
    if (params.size() != grad.size() || params.size() != m.size())
        throw std::invalid_argument("adam_step: dimension mismatch");
    for (const auto& g : grad)
        if (!is_finite(g)) throw std::runtime_error("adam_step: non-finite gradient");

    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            double g = grad[i][a];
            m[i][a] = beta1 * m[i][a] + (1.0 - beta1) * g;
            v[i][a] = beta2 * v[i][a] + (1.0 - beta2) * g * g;
            double mhat = m[i][a] / c1;
            double vhat = v[i][a] / c2;
            params[i][a] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

namespace {

// Halving steps at or past the step budget never fire.
double learning_rate_at(const FitConfig& config, int step) {
    double lr = config.learning_rate;
    for (int s : config.halving_steps)
        if (s < config.steps && step >= s) lr *= 0.5;
    return lr;
}

// Nudge exact duplicates apart; diagram construction needs distinct sites.
int jitter_duplicates(GeneratorSet& q, std::uint64_t seed) {
    if (q.size() < 2) return 0;
    KdTree tree(q.positions);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    int jittered = 0;
    std::vector<Neighbor> nn;
    for (std::size_t i = 0; i < q.size(); ++i) {
        tree.query_into(q.positions[i], 2, nn);
        for (const auto& n : nn) {
            if (n.index != static_cast<int>(i) && n.index > static_cast<int>(i) &&
                n.dist_sq <= 1e-24) {
                q.positions[n.index] += uniform_unit_vec(rng) * 1e-9;
                ++jittered;
            }
        }
    }
    return jittered;
}

} // namespace

FitResult fit(const SurfacePointSet& samples, const GeneratorSet& initial, const FitConfig& config) {
    config.validate(samples.size());
    if (initial.size() == 0) throw std::invalid_argument("fit: no generators");
    if (samples.size() == 0) throw std::invalid_argument("fit: no samples");
    if (config.k > static_cast<int>(initial.size()))
        throw std::invalid_argument("fit: k exceeds generator count");

    FitResult result;
    result.generators = initial;
    auto& q = result.generators;

    const std::size_t batch_size = static_cast<std::size_t>(
        std::ceil(config.minibatch_fraction * static_cast<double>(samples.size())));

    AdamState adam(q.size());
    Rng rng(config.seed);

    // Partial Fisher-Yates over a persistent permutation: the first
    // batch_size entries after each pass are a uniform fresh subset.
    std::vector<std::uint32_t> perm(samples.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
    std::vector<Vec3> batch(batch_size);

    auto full_loss = [&]() {
        KdTree index = build_index(q);
        return voroloss(samples.points, q, config.k, &index, config.threads);
    };

    for (int step = 0; step < config.steps; ++step) {
        for (std::size_t i = 0; i < batch_size; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, perm.size() - i));
            std::swap(perm[i], perm[j]);
            batch[i] = samples.points[perm[i]];
        }

        const double lr = learning_rate_at(config, step);
        KdTree index = build_index(q);
        VoroLossGrad lg = voroloss_with_grad(batch, q, config.k, &index, config.threads);

        double batch_loss = lg.loss / static_cast<double>(batch_size);
        std::vector<Vec3>& grad = lg.gradient;
        for (auto& g : grad) g *= 1.0 / static_cast<double>(batch_size);

        if (config.lambda > 0.0) {
            RegularizerTerm reg = offset_regularizer(q);
            batch_loss += config.lambda * reg.value;
            for (std::size_t i = 0; i < grad.size(); ++i)
                grad[i] += reg.gradient[i] * config.lambda;
        }
        if (!std::isfinite(batch_loss)) throw std::runtime_error("fit: non-finite loss");

        TracePoint tp;
        tp.step = step;
        tp.lr = lr;
        tp.batch_loss = batch_loss;
        if (config.full_loss_every > 0 && step % config.full_loss_every == 0)
            tp.full_loss = full_loss();
        result.trace.push_back(tp);

        adam.step(q.positions, grad, lr);
    }

    result.duplicate_jitters = jitter_duplicates(q, config.seed);

    TracePoint final_tp;
    final_tp.step = config.steps;
    final_tp.lr = learning_rate_at(config, config.steps);
    final_tp.batch_loss = std::numeric_limits<double>::quiet_NaN();
    if (config.full_loss_every > 0) final_tp.full_loss = full_loss();
    result.trace.push_back(final_tp);

    return result;
}

void write_trace_csv(const std::vector<TracePoint>& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fprintf(f, "step,lr,minibatch_loss,full_loss\n");
    for (const auto& tp : trace) {
        if (std::isnan(tp.batch_loss))
            std::fprintf(f, "%d,%.17g,,", tp.step, tp.lr);
        else
            std::fprintf(f, "%d,%.17g,%.17g,", tp.step, tp.lr, tp.batch_loss);
        if (tp.full_loss) std::fprintf(f, "%.17g", *tp.full_loss);
        std::fputc('\n', f);
    }
    std::fclose(f);
}

} // namespace voromesh
