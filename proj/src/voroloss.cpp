#include "voromesh/voroloss.hpp"

#include <cmath>
#include <stdexcept>

#include "voromesh/parallel.hpp"

namespace voromesh {

KdTree build_index(const GeneratorSet& generators) {
    if (generators.positions.empty())
        throw std::invalid_argument("build_index: no generators");
    return KdTree(generators.positions);
}

double bisector_distance(const Vec3& x, const Vec3& q_i, const Vec3& q_j) {
    Vec3 e = q_j - q_i;
    double len = norm(e);
    if (len <= 1e-300)
        throw std::invalid_argument("bisector_distance: coincident generators");
    Vec3 m = (q_i + q_j) * 0.5;
    return std::abs(dot(x - m, e) / len);
}

namespace {

struct SampleTerm {
    double loss = 0.0;
    int gen_i = -1, gen_j = -1;
    Vec3 grad_i{}, grad_j{};
};

void check_args(std::span<const Vec3> samples, const GeneratorSet& generators, int k) {
    (void)samples;
    if (generators.size() < 2)
        throw std::invalid_argument("voroloss: need at least 2 generators");
    if (k < 2 || k > static_cast<int>(generators.size()))
        throw std::invalid_argument("voroloss: k must be in [2, |Q|]");
}

// Signed bisector offset s = (x - m).u plus its gradients w.r.t. both
// generators; the per-sample loss term is s^2.
struct BisectorEval {
    double s = 0.0;
    Vec3 ds_dqi{}, ds_dqj{};
};

inline BisectorEval eval_bisector(const Vec3& x, const Vec3& qi, const Vec3& qj, bool with_grad) {
    BisectorEval out;
    Vec3 e = qj - qi;
    double len = norm(e);
    Vec3 u = e / len;
    Vec3 w = x - (qi + qj) * 0.5;
    out.s = dot(w, u);
    if (with_grad) {
        double s_over_len = out.s / len;
        out.ds_dqi = u * -0.5 - w / len + u * s_over_len;
        out.ds_dqj = u * -0.5 + w / len - u * s_over_len;
    }
    return out;
}

// One sample's contribution: nearest generator i, best of the k-1 candidate
// bisectors (ties to the lowest generator index).
template <bool WithGrad>
SampleTerm sample_term(const Vec3& x, std::span<const Vec3> q, const KdTree& index, int k,
                       std::vector<Neighbor>& scratch) {
    index.query_into(x, k, scratch);
    const int gi = scratch[0].index;

    double best_abs = -1.0;
    int best_j = -1;
    for (std::size_t c = 1; c < scratch.size(); ++c) {
        int j = scratch[c].index;
        double s = dot(x - (q[gi] + q[j]) * 0.5, q[j] - q[gi]) / dist(q[j], q[gi]);
        double a = std::abs(s);
        if (best_j < 0 || a < best_abs || (a == best_abs && j < best_j)) {
            best_abs = a;
            best_j = j;
        }
    }

    SampleTerm term;
    term.gen_i = gi;
    term.gen_j = best_j;
    BisectorEval ev = eval_bisector(x, q[gi], q[best_j], WithGrad);
    term.loss = ev.s * ev.s;
    if constexpr (WithGrad) {
        term.grad_i = ev.ds_dqi * (2.0 * ev.s);
        term.grad_j = ev.ds_dqj * (2.0 * ev.s);
    }
    return term;
}

template <bool WithGrad>
std::vector<SampleTerm> all_terms(std::span<const Vec3> samples, const GeneratorSet& generators,
                                  int k, const KdTree* index, int threads) {
    check_args(samples, generators, k);
    KdTree local;
    if (!index) {
        local.build(generators.positions);
        index = &local;
    }
    std::vector<SampleTerm> terms(samples.size());
    std::span<const Vec3> q(generators.positions);
    parallel_for(samples.size(), threads, [&](std::size_t s) {
        thread_local std::vector<Neighbor> scratch;
        terms[s] = sample_term<WithGrad>(samples[s], q, *index, k, scratch);
    });
    return terms;
}

} // namespace

double voroloss(std::span<const Vec3> samples, const GeneratorSet& generators, int k,
                const KdTree* index, int threads) {
    auto terms = all_terms<false>(samples, generators, k, index, threads);
    double loss = 0.0;
    for (const auto& t : terms) loss += t.loss;
    return loss;
}

VoroLossGrad voroloss_with_grad(std::span<const Vec3> samples, const GeneratorSet& generators,
                                int k, const KdTree* index, int threads) {
    auto terms = all_terms<true>(samples, generators, k, index, threads);
    VoroLossGrad out;
    out.gradient.assign(generators.size(), Vec3{});
    for (const auto& t : terms) {
        out.loss += t.loss;
        out.gradient[t.gen_i] += t.grad_i;
        out.gradient[t.gen_j] += t.grad_j;
    }
    return out;
}

} // namespace voromesh
