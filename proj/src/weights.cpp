#include "ctow/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctow/errors.hpp"

namespace ctow {

namespace {

void check_shapes(const std::vector<ProbMatrix>& ps, std::span<const double> w) {
    if (ps.empty()) throw DimensionMismatch("no probability matrices");
    if (w.size() != ps.size()) throw DimensionMismatch("weight count does not match learner count");
    for (const auto& p : ps) {
        if (p.rows() != ps[0].rows() || p.cols() != ps[0].cols())
            throw DimensionMismatch("probability matrices differ in shape");
    }
    if (ps[0].rows() == 0 || ps[0].cols() == 0)
        throw DimensionMismatch("empty probability matrix");
}

} // namespace

void check_weight_vector(const WeightVector& wv) {
    double sum = 0.0;
    for (double v : wv.w) {
        if (v < 0.0) throw InvalidFixedWeight("negative ensemble weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidFixedWeight("ensemble weights must sum to 1");
    if (wv.fixed_last && wv.w.back() != *wv.fixed_last)
        throw InvalidFixedWeight("pinned coordinate does not match its fixed value");
}

double prior_weight(double xi_hat, double alpha) {
    return 1.0 / (1.0 + 3.0 * std::exp(10.0 * (xi_hat - alpha)));
}

ProbMatrix ensemble_proba(const std::vector<ProbMatrix>& ps, std::span<const double> w) {
    check_shapes(ps, w);
    ProbMatrix out(ps[0].rows(), ps[0].cols(), 0.0);
    for (std::size_t k = 0; k < ps.size(); ++k) {
        const double wk = w[k];
        const auto& src = ps[k].data();
        auto& dst = out.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += wk * src[i];
    }
    return out;
}

double objective(const std::vector<ProbMatrix>& ps, std::span<const double> w, double mu,
                 double epsilon_clip) {
    ProbMatrix phat = ensemble_proba(ps, w);
    const double u = static_cast<double>(phat.rows());
    double entropy = 0.0;
    for (double p : phat.data()) entropy -= p * std::log(std::max(p, epsilon_clip));
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return entropy / u + mu * reg;
}

std::vector<double> gradient(const std::vector<ProbMatrix>& ps, std::span<const double> w,
                             double mu, double epsilon_clip) {
    ProbMatrix phat = ensemble_proba(ps, w);
    const double u = static_cast<double>(phat.rows());
    // -(1 + ln phat) is shared across k; compute it once
    std::vector<double> coeff(phat.data().size());
    for (std::size_t i = 0; i < coeff.size(); ++i)
        coeff[i] = -(1.0 + std::log(std::max(phat.data()[i], epsilon_clip)));
    std::vector<double> grad(w.size());
    for (std::size_t k = 0; k < ps.size(); ++k) {
        const auto& src = ps[k].data();
        double acc = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) acc += coeff[i] * src[i];
        grad[k] = acc / u + 2.0 * mu * w[k];
    }
    return grad;
}

std::vector<double> project_simplex(std::span<const double> x, double total) {
    if (x.empty()) throw std::invalid_argument("project_simplex: empty input");
    std::vector<double> out(x.size(), 0.0);
    if (total <= 0.0) return out;
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumsum += sorted[j];
        double t = (cumsum - total) / static_cast<double>(j + 1);
        if (sorted[j] - t > 0.0) tau = t;
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(x[i] - tau, 0.0);
    return out;
}

WeightVector solve_weights(const std::vector<ProbMatrix>& ps, std::optional<double> fixed_last,
                           const SolverConfig& config) {
    const std::size_t k_count = ps.size();
    if (k_count < 2) throw std::invalid_argument("solve_weights: need at least 2 learners");
    if (config.iterations < 1) throw std::invalid_argument("solve_weights: iterations must be >= 1");
    if (fixed_last && (*fixed_last < 0.0 || *fixed_last >= 1.0))
        throw InvalidFixedWeight("fixed TSVM weight must lie in [0, 1)");

    const double pinned = fixed_last.value_or(0.0);
    const double free_total = fixed_last ? 1.0 - pinned : 1.0;
    const std::size_t free_count = fixed_last ? k_count - 1 : k_count;

    auto project = [&](std::vector<double> v) {
        std::span<const double> free_part(v.data(), free_count);
        std::vector<double> projected = project_simplex(free_part, free_total);
        if (fixed_last) projected.push_back(pinned);
        return projected;
    };

    std::vector<double> w(k_count, 0.0);
    for (std::size_t i = 0; i < free_count; ++i) w[i] = free_total / static_cast<double>(free_count);
    if (fixed_last) w.back() = pinned;

    double cur_obj = objective(ps, w, config.mu, config.epsilon_clip);
    std::vector<double> best = w;
    double best_obj = cur_obj;

    for (int t = 0; t < config.iterations; ++t) {
        std::vector<double> g = gradient(ps, w, config.mu, config.epsilon_clip);
        double step = config.step0;
        std::vector<double> candidate;
        double cand_obj = 0.0;
        for (int halvings = 0; halvings <= 30; ++halvings) {
            std::vector<double> moved(k_count);
            for (std::size_t i = 0; i < k_count; ++i) moved[i] = w[i] - step * g[i];
            candidate = project(std::move(moved));
            cand_obj = objective(ps, candidate, config.mu, config.epsilon_clip);
            if (cand_obj <= cur_obj) break;
            step *= 0.5;
        }
        w = std::move(candidate);
        cur_obj = cand_obj;
        if (cur_obj < best_obj) {
            best = w;
            best_obj = cur_obj;
        }
    }

    WeightVector out{std::move(best), fixed_last};
    check_weight_vector(out);
    return out;
}

} // namespace ctow
