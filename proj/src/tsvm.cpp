#include "ctow/tsvm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ctow/errors.hpp"
#include "ctow/parallel.hpp"

namespace ctow {

namespace {

constexpr double kSlackEps = 1e-9;
constexpr double kMinImprovement = 1e-9;
constexpr int kMaxSwapBatches = 200;

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& a, const Matrix& b) {
        const std::size_t d = a.cols();
        const double n = static_cast<double>(a.rows() + b.rows());
        Standardizer s;
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (std::size_t j = 0; j < d; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) sum += a(i, j);
            for (std::size_t i = 0; i < b.rows(); ++i) sum += b(i, j);
            s.mean[j] = sum / n;
            double sq = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) sq += (a(i, j) - s.mean[j]) * (a(i, j) - s.mean[j]);
            for (std::size_t i = 0; i < b.rows(); ++i) sq += (b(i, j) - s.mean[j]) * (b(i, j) - s.mean[j]);
            double sd = std::sqrt(sq / n);
            if (sd > 1e-12) s.scale[j] = sd;
        }
        return s;
    }

    Matrix apply(const Matrix& m) const {
        Matrix out = m;
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j)
                out(i, j) = (out(i, j) - mean[j]) / scale[j];
        return out;
    }

    // rewrite (w, b) learned on standardized inputs as a model on raw inputs
    LinearBinary fold_back(const LinearBinary& m) const {
        LinearBinary out;
        out.w.resize(m.w.size());
        out.b = m.b;
        for (std::size_t j = 0; j < m.w.size(); ++j) {
            out.w[j] = m.w[j] / scale[j];
            out.b -= m.w[j] * mean[j] / scale[j];
        }
        return out;
    }
};

double dot_row(std::span<const double> w, const Matrix& x, std::size_t i) {
    auto row = x.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += w[j] * row[j];
    return acc;
}

// One binary subproblem: rows = labeled block then unlabeled block, with
// signed labels y and per-row penalties c.
struct BinaryProblem {
    const Matrix& x;
    std::vector<int> y;        // +1 / -1
    std::vector<double> cost;  // C_l for labeled rows, C_u_eff for unlabeled

    double objective(const LinearBinary& m) const {
        double obj = 0.0;
        for (double v : m.w) obj += 0.5 * v * v;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double margin = y[i] * (dot_row(m.w, x, i) + m.b);
            obj += cost[i] * std::max(0.0, 1.0 - margin);
        }
        return obj;
    }
};

// Full-batch subgradient descent on 0.5||w||^2 + sum_i c_i hinge_i with step
// 1/(C_l t); keeps the best iterate by objective, so a warm start is never
// made worse.
void subgradient_train(const BinaryProblem& prob, double c_labeled, int epochs, LinearBinary& model) {
    const std::size_t n = prob.x.rows();
    const std::size_t d = prob.x.cols();
    if (model.w.size() != d) model.w.assign(d, 0.0);

    LinearBinary best = model;
    double best_obj = prob.objective(model);

    std::vector<double> gw(d);
    const double step_scale = 1.0 / std::max(c_labeled, 1e-12);
    for (int t = 1; t <= epochs; ++t) {
        std::copy(model.w.begin(), model.w.end(), gw.begin());
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double margin = prob.y[i] * (dot_row(model.w, prob.x, i) + model.b);
            if (margin < 1.0) {
                double coef = prob.cost[i] * prob.y[i];
                auto row = prob.x.row(i);
                for (std::size_t j = 0; j < d; ++j) gw[j] -= coef * row[j];
                gb -= coef;
            }
        }
        double eta = step_scale / static_cast<double>(t);
        for (std::size_t j = 0; j < d; ++j) model.w[j] -= eta * gw[j];
        model.b -= eta * gb;

        double obj = prob.objective(model);
        if (obj < best_obj) {
            best_obj = obj;
            best = model;
        }
    }
    model = best;
}

struct BinaryResult {
    LinearBinary model;
    std::vector<SwitchEvent> trace;
};

BinaryResult solve_binary(const Matrix& xl, const std::vector<int>& signed_labels,
                          const Matrix& xu, const TsvmConfig& cfg, int cls) {
    const std::size_t l = xl.rows();
    const std::size_t u = xu.rows();
    const std::size_t d = xl.cols();
    BinaryResult result;

    // supervised warm start on labeled rows only
    BinaryProblem sup{xl, signed_labels, std::vector<double>(l, cfg.c_labeled)};
    subgradient_train(sup, cfg.c_labeled, cfg.epochs, result.model);
    if (u == 0 || cfg.c_unlabeled <= 0.0) return result;

    // balanced pseudo labels: positive share matches the labeled share
    long positives_l = std::count(signed_labels.begin(), signed_labels.end(), 1);
    int target_pos = static_cast<int>(
        std::lround(static_cast<double>(positives_l) / static_cast<double>(l) * static_cast<double>(u)));
    target_pos = std::clamp(target_pos, 0, static_cast<int>(u));

    std::vector<int> order(u);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> decision(u);
    for (std::size_t j = 0; j < u; ++j) decision[j] = dot_row(result.model.w, xu, j) + result.model.b;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (decision[static_cast<std::size_t>(a)] != decision[static_cast<std::size_t>(b)])
            return decision[static_cast<std::size_t>(a)] > decision[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::vector<int> pseudo(u, -1);
    for (int r = 0; r < target_pos; ++r) pseudo[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = 1;

    // combined problem over labeled + unlabeled blocks
    Matrix all(l + u, d);
    for (std::size_t i = 0; i < l; ++i)
        std::copy(xl.row(i).begin(), xl.row(i).end(), all.row(i).begin());
    for (std::size_t j = 0; j < u; ++j)
        std::copy(xu.row(j).begin(), xu.row(j).end(), all.row(l + j).begin());

    BinaryProblem prob{all, {}, {}};
    prob.y.resize(l + u);
    prob.cost.resize(l + u);
    std::copy(signed_labels.begin(), signed_labels.end(), prob.y.begin());
    std::fill(prob.cost.begin(), prob.cost.begin() + static_cast<long>(l), cfg.c_labeled);

    double c_eff = std::min(1e-4, cfg.c_unlabeled);
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        for (std::size_t j = 0; j < u; ++j) prob.y[l + j] = pseudo[j];
        std::fill(prob.cost.begin() + static_cast<long>(l), prob.cost.end(), c_eff);
        subgradient_train(prob, cfg.c_labeled, cfg.epochs, result.model);

        for (int batch = 0; batch < kMaxSwapBatches; ++batch) {
            // slacks of the unlabeled block at the current (w, b)
            std::vector<double> slack(u), flipped(u);
            for (std::size_t j = 0; j < u; ++j) {
                double f = dot_row(result.model.w, all, l + j) + result.model.b;
                slack[j] = std::max(0.0, 1.0 - pseudo[j] * f);
                flipped[j] = std::max(0.0, 1.0 + pseudo[j] * f);
            }
            std::vector<int> pos, neg;
            for (std::size_t j = 0; j < u; ++j) (pseudo[j] == 1 ? pos : neg).push_back(static_cast<int>(j));
            auto by_slack = [&](int a, int b) {
                if (slack[static_cast<std::size_t>(a)] != slack[static_cast<std::size_t>(b)])
                    return slack[static_cast<std::size_t>(a)] > slack[static_cast<std::size_t>(b)];
                return a < b;
            };
            std::sort(pos.begin(), pos.end(), by_slack);
            std::sort(neg.begin(), neg.end(), by_slack);

            std::vector<std::pair<int, int>> swaps;
            for (std::size_t r = 0; r < std::min(pos.size(), neg.size()); ++r) {
                int p = pos[r], q = neg[r];
                double delta = (flipped[static_cast<std::size_t>(p)] + flipped[static_cast<std::size_t>(q)]) -
                               (slack[static_cast<std::size_t>(p)] + slack[static_cast<std::size_t>(q)]);
                if (c_eff * delta < -kMinImprovement) swaps.emplace_back(p, q);
                else break;
            }
            if (swaps.empty()) break;

            double before = prob.objective(result.model);
            for (auto [p, q] : swaps) {
                pseudo[static_cast<std::size_t>(p)] = -1;
                pseudo[static_cast<std::size_t>(q)] = 1;
            }
            for (std::size_t j = 0; j < u; ++j) prob.y[l + j] = pseudo[j];
            double after = prob.objective(result.model);
            result.trace.push_back(SwitchEvent{
                cls, c_eff, before, after,
                static_cast<int>(std::count(pseudo.begin(), pseudo.end(), 1)), target_pos});
            subgradient_train(prob, cfg.c_labeled, cfg.epochs, result.model);
        }

        if (c_eff >= cfg.c_unlabeled) break;
        c_eff = std::min(2.0 * c_eff, cfg.c_unlabeled);
    }
    return result;
}

} // namespace

TsvmModel train_tsvm(const Matrix& labeled, const std::vector<int>& labels, int class_count,
                     const Matrix& unlabeled, const TsvmConfig& config) {
    const std::size_t l = labeled.rows();
    if (l == 0) throw EmptyDataset("train_tsvm: no labeled rows");
    if (labels.size() != l) throw LengthMismatch("train_tsvm: label count does not match rows");
    if (!unlabeled.empty() && unlabeled.cols() != labeled.cols())
        throw DimensionMismatch("train_tsvm: labeled/unlabeled feature count mismatch");
    std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw SingleClass("train_tsvm: labeled rows cover a single class");
    if (class_count < 2 || *distinct.rbegin() >= class_count)
        throw std::invalid_argument("train_tsvm: bad class_count");

    Standardizer std_xform = Standardizer::fit(labeled, unlabeled);
    Matrix xl = std_xform.apply(labeled);
    Matrix xu = unlabeled.empty() ? unlabeled : std_xform.apply(unlabeled);

    TsvmModel model;
    model.c_labeled = config.c_labeled;
    model.c_unlabeled = config.c_unlabeled;
    model.temperature = config.temperature;
    model.class_count = class_count;
    model.feature_count = static_cast<int>(labeled.cols());
    model.per_class.resize(static_cast<std::size_t>(class_count));

    std::vector<BinaryResult> results(static_cast<std::size_t>(class_count));
    parallel_for(static_cast<std::size_t>(class_count), [&](std::size_t c) {
        std::vector<int> signed_labels(l);
        for (std::size_t i = 0; i < l; ++i)
            signed_labels[i] = labels[i] == static_cast<int>(c) ? 1 : -1;
        results[c] = solve_binary(xl, signed_labels, xu, config, static_cast<int>(c));
    });
    for (std::size_t c = 0; c < results.size(); ++c) {
        model.per_class[c] = std_xform.fold_back(results[c].model);
        for (const auto& ev : results[c].trace) model.trace.push_back(ev);
    }

    model.margin_density = margin_density(model, labeled, labels);
    return model;
}

double margin_density(const TsvmModel& model, const Matrix& labeled, const std::vector<int>& labels) {
    if (labeled.rows() == 0) throw EmptyDataset("margin_density: no labeled rows");
    if (labels.size() != labeled.rows())
        throw LengthMismatch("margin_density: label count does not match rows");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < labeled.rows(); ++i) {
        const LinearBinary& m = model.per_class[static_cast<std::size_t>(labels[i])];
        double f = dot_row(m.w, labeled, i) + m.b;
        double slack = std::max(0.0, 1.0 - f);
        if (slack > kSlackEps) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(labeled.rows());
}

Matrix decision_values_tsvm(const TsvmModel& model, const Matrix& rows) {
    if (static_cast<int>(rows.cols()) != model.feature_count)
        throw DimensionMismatch("predict_proba_tsvm: feature count mismatch");
    Matrix dec(rows.rows(), model.per_class.size());
    for (std::size_t c = 0; c < model.per_class.size(); ++c)
        for (std::size_t i = 0; i < rows.rows(); ++i)
            dec(i, c) = dot_row(model.per_class[c].w, rows, i) + model.per_class[c].b;
    return dec;
}

ProbMatrix predict_proba_tsvm(const TsvmModel& model, const Matrix& rows) {
    Matrix dec = decision_values_tsvm(model, rows);
    for (std::size_t i = 0; i < dec.rows(); ++i) {
        auto row = dec.row(i);
        double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp((v - mx) / model.temperature);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return dec;
}

} // namespace ctow
