#include "ctow/cotrain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "ctow/errors.hpp"
#include "ctow/parallel.hpp"
#include "ctow/random.hpp"

namespace ctow {

namespace {

constexpr std::uint64_t kSeedBootstrap = 0x1001;
constexpr std::uint64_t kSeedGbdt = 0x2001;
constexpr std::uint64_t kSeedTsvm = 0x3001;
constexpr std::uint64_t kSeedSubset = 0x4001;

void check_config(const CotrainConfig& c) {
    if (c.k_learners < 2) throw std::invalid_argument("k_learners must be at least 2");
    if (!(c.beta > 0.0 && c.beta <= 1.0)) throw std::invalid_argument("beta must be in (0, 1]");
    if (!(c.bootstrap_fraction > 0.0 && c.bootstrap_fraction <= 1.0))
        throw std::invalid_argument("bootstrap_fraction must be in (0, 1]");
    if (c.max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
    if (c.t_inner < 1) throw std::invalid_argument("t_inner must be at least 1");
    if (!(c.mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
}

void check_split(const Dataset& ds, const SplitPlan& split) {
    auto check_ids = [&](const std::vector<int>& ids, const char* name) {
        for (int id : ids) {
            if (id < 0 || id >= ds.n())
                throw BadIndex(std::string(name) + " id " + std::to_string(id) + " out of range");
        }
    };
    check_ids(split.labeled_ids, "labeled");
    check_ids(split.unlabeled_ids, "unlabeled");
    check_ids(split.test_ids, "test");
    if (split.labeled_ids.empty()) throw EmptyDataset("split has no labeled rows");
    for (int id : split.labeled_ids) {
        if (!ds.has_label(id))
            throw std::invalid_argument("labeled id " + std::to_string(id) + " has no label");
    }
    const std::set<int> labeled(split.labeled_ids.begin(), split.labeled_ids.end());
    for (int id : split.unlabeled_ids) {
        if (labeled.count(id))
            throw std::invalid_argument("row " + std::to_string(id) +
                                        " is both labeled and unlabeled");
    }
}

std::vector<int> labels_at(const Dataset& ds, const std::vector<int>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(ds.labels[static_cast<std::size_t>(id)]);
    return out;
}

struct TrainSet {
    Matrix x;
    std::vector<int> y;
};

TrainSet gather_train_set(const Matrix& xl, const std::vector<int>& yl,
                          const std::vector<int>& bootstrap, const Matrix& xu,
                          const PseudoBatch& batch) {
    const std::size_t total = bootstrap.size() + batch.entries.size();
    TrainSet out{Matrix(total, xl.cols()), {}};
    out.y.reserve(total);
    std::size_t r = 0;
    for (int row : bootstrap) {
        auto src = xl.row(row);
        std::copy(src.begin(), src.end(), out.x.row(r).begin());
        out.y.push_back(yl[static_cast<std::size_t>(row)]);
        ++r;
    }
    for (const PseudoEntry& e : batch.entries) {
        auto src = xu.row(e.row);
        std::copy(src.begin(), src.end(), out.x.row(r).begin());
        out.y.push_back(e.label);
        ++r;
    }
    return out;
}

} // namespace

std::vector<int> bootstrap_sample(const std::vector<int>& y, Rng& rng) {
    const int l = static_cast<int>(y.size());
    std::set<int> classes(y.begin(), y.end());
    std::vector<int> draw(static_cast<std::size_t>(l));
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::set<int> seen;
        for (int i = 0; i < l; ++i) {
            int row = static_cast<int>(rng.below(static_cast<std::size_t>(l)));
            draw[static_cast<std::size_t>(i)] = row;
            seen.insert(y[static_cast<std::size_t>(row)]);
        }
        if (seen == classes) return draw;
    }
    int slot = 0;
    for (int cls : classes) {
        std::vector<int> members;
        for (int i = 0; i < l; ++i) {
            if (y[static_cast<std::size_t>(i)] == cls) members.push_back(i);
        }
        draw[static_cast<std::size_t>(slot++)] = members[rng.below(members.size())];
    }
    for (int i = slot; i < l; ++i)
        draw[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::size_t>(l)));
    return draw;
}

Initialized initialize(const Dataset& ds, const SplitPlan& split, const CotrainConfig& config) {
    check_config(config);
    check_split(ds, split);
    validate_dataset(ds);

    const Matrix xl = take_rows(ds.features, split.labeled_ids);
    const std::vector<int> yl = labels_at(ds, split.labeled_ids);
    const Matrix xu = take_rows(ds.features, split.unlabeled_ids);
    const int k_total = config.k_learners;
    const int tree_count = config.use_tsvm ? k_total - 1 : k_total;

    Initialized out;
    out.bootstrap_rows.resize(static_cast<std::size_t>(tree_count));
    for (int k = 0; k < tree_count; ++k) {
        Rng rng(derive_seed(config.seed, kSeedBootstrap, static_cast<std::uint64_t>(k)));
        out.bootstrap_rows[static_cast<std::size_t>(k)] = bootstrap_sample(yl, rng);
    }

    out.gbdts.resize(static_cast<std::size_t>(tree_count));
    parallel_for(static_cast<std::size_t>(tree_count), [&](std::size_t k) {
        const std::vector<int>& rows = out.bootstrap_rows[k];
        Matrix bx = take_rows(xl, rows);
        std::vector<int> by;
        by.reserve(rows.size());
        for (int r : rows) by.push_back(yl[static_cast<std::size_t>(r)]);
        out.gbdts[k] = train_gbdt(bx, by, ds.class_count, config.gbdt,
                                  derive_seed(config.seed, kSeedGbdt, k));
    });

    if (config.use_tsvm) {
        TsvmConfig tc = config.tsvm;
        tc.seed = derive_seed(config.seed, kSeedTsvm);
        out.tsvm = train_tsvm(xl, yl, ds.class_count, xu, tc);
    }

    out.probs.resize(static_cast<std::size_t>(k_total));
    for (int k = 0; k < tree_count; ++k)
        out.probs[static_cast<std::size_t>(k)] =
            predict_proba_gbdt(out.gbdts[static_cast<std::size_t>(k)], xu);
    if (config.use_tsvm)
        out.probs[static_cast<std::size_t>(k_total - 1)] = predict_proba_tsvm(*out.tsvm, xu);
    return out;
}

ProbMatrix leave_one_out_proba(const std::vector<ProbMatrix>& ps, const WeightVector& w, int k,
                               std::span<const int> subset, bool normalize) {
    const int k_total = static_cast<int>(ps.size());
    if (k < 0 || k >= k_total) throw BadIndex("learner index out of range");
    if (w.w.size() != ps.size()) throw DimensionMismatch("one weight per learner required");
    const std::size_t u = ps.empty() ? 0 : ps.front().rows();
    const std::size_t c = ps.empty() ? 0 : ps.front().cols();
    for (const ProbMatrix& p : ps) {
        if (p.rows() != u || p.cols() != c)
            throw DimensionMismatch("probability matrices must share a shape");
    }
    for (int row : subset) {
        if (row < 0 || row >= static_cast<int>(u)) throw BadIndex("subset row out of range");
    }

    ProbMatrix out(subset.size(), c);
    for (std::size_t i = 0; i < subset.size(); ++i) {
        auto dst = out.row(i);
        const std::size_t src_row = static_cast<std::size_t>(subset[i]);
        for (int s = 0; s < k_total; ++s) {
            if (s == k) continue;
            const double ws = w.w[static_cast<std::size_t>(s)];
            auto src = ps[static_cast<std::size_t>(s)].row(src_row);
            for (std::size_t j = 0; j < c; ++j) dst[j] += ws * src[j];
        }
        if (normalize) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) sum += dst[j];
            const double scale = 1.0 / std::max(sum, 1e-12);
            for (std::size_t j = 0; j < c; ++j) dst[j] *= scale;
        }
    }
    return out;
}

PseudoBatch select_pseudo(const ProbMatrix& pbar, std::span<const int> subset, double beta,
                          int learner) {
    if (pbar.rows() != subset.size())
        throw DimensionMismatch("one subset id per leave-one-out row required");
    PseudoBatch batch;
    batch.learner = learner;
    for (std::size_t i = 0; i < pbar.rows(); ++i) {
        auto row = pbar.row(i);
        const int label = argmax_row(row);
        const double confidence = row[static_cast<std::size_t>(label)];
        if (confidence >= beta)
            batch.entries.push_back(PseudoEntry{subset[i], label, confidence});
    }
    return batch;
}

CotrainModel run_cotraining(const Dataset& ds, const SplitPlan& split,
                            const CotrainConfig& config) {
    Initialized init = initialize(ds, split, config);

    const Matrix xl = take_rows(ds.features, split.labeled_ids);
    const std::vector<int> yl = labels_at(ds, split.labeled_ids);
    const Matrix xu = take_rows(ds.features, split.unlabeled_ids);
    const int u = static_cast<int>(split.unlabeled_ids.size());
    const int k_total = config.k_learners;
    const int tree_count = config.use_tsvm ? k_total - 1 : k_total;

    CotrainModel model;
    model.config = config;
    model.gbdts = std::move(init.gbdts);
    model.tsvm = std::move(init.tsvm);
    model.class_count = ds.class_count;
    model.feature_count = ds.dim();

    const std::optional<double> xi =
        model.tsvm ? std::optional<double>(model.tsvm->margin_density) : std::nullopt;
    const std::optional<double> pin =
        (config.use_prior && config.use_tsvm) ? std::optional<double>(prior_weight(*xi, config.alpha))
                                              : std::nullopt;

    if (u == 0) {
        WeightVector wv;
        wv.fixed_last = pin;
        wv.w.assign(static_cast<std::size_t>(k_total), 1.0 / k_total);
        if (pin) {
            wv.w.back() = *pin;
            const double rest = (1.0 - *pin) / (k_total - 1);
            for (int s = 0; s + 1 < k_total; ++s) wv.w[static_cast<std::size_t>(s)] = rest;
        }
        check_weight_vector(wv);
        model.weights = wv;
        model.rounds_run = 0;
        return model;
    }

    std::vector<ProbMatrix> probs = std::move(init.probs);
    const SolverConfig solver{config.mu, config.t_inner, 1.0, 1e-12};
    const int subset_size = static_cast<int>(std::floor(config.bootstrap_fraction * u));

    // batch each tree learner's current model was trained with (empty at init)
    std::vector<PseudoBatch> trained(static_cast<std::size_t>(tree_count));
    for (int k = 0; k < tree_count; ++k) trained[static_cast<std::size_t>(k)].learner = k;
    std::vector<PseudoBatch> previous;

    for (int round = 1; round <= config.max_rounds; ++round) {
        WeightVector wv = solve_weights(probs, pin, solver);
        const double obj = objective(probs, wv.w, config.mu, solver.epsilon_clip);

        std::vector<PseudoBatch> batches(static_cast<std::size_t>(tree_count));
        std::vector<std::vector<int>> subsets(static_cast<std::size_t>(tree_count));
        for (int k = 0; k < tree_count; ++k) {
            Rng rng(derive_seed(config.seed, kSeedSubset + static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(round)));
            subsets[static_cast<std::size_t>(k)] = rng.sample_without_replacement(u, subset_size);
            ProbMatrix pbar = leave_one_out_proba(probs, wv, k, subsets[static_cast<std::size_t>(k)],
                                                  config.normalize_loo);
            batches[static_cast<std::size_t>(k)] =
                select_pseudo(pbar, subsets[static_cast<std::size_t>(k)], config.beta, k);
        }

        RoundRecord rec;
        rec.round = round;
        rec.weights = wv.w;
        rec.margin_density = xi;
        rec.objective = obj;
        for (const PseudoBatch& b : batches)
            rec.batch_sizes.push_back(static_cast<int>(b.entries.size()));
        model.history.push_back(std::move(rec));
        model.weights = wv;
        model.rounds_run = round;

        if (!previous.empty() && batches == previous) break;

        parallel_for(static_cast<std::size_t>(tree_count), [&](std::size_t k) {
            if (batches[k] == trained[k]) return;  // same data, deterministic model
            TrainSet ts = gather_train_set(xl, yl, init.bootstrap_rows[k], xu, batches[k]);
            model.gbdts[k] = train_gbdt(ts.x, ts.y, ds.class_count, config.gbdt,
                                        derive_seed(config.seed, kSeedGbdt, k));
            probs[k] = predict_proba_gbdt(model.gbdts[k], xu);
            trained[k] = batches[k];
        });
        previous = std::move(batches);
    }
    return model;
}

ProbMatrix predict_proba_cotrain(const CotrainModel& model, const Matrix& rows) {
    if (static_cast<int>(rows.cols()) != model.feature_count)
        throw DimensionMismatch("feature width differs from the trained model");
    std::vector<ProbMatrix> ps;
    ps.reserve(model.weights.w.size());
    for (const GbdtModel& g : model.gbdts) ps.push_back(predict_proba_gbdt(g, rows));
    if (model.tsvm) ps.push_back(predict_proba_tsvm(*model.tsvm, rows));
    return ensemble_proba(ps, model.weights.w);
}

std::vector<int> predict_cotrain(const CotrainModel& model, const Matrix& rows) {
    return argmax_rows(predict_proba_cotrain(model, rows));
}

} // namespace ctow
