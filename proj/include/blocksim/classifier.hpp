#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blocksim/rng.hpp"

// Gradient-boosted decision trees over the entity feature matrix: one-vs-all
// additive logistic ensembles with exact split finding at desk scale and
// histogram splits beyond it.
namespace blocksim::gbdt {

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    std::vector<std::vector<double>> x;  // row major
    std::vector<std::uint32_t> y;
    std::vector<std::uint64_t> row_ids;

    std::size_t n_rows() const { return x.size(); }
    std::size_t n_cols() const { return feature_names.size(); }
    std::size_t n_classes() const { return class_names.size(); }
};

struct GbdtConfig {
    double learning_rate = 0.18;
    int n_rounds = 200;
    int max_depth = 6;
    int min_leaf = 20;
    int histogram_bins = 64;
    std::size_t exact_split_max_rows = 10000;
    double lambda_reg = 1.0;
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1: leaf
    double threshold = 0.0;     // left if x <= threshold
    std::int32_t left = -1, right = -1;
    double value = 0.0;
    double gain = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        if (nodes.empty()) return 0.0;
        std::int32_t i = 0;
        while (nodes[i].feature >= 0)
            i = row[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                    ? nodes[i].left
                    : nodes[i].right;
        return nodes[i].value;
    }

    void scale(double s) {
        for (auto& n : nodes)
            if (n.feature < 0) n.value *= s;
    }
};

class GbdtModel {
public:
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    GbdtConfig config;
    std::vector<std::vector<Tree>> rounds;  // [round][class]
    std::vector<double> training_loss;      // per accepted round

    std::vector<double> scores(std::span<const double> row) const {
        std::vector<double> f(class_names.size(), 0.0);
        for (const auto& round : rounds)
            for (std::size_t k = 0; k < round.size(); ++k) f[k] += round[k].predict(row);
        return f;
    }

    std::vector<double> predict_proba(std::span<const double> row) const {
        auto f = scores(row);
        const double m = *std::max_element(f.begin(), f.end());
        double z = 0.0;
        for (auto& v : f) {
            v = std::exp(v - m);
            z += v;
        }
        for (auto& v : f) v /= z;
        return f;
    }

    std::uint32_t predict(std::span<const double> row) const {
        auto f = scores(row);
        return static_cast<std::uint32_t>(
            std::max_element(f.begin(), f.end()) - f.begin());
    }
};

namespace detail {

struct SplitResult {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct NodeStats {
    double g = 0.0, h = 0.0;
    std::size_t n = 0;
};

inline double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

// exact best split over the rows of one node
inline SplitResult best_split_exact(const Dataset& d, std::span<const std::uint32_t> rows,
                                    std::span<const double> grad, std::span<const double> hess,
                                    const NodeStats& total, const GbdtConfig& cfg) {
    SplitResult best;
    const double parent = leaf_objective(total.g, total.h, cfg.lambda_reg);
    std::vector<std::pair<double, std::uint32_t>> order(rows.size());
    for (std::size_t f = 0; f < d.n_cols(); ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            order[i] = {d.x[rows[i]][f], rows[i]};
        std::sort(order.begin(), order.end());
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            gl += grad[order[i].second];
            hl += hess[order[i].second];
            if (order[i].first == order[i + 1].first) continue;
            const std::size_t nl = i + 1, nr = order.size() - nl;
            if (nl < static_cast<std::size_t>(cfg.min_leaf) ||
                nr < static_cast<std::size_t>(cfg.min_leaf))
                continue;
            const double gain = 0.5 * (leaf_objective(gl, hl, cfg.lambda_reg) +
                                       leaf_objective(total.g - gl, total.h - hl, cfg.lambda_reg) -
                                       parent);
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.feature = static_cast<std::int32_t>(f);
                best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

// histogram split finding over pre-binned columns
inline SplitResult best_split_hist(const Dataset& d, std::span<const std::uint32_t> rows,
                                   std::span<const double> grad, std::span<const double> hess,
                                   const NodeStats& total, const GbdtConfig& cfg,
                                   const std::vector<std::vector<std::uint8_t>>& codes,
                                   const std::vector<std::vector<double>>& edges) {
    SplitResult best;
    const double parent = leaf_objective(total.g, total.h, cfg.lambda_reg);
    const auto bins = static_cast<std::size_t>(cfg.histogram_bins);
    std::vector<double> hg(bins), hh(bins);
    std::vector<std::size_t> hn(bins);
    for (std::size_t f = 0; f < d.n_cols(); ++f) {
        if (edges[f].empty()) continue;  // constant column
        std::fill(hg.begin(), hg.end(), 0.0);
        std::fill(hh.begin(), hh.end(), 0.0);
        std::fill(hn.begin(), hn.end(), 0);
        for (std::uint32_t r : rows) {
            const auto b = codes[f][r];
            hg[b] += grad[r];
            hh[b] += hess[r];
            ++hn[b];
        }
        double gl = 0.0, hl = 0.0;
        std::size_t nl = 0;
        for (std::size_t b = 0; b + 1 < bins && b < edges[f].size(); ++b) {
            gl += hg[b];
            hl += hh[b];
            nl += hn[b];
            const std::size_t nr = rows.size() - nl;
            if (nl < static_cast<std::size_t>(cfg.min_leaf) ||
                nr < static_cast<std::size_t>(cfg.min_leaf))
                continue;
            const double gain = 0.5 * (leaf_objective(gl, hl, cfg.lambda_reg) +
                                       leaf_objective(total.g - gl, total.h - hl, cfg.lambda_reg) -
                                       parent);
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.feature = static_cast<std::int32_t>(f);
                best.threshold = edges[f][b];
                best.gain = gain;
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const Dataset& d;
    const GbdtConfig& cfg;
    std::span<const double> grad, hess;
    bool use_hist;
    const std::vector<std::vector<std::uint8_t>>* codes;
    const std::vector<std::vector<double>>* edges;

    Tree build(std::vector<std::uint32_t> rows) {
        Tree t;
        grow(t, std::move(rows), 0);
        return t;
    }

    std::int32_t grow(Tree& t, std::vector<std::uint32_t> rows, int depth) {
        NodeStats s;
        for (std::uint32_t r : rows) {
            s.g += grad[r];
            s.h += hess[r];
            ++s.n;
        }
        const auto idx = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();
        if (depth < cfg.max_depth && s.n >= 2 * static_cast<std::size_t>(cfg.min_leaf)) {
            const auto split = use_hist
                                   ? best_split_hist(d, rows, grad, hess, s, cfg, *codes, *edges)
                                   : best_split_exact(d, rows, grad, hess, s, cfg);
            if (split.found) {
                std::vector<std::uint32_t> left, right;
                for (std::uint32_t r : rows)
                    (d.x[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left
                                                                                        : right)
                        .push_back(r);
                t.nodes[idx].feature = split.feature;
                t.nodes[idx].threshold = split.threshold;
                t.nodes[idx].gain = split.gain;
                const auto l = grow(t, std::move(left), depth + 1);
                t.nodes[idx].left = l;
                const auto r = grow(t, std::move(right), depth + 1);
                t.nodes[idx].right = r;
                return idx;
            }
        }
        t.nodes[idx].value = -s.g / (s.h + cfg.lambda_reg);  // Newton leaf
        return idx;
    }
};

inline double multiclass_log_loss(const std::vector<std::vector<double>>& f,
                                  std::span<const std::uint32_t> y) {
    long double loss = 0.0L;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double m = *std::max_element(f[i].begin(), f[i].end());
        long double z = 0.0L;
        for (double v : f[i]) z += std::exp(static_cast<long double>(v - m));
        loss += -static_cast<long double>(f[i][y[i]] - m) + std::log(z);
    }
    return static_cast<double>(loss / static_cast<long double>(f.size()));
}

}  // namespace detail

// Boosted training with per-round logistic loss tracking. A round whose step
// increases the training loss is damped (step halving); training stops if no
// damped step improves, so the recorded loss curve is non-increasing.
inline GbdtModel train_gbdt(const Dataset& train, GbdtConfig cfg = {}) {
    if (train.n_rows() == 0) throw std::invalid_argument("train_gbdt: empty training set");
    if (train.n_classes() < 2) throw std::invalid_argument("train_gbdt: need >= 2 classes");

    const std::size_t n = train.n_rows();
    const std::size_t k = train.n_classes();

    GbdtModel model;
    model.class_names = train.class_names;
    model.feature_names = train.feature_names;
    model.config = cfg;

    const bool use_hist = n > cfg.exact_split_max_rows;
    std::vector<std::vector<std::uint8_t>> codes;
    std::vector<std::vector<double>> edges;
    if (use_hist) {
        // quantile bin edges per feature; codes are bin indices
        codes.assign(train.n_cols(), std::vector<std::uint8_t>(n, 0));
        edges.assign(train.n_cols(), {});
        std::vector<double> col(n);
        for (std::size_t f = 0; f < train.n_cols(); ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = train.x[i][f];
            auto sorted = col;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            if (sorted.size() < 2) continue;
            const auto bins = std::min<std::size_t>(cfg.histogram_bins, sorted.size());
            for (std::size_t b = 1; b < bins; ++b) {
                const std::size_t q = b * sorted.size() / bins;
                edges[f].push_back(sorted[q]);
            }
            edges[f].erase(std::unique(edges[f].begin(), edges[f].end()), edges[f].end());
            for (std::size_t i = 0; i < n; ++i) {
                const auto it = std::lower_bound(edges[f].begin(), edges[f].end(), col[i]);
                codes[f][i] = static_cast<std::uint8_t>(it - edges[f].begin());
            }
        }
    }

    std::vector<std::vector<double>> f(n, std::vector<double>(k, 0.0));
    std::vector<double> grad(n), hess(n);
    std::vector<std::uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    double prev_loss = detail::multiclass_log_loss(f, train.y);
    for (int round = 0; round < cfg.n_rounds; ++round) {
        // class probabilities under current scores
        std::vector<std::vector<double>> p(n, std::vector<double>(k));
        for (std::size_t i = 0; i < n; ++i) {
            const double m = *std::max_element(f[i].begin(), f[i].end());
            double z = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                p[i][c] = std::exp(f[i][c] - m);
                z += p[i][c];
            }
            for (std::size_t c = 0; c < k; ++c) p[i][c] /= z;
        }

        std::vector<Tree> trees(k);
        std::vector<std::vector<double>> step(n, std::vector<double>(k));
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                const double y = train.y[i] == c ? 1.0 : 0.0;
                grad[i] = p[i][c] - y;
                hess[i] = std::max(p[i][c] * (1.0 - p[i][c]), 1e-6);
            }
            detail::TreeBuilder builder{train, cfg, grad, hess, use_hist, &codes, &edges};
            trees[c] = builder.build(all_rows);
            for (std::size_t i = 0; i < n; ++i) step[i][c] = trees[c].predict(train.x[i]);
        }

        double scale = cfg.learning_rate;
        bool accepted = false;
        for (int attempt = 0; attempt < 10; ++attempt) {
            auto f_try = f;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < k; ++c) f_try[i][c] += scale * step[i][c];
            const double loss = detail::multiclass_log_loss(f_try, train.y);
            if (loss <= prev_loss + 1e-12) {
                f = std::move(f_try);
                prev_loss = loss;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // converged: no damped step improves

        for (auto& t : trees) t.scale(scale);
        model.rounds.push_back(std::move(trees));
        model.training_loss.push_back(prev_loss);
    }
    return model;
}

// ---------------------------------------------------------------------------
// evaluation

struct ClassMetrics {
    std::optional<double> accuracy;  // one-vs-all accuracy
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::uint64_t support = 0;
};

struct ClassificationReport {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
    std::vector<ClassMetrics> per_class;
    double overall_accuracy = 0.0;
    double overall_precision = 0.0;  // support-weighted
    double overall_f1 = 0.0;
    std::uint64_t n_test = 0;
    std::string split_descriptor;
};

inline ClassificationReport evaluate(const GbdtModel& model, const Dataset& test) {
    const std::size_t k = model.class_names.size();
    ClassificationReport rep;
    rep.class_names = model.class_names;
    rep.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
    rep.n_test = test.n_rows();
    for (std::size_t i = 0; i < test.n_rows(); ++i)
        ++rep.confusion[test.y[i]][model.predict(test.x[i])];

    std::uint64_t correct = 0;
    for (std::size_t c = 0; c < k; ++c) correct += rep.confusion[c][c];
    rep.overall_accuracy =
        test.n_rows() > 0 ? static_cast<double>(correct) / static_cast<double>(test.n_rows()) : 0.0;

    rep.per_class.resize(k);
    long double wp = 0, wf = 0, wsum = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t tp = rep.confusion[c][c], fn = 0, fp = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == c) continue;
            fn += rep.confusion[c][j];
            fp += rep.confusion[j][c];
        }
        const std::uint64_t support = tp + fn;
        auto& m = rep.per_class[c];
        m.support = support;
        if (support == 0) continue;  // empty test class: metrics stay undefined
        const std::uint64_t tn = test.n_rows() - tp - fn - fp;
        m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(test.n_rows());
        m.recall = static_cast<double>(tp) / static_cast<double>(support);
        if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double prec = m.precision.value_or(0.0);
        const double rec = *m.recall;
        m.f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        wp += static_cast<long double>(support) * prec;
        wf += static_cast<long double>(support) * *m.f1;
        wsum += static_cast<long double>(support);
    }
    if (wsum > 0) {
        rep.overall_precision = static_cast<double>(wp / wsum);
        rep.overall_f1 = static_cast<double>(wf / wsum);
    }
    return rep;
}

// Deterministic stratified split; every class needs at least 2 rows.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double fraction,
                                                    std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split fraction must be in (0,1)");
    std::vector<std::vector<std::uint32_t>> per_class(d.n_classes());
    for (std::size_t i = 0; i < d.n_rows(); ++i) per_class[d.y[i]].push_back(static_cast<std::uint32_t>(i));

    Rng rng(seed);
    std::vector<bool> in_train(d.n_rows(), false);
    for (auto& rows : per_class) {
        if (rows.empty()) continue;
        if (rows.size() < 2)
            throw std::invalid_argument("split_train_test: class with a single row");
        for (std::size_t i = rows.size(); i > 1; --i)
            std::swap(rows[i - 1], rows[rng.below(i)]);
        auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
        for (std::size_t i = 0; i < n_train; ++i) in_train[rows[i]] = true;
    }

    Dataset train, test;
    train.feature_names = test.feature_names = d.feature_names;
    train.class_names = test.class_names = d.class_names;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        auto& dst = in_train[i] ? train : test;
        dst.x.push_back(d.x[i]);
        dst.y.push_back(d.y[i]);
        if (!d.row_ids.empty()) dst.row_ids.push_back(d.row_ids[i]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// importance

struct ImportanceEntry {
    std::string name;
    double total_gain = 0.0;
    std::vector<double> per_class_gain;  // one-vs-all attribution
};

inline std::vector<ImportanceEntry> feature_importance(const GbdtModel& model) {
    const std::size_t k = model.class_names.size();
    std::map<std::int32_t, ImportanceEntry> by_feature;
    for (const auto& round : model.rounds) {
        for (std::size_t c = 0; c < round.size(); ++c) {
            for (const auto& node : round[c].nodes) {
                if (node.feature < 0) continue;
                auto& e = by_feature[node.feature];
                if (e.per_class_gain.empty()) {
                    e.name = model.feature_names[static_cast<std::size_t>(node.feature)];
                    e.per_class_gain.assign(k, 0.0);
                }
                e.total_gain += node.gain;
                e.per_class_gain[c] += node.gain;
            }
        }
    }
    std::vector<ImportanceEntry> out;
    out.reserve(by_feature.size());
    for (auto& [f, e] : by_feature) out.push_back(std::move(e));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.total_gain != b.total_gain) return a.total_gain > b.total_gain;
        return a.name < b.name;
    });
    return out;
}

// feature-class grouping by column prefix (addr_, ent_, tmp_, ctr_, m1_, ...)
inline std::string feature_group(const std::string& column) {
    const auto pos = column.find('_');
    return pos == std::string::npos ? column : column.substr(0, pos);
}

}  // namespace blocksim::gbdt
