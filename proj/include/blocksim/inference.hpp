#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "blocksim/block_model.hpp"
#include "blocksim/distributions.hpp"
#include "blocksim/ledger.hpp"
#include "blocksim/params.hpp"

// Maximum-likelihood fitting of all model parameters from a block stream,
// the input/output independence diagnostic, and out-of-sample error metrics
// on output UTXO values.
namespace blocksim::infer {

struct LabelTable {
    struct Info {
        EntityId entity = 0;
        Category category = Category::Unknown;
    };
    std::unordered_map<AddressId, Info> by_address;

    bool contains(AddressId a) const { return by_address.contains(a); }
    const Info* find(AddressId a) const {
        auto it = by_address.find(a);
        return it == by_address.end() ? nullptr : &it->second;
    }
    std::size_t size() const { return by_address.size(); }
};

inline LabelTable label_table(const std::vector<model::LabelRow>& rows) {
    LabelTable t;
    for (const auto& r : rows) t.by_address[r.addr] = {r.entity, r.category};
    return t;
}

struct ParamEstimate {
    double value = 0.0;
    std::uint64_t n = 0;  // sample count backing the estimate
};

struct ShapeFit {
    ParamEstimate lambda_in, lambda_out, p_new, p_utxo_in, p_utxo_out, mu_fee, sigma_fee;
    std::uint64_t txs = 0;
};

struct SubsetFit {
    ParamEstimate lambda_size_sub;   // boundary-in transactions per block
    ParamEstimate lambda_out_sub, p_new_sub, p_utxo_out_sub;
    ParamEstimate lambda_sub;        // external outputs per ordinary tx (labeled streams only)
};

struct FitReport {
    ParamEstimate lambda_size;  // ordinary transactions per block
    ShapeFit global;
    std::map<Category, ShapeFit> categories;       // present for labeled fits
    std::map<Category, ParamEstimate> activity;    // share of ordinary txs per category
    std::optional<double> pearson_in_out;
    std::uint64_t contradictions = 0;  // labeled inputs spanning several entities
    std::uint64_t unlabeled_txs = 0;   // txs routed to the Unknown scope
    SubsetFit subset;
};

namespace detail {

struct ShapeAcc {
    std::vector<std::uint64_t> n_in, n_out;
    std::uint64_t new_count = 0, out_count = 0;
    std::vector<dist::BoundedCount> u_in;
    std::vector<std::uint64_t> u_out;
    std::vector<double> fees;
    std::uint64_t txs = 0;

    void add_tx_counts(std::uint64_t i_t, std::uint64_t o_t, std::uint64_t n_t, double fee) {
        ++txs;
        n_in.push_back(i_t);
        if (o_t >= 1) n_out.push_back(o_t);
        out_count += o_t;
        new_count += n_t;
        fees.push_back(fee);
    }

    ShapeFit fit() const {
        ShapeFit f;
        f.txs = txs;
        if (!n_in.empty()) f.lambda_in = {dist::tpois_mle(n_in), n_in.size()};
        if (!n_out.empty()) f.lambda_out = {dist::tpois_mle(n_out), n_out.size()};
        if (out_count > 0) f.p_new = {dist::binom_ratio_mle(new_count, out_count), out_count};
        if (!u_in.empty()) f.p_utxo_in = {dist::bgeom_mle(u_in), u_in.size()};
        if (!u_out.empty()) f.p_utxo_out = {dist::geom_mle(u_out), u_out.size()};
        if (!fees.empty()) {
            auto [mu, sigma] = dist::tgauss_fit_moments(fees);
            f.mu_fee = {mu, fees.size()};
            f.sigma_fee = {sigma, fees.size()};
        }
        return f;
    }
};

// Resolves a transaction's input entity from the label table. Returns the
// category scope, or nullopt for a contradiction (labeled inputs spanning
// two entities, which violates the single-owner protocol assumption).
inline std::optional<Category> resolve_category(const TransactionRecord& tx,
                                                const LabelTable& labels, bool& contradiction) {
    contradiction = false;
    std::optional<EntityId> entity;
    Category cat = Category::Unknown;
    bool any = false;
    for (const auto& in : tx.inputs) {
        const auto* info = labels.find(in.addr);
        if (!info) continue;
        if (any && *entity != info->entity) {
            contradiction = true;
            return std::nullopt;
        }
        entity = info->entity;
        cat = info->category;
        any = true;
    }
    if (!any) return std::nullopt;  // fully unlabeled -> Unknown scope
    return cat;
}

}  // namespace detail

// Fits all parameters by local MLE over sufficient statistics, replaying the
// stream through a ledger to recover each input's k_utxo bound. With labels,
// ordinary transactions are additionally partitioned by input-entity
// category and the per-category estimators run on each partition.
inline FitReport fit_blocks(std::span<const Block> blocks, const LabelTable* labels) {
    if (blocks.empty()) throw std::invalid_argument("fit: empty block stream");

    Ledger replay;
    detail::ShapeAcc global;
    std::map<Category, detail::ShapeAcc> per_cat;
    FitReport report;

    std::uint64_t ordinary_total = 0;
    std::uint64_t boundary_total = 0;
    std::uint64_t external_outputs = 0;
    std::uint64_t categorized = 0;
    std::map<Category, std::uint64_t> cat_counts;
    detail::ShapeAcc mint_acc;  // coinbase + boundary-in output shape

    std::vector<std::uint64_t> block_tx_counts;
    for (const auto& block : blocks) {
        std::uint64_t ordinary_in_block = 0;
        for (const auto& tx : block.txs) {
            if (tx.inputless()) {
                if (tx.boundary_in()) ++boundary_total;
                std::uint64_t o = tx.outputs.size(), n = 0;
                for (const auto& out : tx.outputs) {
                    if (out.is_new) ++n;
                    mint_acc.u_out.push_back(out.values.size());
                }
                if (o >= 1) mint_acc.add_tx_counts(1, o, n, 0.0);
            } else {
                ++ordinary_in_block;
                ++ordinary_total;

                const auto i_t = static_cast<std::uint64_t>(tx.inputs.size());
                std::uint64_t o_all = 0, n_all = 0, o_int = 0, n_int = 0, ext = 0;
                for (const auto& out : tx.outputs) {
                    ++o_all;
                    if (out.is_new) ++n_all;
                    if (labels) {
                        if (labels->contains(out.addr)) {
                            ++o_int;
                            if (out.is_new) ++n_int;
                        } else {
                            ++ext;
                        }
                    }
                }
                external_outputs += ext;

                global.add_tx_counts(i_t, o_all, n_all, static_cast<double>(tx.fee));
                for (const auto& out : tx.outputs) global.u_out.push_back(out.values.size());
                for (const auto& in : tx.inputs) {
                    const auto k = replay.address(in.addr).k_utxo();
                    global.u_in.push_back({in.consumed.size(), k});
                }

                if (labels) {
                    bool contradiction = false;
                    auto cat = detail::resolve_category(tx, *labels, contradiction);
                    if (contradiction) {
                        ++report.contradictions;
                    } else if (!cat) {
                        ++report.unlabeled_txs;
                    } else {
                        ++categorized;
                        ++cat_counts[*cat];
                        auto& acc = per_cat[*cat];
                        acc.add_tx_counts(i_t, o_int, n_int, static_cast<double>(tx.fee));
                        for (const auto& out : tx.outputs)
                            if (labels->contains(out.addr))
                                acc.u_out.push_back(out.values.size());
                        for (const auto& in : tx.inputs) {
                            const auto k = replay.address(in.addr).k_utxo();
                            acc.u_in.push_back({in.consumed.size(), k});
                        }
                    }
                }
            }
            for (const auto& out : tx.outputs) replay.ensure_address(out.addr);
            replay.apply_transaction(tx);
        }
        block_tx_counts.push_back(ordinary_in_block);
    }

    report.lambda_size = {static_cast<double>(ordinary_total) /
                              static_cast<double>(block_tx_counts.size()),
                          block_tx_counts.size()};
    report.global = global.fit();
    for (const auto& [c, acc] : per_cat) report.categories[c] = acc.fit();
    if (categorized > 0)
        for (const auto& [c, n] : cat_counts)
            report.activity[c] = {static_cast<double>(n) / static_cast<double>(categorized), n};

    // subset shape
    report.subset.lambda_size_sub = {
        static_cast<double>(boundary_total) / static_cast<double>(block_tx_counts.size()),
        block_tx_counts.size()};
    if (!mint_acc.n_out.empty()) {
        report.subset.lambda_out_sub = {dist::tpois_mle(mint_acc.n_out), mint_acc.n_out.size()};
        report.subset.p_new_sub = {dist::binom_ratio_mle(mint_acc.new_count, mint_acc.out_count),
                                   mint_acc.out_count};
        report.subset.p_utxo_out_sub = {dist::geom_mle(mint_acc.u_out), mint_acc.u_out.size()};
    }
    if (labels && ordinary_total > 0)
        report.subset.lambda_sub = {
            static_cast<double>(external_outputs) / static_cast<double>(ordinary_total),
            ordinary_total};

    // independence diagnostic over (I_t, O_t)
    if (ordinary_total >= 2) {
        long double si = 0, so = 0, sii = 0, soo = 0, sio = 0;
        for (const auto& block : blocks) {
            for (const auto& tx : block.txs) {
                if (tx.inputless()) continue;
                const auto x = static_cast<long double>(tx.inputs.size());
                const auto y = static_cast<long double>(tx.outputs.size());
                si += x;
                so += y;
                sii += x * x;
                soo += y * y;
                sio += x * y;
            }
        }
        const auto n_ld = static_cast<long double>(ordinary_total);
        const long double cov = sio / n_ld - (si / n_ld) * (so / n_ld);
        const long double vx = sii / n_ld - (si / n_ld) * (si / n_ld);
        const long double vy = soo / n_ld - (so / n_ld) * (so / n_ld);
        if (vx > 0 && vy > 0)
            report.pearson_in_out = static_cast<double>(cov / std::sqrt(vx * vy));
    }
    return report;
}

inline FitReport fit_bta(std::span<const Block> blocks) { return fit_blocks(blocks, nullptr); }

inline FitReport fit_btea(std::span<const Block> blocks, const LabelTable& labels) {
    return fit_blocks(blocks, &labels);
}

// Pearson correlation of (I_t, O_t) over ordinary transactions; empty when
// either margin has zero variance.
inline std::optional<double> independence_diagnostic(std::span<const Block> blocks) {
    long double si = 0, so = 0, sii = 0, soo = 0, sio = 0;
    std::size_t n = 0;
    for (const auto& block : blocks) {
        for (const auto& tx : block.txs) {
            if (tx.inputless()) continue;
            const auto x = static_cast<long double>(tx.inputs.size());
            const auto y = static_cast<long double>(tx.outputs.size());
            si += x;
            so += y;
            sii += x * x;
            soo += y * y;
            sio += x * y;
            ++n;
        }
    }
    if (n < 2) throw std::invalid_argument("independence_diagnostic: need at least 2 txs");
    const auto nl = static_cast<long double>(n);
    const long double cov = sio / nl - (si / nl) * (so / nl);
    const long double vx = sii / nl - (si / nl) * (si / nl);
    const long double vy = soo / nl - (so / nl) * (so / nl);
    if (vx <= 0 || vy <= 0) return std::nullopt;
    return static_cast<double>(cov / std::sqrt(vx * vy));
}

// ---------------------------------------------------------------------------
// out-of-sample error metrics on output UTXO values

struct ErrorStats {
    double mse_signed = 0;  // mean (prediction - observed), BTC
    double rmse = 0;
    double mae = 0;
    double rmae = 0;   // MAE / mean(observed)
    double nrmse = 0;  // RMSE / sigma(observed)
    double predictor_btc = 0;
    double test_mean_btc = 0;
    double test_sigma_btc = 0;
    std::uint64_t n = 0;
};

struct ErrorReport {
    std::map<std::string, ErrorStats> scopes;  // "All" plus categories with data
};

namespace detail {

inline ErrorStats error_stats(const std::vector<double>& observed, double predictor) {
    ErrorStats s;
    s.n = observed.size();
    s.predictor_btc = predictor;
    long double se = 0, sae = 0, ssq = 0, sy = 0, syy = 0;
    for (double y : observed) {
        const double e = predictor - y;
        se += e;
        sae += std::abs(e);
        ssq += static_cast<long double>(e) * e;
        sy += y;
        syy += static_cast<long double>(y) * y;
    }
    const auto n = static_cast<long double>(observed.size());
    s.mse_signed = static_cast<double>(se / n);
    s.mae = static_cast<double>(sae / n);
    s.rmse = std::sqrt(static_cast<double>(ssq / n));
    s.test_mean_btc = static_cast<double>(sy / n);
    const double var = std::max(0.0, static_cast<double>(syy / n) - s.test_mean_btc * s.test_mean_btc);
    s.test_sigma_btc = std::sqrt(var);
    s.rmae = s.test_mean_btc != 0.0 ? s.mae / s.test_mean_btc : 0.0;
    s.nrmse = s.test_sigma_btc > 0.0 ? s.rmse / s.test_sigma_btc
                                     : (s.rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return s;
}

// collect output UTXO values (BTC) of ordinary txs, keyed by scope
inline void collect_values(std::span<const Block> blocks, const LabelTable* labels,
                           std::map<std::string, std::vector<double>>& scopes) {
    for (const auto& block : blocks) {
        for (const auto& tx : block.txs) {
            if (tx.inputless()) continue;
            std::optional<Category> cat;
            if (labels) {
                bool contradiction = false;
                cat = resolve_category(tx, *labels, contradiction);
            }
            for (const auto& out : tx.outputs) {
                for (Satoshi v : out.values) {
                    const double btc = static_cast<double>(v) / static_cast<double>(kSatPerBtc);
                    scopes["All"].push_back(btc);
                    if (cat) scopes[category_name(*cat)].push_back(btc);
                }
            }
        }
    }
}

}  // namespace detail

// Compares a fitted model against held-out blocks. The model's estimate of an
// output UTXO value is its conditional mean under the fitted parameters,
// estimated from a fresh simulation of `predictor_cfg` and applied as a
// constant predictor per scope.
inline ErrorReport holdout_evaluate(const model::SimConfig& predictor_cfg,
                                    std::span<const Block> test, const LabelTable* labels = nullptr,
                                    std::uint64_t predictor_draws = 100000) {
    if (test.empty()) throw std::invalid_argument("holdout_evaluate: empty test stream");

    // simulate the predictor population
    std::map<std::string, std::vector<double>> sim_scopes;
    {
        model::ChainSimulator sim(predictor_cfg);
        std::uint64_t collected = 0;
        std::vector<Block> chunk;
        for (std::uint64_t b = 0; b < predictor_cfg.n_blocks && collected < predictor_draws; ++b) {
            chunk.clear();
            chunk.push_back(sim.next_block());
            LabelTable sim_labels;
            if (predictor_cfg.categories) {
                for (const auto& row : sim.labels())
                    sim_labels.by_address[row.addr] = {row.entity, row.category};
            }
            detail::collect_values(chunk, predictor_cfg.categories ? &sim_labels : nullptr,
                                   sim_scopes);
            collected = sim_scopes["All"].size();
        }
    }

    std::map<std::string, std::vector<double>> test_scopes;
    detail::collect_values(test, labels, test_scopes);

    ErrorReport report;
    for (const auto& [scope, values] : test_scopes) {
        if (values.empty()) continue;
        auto it = sim_scopes.find(scope);
        if (it == sim_scopes.end() || it->second.empty()) continue;
        long double s = 0;
        for (double v : it->second) s += v;
        const double predictor = static_cast<double>(s / static_cast<long double>(it->second.size()));
        report.scopes[scope] = detail::error_stats(values, predictor);
    }
    return report;
}

}  // namespace blocksim::infer
