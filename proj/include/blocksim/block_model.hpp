#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "blocksim/distributions.hpp"
#include "blocksim/ledger.hpp"
#include "blocksim/params.hpp"
#include "blocksim/rng.hpp"

// Generative samplers for whole blocks: the address-level model, the
// category-conditioned entity-address model, and the subset boundary /
// coinbase extension that keeps a finite simulation funded.
namespace blocksim::model {

struct SimConfig {
    ModelParams params;
    std::optional<CategoryParams> categories;  // present -> entity-address model
    SubsetParams subset = default_subset_params();
    Satoshi block_reward_sat = kDefaultBlockRewardSat;
    std::uint64_t n_blocks = 100;
    std::uint64_t seed = 0;

    // entity-address runs: entity table geometry and initial funding
    std::uint32_t entities_per_category = 40;
    double endowment_factor = 1.2;
    std::uint32_t endowment_utxos_per_address = 4;
    Satoshi endowment_utxo_value_sat = 10'000'000;  // 0.1 BTC
};

struct LabelRow {
    AddressId addr = 0;
    EntityId entity = 0;
    Category category = Category::Unknown;
};

struct ChainResult {
    std::vector<Block> blocks;
    Ledger ledger;
    std::vector<LabelRow> labels;  // ground-truth ownership (entity-address runs)
};

// ---------------------------------------------------------------------------
// helpers

// Split `budget` satoshi into n parcels of at least 1 sat each, proportional
// to uniform draws, exact by largest-remainder rounding. Requires budget >= n.
inline std::vector<Satoshi> split_value(Satoshi budget, std::size_t n, Rng& rng) {
    std::vector<Satoshi> out(n, 1);
    Satoshi rem = budget - static_cast<Satoshi>(n);
    if (rem <= 0) return out;
    std::vector<double> w(n);
    double tot = 0.0;
    for (auto& x : w) {
        x = rng.next_double_pos();
        tot += x;
    }
    std::vector<std::pair<double, std::size_t>> fracs(n);
    Satoshi assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = static_cast<double>(rem) * (w[i] / tot);
        const auto fl = static_cast<Satoshi>(std::floor(share));
        out[i] += fl;
        assigned += fl;
        fracs[i] = {share - static_cast<double>(fl), i};
    }
    std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    Satoshi left = rem - assigned;
    for (std::size_t j = 0; left > 0; j = (j + 1) % n, --left) out[fracs[j].second] += 1;
    return out;
}

namespace detail {

// planned output slot, before addresses are materialized
struct SlotPlan {
    bool fresh = false;
    bool external = false;
    std::optional<EntityId> entity;  // receiving entity (entity-address model)
    std::optional<AddressId> addr;   // pre-picked existing address
    std::uint64_t utxo_count = 1;
};

// entity table grouped by category, fixed for a simulation run
struct EntityDirectory {
    std::map<Category, std::vector<EntityId>> by_category;
    std::vector<EntityId> all;

    static EntityDirectory from_ledger(const Ledger& ledger) {
        EntityDirectory d;
        for (EntityId e = 0; e < ledger.n_entities(); ++e) {
            d.by_category[ledger.entity(e).category()].push_back(e);
            d.all.push_back(e);
        }
        return d;
    }
};

inline Category draw_category(const CategoryParams& cp, Rng& rng) {
    double u = rng.next_double();
    Category last = cp.activity.begin()->first;
    for (const auto& [c, w] : cp.activity) {
        last = c;
        if (u < w) return c;
        u -= w;
    }
    return last;
}

// raw attachment law: P(e) proportional to k_e_utxo + 1 over the pool
inline EntityId draw_entity_attachment(const Ledger& ledger, const std::vector<EntityId>& pool,
                                       Rng& rng) {
    std::int64_t total = 0;
    for (EntityId e : pool) total += ledger.entity(e).k_utxo_total() + 1;
    auto x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
    for (EntityId e : pool) {
        x -= ledger.entity(e).k_utxo_total() + 1;
        if (x < 0) return e;
    }
    return pool.back();
}

// input entity: attachment draw, resampled (bounded) when the chosen entity
// has no funded address
inline std::optional<EntityId> draw_input_entity(const Ledger& ledger,
                                                 const std::vector<EntityId>& pool, Rng& rng) {
    bool any_funded = false;
    for (EntityId e : pool)
        if (ledger.entity(e).funded_addresses() > 0) any_funded = true;
    if (!any_funded) return std::nullopt;
    for (int retry = 0; retry < 256; ++retry) {
        const EntityId e = draw_entity_attachment(ledger, pool, rng);
        if (ledger.entity(e).funded_addresses() > 0) return e;
    }
    return std::nullopt;
}

// output entity: P(e) proportional to k_e_out + 1 over all entities
inline EntityId draw_output_entity(const Ledger& ledger, const std::vector<EntityId>& all,
                                   Rng& rng) {
    std::int64_t total = 0;
    for (EntityId e : all) total += ledger.entity(e).k_out_total() + 1;
    auto x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
    for (EntityId e : all) {
        x -= ledger.entity(e).k_out_total() + 1;
        if (x < 0) return e;
    }
    return all.back();
}

// Materializes planned slots into outputs and splits budget - fee across the
// created UTXOs; trims the plan when the transaction value cannot cover one
// satoshi per UTXO.
inline void finalize_outputs(TransactionRecord& tx, std::vector<SlotPlan> slots, Satoshi value,
                             Satoshi fee_draw, Ledger& ledger, Rng& rng) {
    Satoshi utxo_total = 0;
    for (const auto& s : slots) utxo_total += static_cast<Satoshi>(s.utxo_count);
    while (utxo_total > value && !slots.empty()) {
        auto& lastslot = slots.back();
        if (lastslot.utxo_count > 1) {
            --lastslot.utxo_count;
        } else {
            slots.pop_back();
        }
        --utxo_total;
    }
    if (slots.empty()) throw LedgerError("transaction value cannot fund any output");
    Satoshi fee = std::clamp<Satoshi>(fee_draw, 0, value - utxo_total);
    tx.fee = fee;

    // materialize addresses (existing picks were made before any creation)
    for (auto& s : slots) {
        if (s.addr) continue;
        if (s.external) {
            s.addr = ledger.create_address(std::nullopt, /*external=*/true);
        } else if (s.entity) {
            s.addr = ledger.create_address(*s.entity);
        } else {
            s.addr = ledger.create_address();
        }
    }

    const auto parcels = split_value(value - fee, static_cast<std::size_t>(utxo_total), rng);
    std::size_t next = 0;
    for (const auto& s : slots) {
        TxOutput out;
        out.addr = *s.addr;
        out.is_new = s.fresh || s.external;
        for (std::uint64_t k = 0; k < s.utxo_count; ++k) out.values.push_back(parcels[next++]);
        tx.outputs.push_back(std::move(out));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// transaction samplers

// Address-level ordinary transaction. The ledger is consulted for attachment
// weights but not mutated except for fresh-address registration; the caller
// applies the returned record.
inline TransactionRecord sample_transaction_bta(const ModelParams& p, double lambda_sub,
                                                Ledger& ledger, Rng& rng, TxId id,
                                                std::uint64_t height) {
    if (ledger.funded_addresses() == 0) throw ExhaustedError(height);
    TransactionRecord tx;
    tx.id = id;
    tx.block_height = height;

    auto n_in = dist::tpois_sample(p.lambda_in, rng);
    n_in = std::min<std::uint64_t>(n_in, ledger.funded_addresses());
    const auto n_out = dist::tpois_sample(p.lambda_out, rng);
    const auto n_new = dist::binom_sample(n_out, p.p_new, rng);

    std::vector<AddressId> picked;
    Satoshi value = 0;
    for (std::uint64_t i = 0; i < n_in; ++i) {
        auto a = ledger.pick_input_address(rng, picked);
        if (!a) break;  // funded set exhausted by exclusion
        picked.push_back(*a);
        const auto k = ledger.address(*a).k_utxo();
        const auto u = dist::bgeom_sample(p.p_utxo_in, k, rng);
        TxInput in;
        in.addr = *a;
        in.consumed = ledger.pick_utxos(*a, u, rng);
        for (const auto& ux : in.consumed) value += ux.value;
        tx.inputs.push_back(std::move(in));
    }
    if (tx.inputs.empty()) throw ExhaustedError(height);

    const auto fee_draw = static_cast<Satoshi>(std::llround(
        dist::tgauss_sample(p.mu_fee_sat, p.sigma_fee_sat, 0.0, static_cast<double>(value), rng)));

    std::vector<detail::SlotPlan> slots;
    for (std::uint64_t o = 0; o < n_out; ++o) {
        detail::SlotPlan s;
        s.fresh = o < n_new;
        if (!s.fresh) {
            s.addr = ledger.pick_output_address(rng);
            if (!s.addr) s.fresh = true;  // cold start: no prior address exists
        }
        s.utxo_count = dist::bgeom_sample(p.p_utxo_out, dist::kUnbounded, rng);
        slots.push_back(s);
    }
    if (lambda_sub > 0) {
        const auto n_ext = dist::pois_sample(lambda_sub, rng);
        for (std::uint64_t x = 0; x < n_ext; ++x) {
            detail::SlotPlan s;
            s.external = true;
            s.utxo_count = dist::bgeom_sample(p.p_utxo_out, dist::kUnbounded, rng);
            slots.push_back(s);
        }
    }
    detail::finalize_outputs(tx, std::move(slots), value, fee_draw, ledger, rng);
    return tx;
}

// Entity-address ordinary transaction: input entity by category activity and
// UTXO attachment, addresses restricted to the chosen entity, per-output
// receiving entities by out-degree attachment.
inline TransactionRecord sample_transaction_btea(const ModelParams& global,
                                                 const CategoryParams& cats,
                                                 const detail::EntityDirectory& dir,
                                                 double lambda_sub, Ledger& ledger, Rng& rng,
                                                 TxId id, std::uint64_t height) {
    const Category c = detail::draw_category(cats, rng);
    const auto& shape = cats.shapes.at(c);
    auto pool_it = dir.by_category.find(c);
    if (pool_it == dir.by_category.end() || pool_it->second.empty())
        throw ExhaustedError(height);
    const auto entity = detail::draw_input_entity(ledger, pool_it->second, rng);
    if (!entity) throw ExhaustedError(height);
    const auto& ent = ledger.entity(*entity);

    TransactionRecord tx;
    tx.id = id;
    tx.block_height = height;
    tx.input_entity = *entity;

    auto n_in = dist::tpois_sample(shape.lambda_in, rng);
    n_in = std::min<std::uint64_t>(n_in, ent.funded_addresses());
    const auto n_out = dist::tpois_sample(shape.lambda_out, rng);
    const auto n_new = dist::binom_sample(n_out, shape.p_new, rng);

    std::vector<AddressId> picked;
    Satoshi value = 0;
    for (std::uint64_t i = 0; i < n_in; ++i) {
        auto a = ledger.pick_entity_input_address(*entity, rng, picked);
        if (!a) break;
        picked.push_back(*a);
        const auto k = ledger.address(*a).k_utxo();
        const auto u = dist::bgeom_sample(shape.p_utxo_in, k, rng);
        TxInput in;
        in.addr = *a;
        in.consumed = ledger.pick_utxos(*a, u, rng);
        for (const auto& ux : in.consumed) value += ux.value;
        tx.inputs.push_back(std::move(in));
    }
    if (tx.inputs.empty()) throw ExhaustedError(height);

    const auto fee_draw = static_cast<Satoshi>(std::llround(dist::tgauss_sample(
        global.mu_fee_sat, global.sigma_fee_sat, 0.0, static_cast<double>(value), rng)));

    std::vector<detail::SlotPlan> slots;
    for (std::uint64_t o = 0; o < n_out; ++o) {
        detail::SlotPlan s;
        s.entity = detail::draw_output_entity(ledger, dir.all, rng);
        s.fresh = o < n_new;
        if (!s.fresh) {
            s.addr = ledger.pick_entity_output_address(*s.entity, rng);
            if (!s.addr) s.fresh = true;  // memberless entity: assign it a fresh address
        }
        s.utxo_count = dist::bgeom_sample(shape.p_utxo_out, dist::kUnbounded, rng);
        slots.push_back(s);
    }
    if (lambda_sub > 0) {
        const auto n_ext = dist::pois_sample(lambda_sub, rng);
        for (std::uint64_t x = 0; x < n_ext; ++x) {
            detail::SlotPlan s;
            s.external = true;
            s.utxo_count = dist::bgeom_sample(shape.p_utxo_out, dist::kUnbounded, rng);
            slots.push_back(s);
        }
    }
    detail::finalize_outputs(tx, std::move(slots), value, fee_draw, ledger, rng);
    return tx;
}

// Inputless minting transaction (coinbase or incoming boundary), shaped by
// the subset parameters. Output side follows the ordinary-output mechanism.
inline TransactionRecord sample_mint_tx(const SubsetParams& sub, Satoshi mint, bool coinbase,
                                        const detail::EntityDirectory* dir, Ledger& ledger,
                                        Rng& rng, TxId id, std::uint64_t height) {
    TransactionRecord tx;
    tx.id = id;
    tx.block_height = height;
    tx.coinbase = coinbase;

    const auto n_out = dist::tpois_sample(sub.lambda_out_sub, rng);
    const auto n_new = dist::binom_sample(n_out, sub.p_new_sub, rng);
    std::vector<detail::SlotPlan> slots;
    for (std::uint64_t o = 0; o < n_out; ++o) {
        detail::SlotPlan s;
        s.fresh = o < n_new;
        if (dir != nullptr) {
            s.entity = detail::draw_output_entity(ledger, dir->all, rng);
            if (!s.fresh) {
                s.addr = ledger.pick_entity_output_address(*s.entity, rng);
                if (!s.addr) s.fresh = true;
            }
        } else if (!s.fresh) {
            s.addr = ledger.pick_output_address(rng);
            if (!s.addr) s.fresh = true;
        }
        s.utxo_count = dist::bgeom_sample(sub.p_utxo_out_sub, dist::kUnbounded, rng);
        slots.push_back(s);
    }
    detail::finalize_outputs(tx, std::move(slots), mint, /*fee_draw=*/0, ledger, rng);
    return tx;
}

// Per-block minting: exactly one coinbase plus Poisson(lambda_size_sub)
// incoming boundary transactions.
inline std::vector<TransactionRecord> sample_boundary_and_coinbase(
    const SubsetParams& sub, Satoshi reward, const detail::EntityDirectory* dir, Ledger& ledger,
    Rng& rng, TxId& next_tx, std::uint64_t height) {
    std::vector<TransactionRecord> txs;
    txs.push_back(sample_mint_tx(sub, reward, /*coinbase=*/true, dir, ledger, rng, next_tx++, height));
    const auto n_boundary =
        sub.lambda_size_sub > 0 ? dist::pois_sample(sub.lambda_size_sub, rng) : 0;
    for (std::uint64_t i = 0; i < n_boundary; ++i)
        txs.push_back(
            sample_mint_tx(sub, reward, /*coinbase=*/false, dir, ledger, rng, next_tx++, height));
    return txs;
}

// ---------------------------------------------------------------------------
// block samplers

// One address-model block: minting first, then T_b ~ Poisson(lambda_size)
// ordinary transactions, all applied to the ledger as they are drawn.
inline Block sample_block_bta(const ModelParams& p, const SubsetParams& sub, Satoshi reward,
                              Ledger& ledger, Rng& rng, TxId& next_tx, std::uint64_t height,
                              std::int64_t timestamp) {
    Block b;
    b.height = height;
    b.timestamp = timestamp;
    for (auto& tx :
         sample_boundary_and_coinbase(sub, reward, nullptr, ledger, rng, next_tx, height)) {
        ledger.apply_transaction(tx);
        b.txs.push_back(std::move(tx));
    }
    const auto n_ordinary = dist::pois_sample(p.lambda_size, rng);
    for (std::uint64_t t = 0; t < n_ordinary; ++t) {
        auto tx = sample_transaction_bta(p, sub.lambda_sub, ledger, rng, next_tx++, height);
        ledger.apply_transaction(tx);
        b.txs.push_back(std::move(tx));
    }
    return b;
}

// One entity-address block; category-specific shapes govern each transaction.
inline Block sample_block_btea(const ModelParams& global, const CategoryParams& cats,
                               const detail::EntityDirectory& dir, const SubsetParams& sub,
                               Satoshi reward, Ledger& ledger, Rng& rng, TxId& next_tx,
                               std::uint64_t height, std::int64_t timestamp) {
    Block b;
    b.height = height;
    b.timestamp = timestamp;
    for (auto& tx :
         sample_boundary_and_coinbase(sub, reward, &dir, ledger, rng, next_tx, height)) {
        ledger.apply_transaction(tx);
        b.txs.push_back(std::move(tx));
    }
    const auto n_ordinary = dist::pois_sample(global.lambda_size, rng);
    for (std::uint64_t t = 0; t < n_ordinary; ++t) {
        auto tx = sample_transaction_btea(global, cats, dir, sub.lambda_sub, ledger, rng,
                                          next_tx++, height);
        ledger.apply_transaction(tx);
        b.txs.push_back(std::move(tx));
    }
    return b;
}

// ---------------------------------------------------------------------------
// chain simulation

class ChainSimulator {
public:
    explicit ChainSimulator(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
        cfg_.params.validate();
        cfg_.subset.validate();
        if (cfg_.categories) {
            cfg_.categories->validate();
            setup_entities();
        }
    }

    const Ledger& ledger() const { return ledger_; }

    Block next_block() {
        const std::uint64_t h = ++height_;
        const std::int64_t ts =
            kGenesisTimestamp + static_cast<std::int64_t>(h) * kBlockSpacingSeconds;

        Block endow;
        if (h == 1 && !endowment_.empty()) {
            for (auto& tx : endowment_) {
                ledger_.apply_transaction(tx);
                endow.txs.push_back(std::move(tx));
            }
            endowment_.clear();
        }

        Block b = cfg_.categories
                      ? sample_block_btea(cfg_.params, *cfg_.categories, dir_, cfg_.subset,
                                          cfg_.block_reward_sat, ledger_, rng_, next_tx_, h, ts)
                      : sample_block_bta(cfg_.params, cfg_.subset, cfg_.block_reward_sat, ledger_,
                                         rng_, next_tx_, h, ts);
        if (!endow.txs.empty())
            b.txs.insert(b.txs.begin(), std::make_move_iterator(endow.txs.begin()),
                         std::make_move_iterator(endow.txs.end()));
        return b;
    }

    std::vector<LabelRow> labels() const {
        std::vector<LabelRow> rows;
        for (AddressId a = 0; a < ledger_.n_addresses(); ++a) {
            const auto& st = ledger_.address(a);
            if (st.owner())
                rows.push_back({a, *st.owner(), ledger_.entity(*st.owner()).category()});
        }
        return rows;
    }

private:
    void setup_entities() {
        for (Category c : kKnownCategories) {
            if (!cfg_.categories->shapes.contains(c)) continue;
            for (std::uint32_t i = 0; i < cfg_.entities_per_category; ++i)
                ledger_.create_entity(c);
        }
        dir_ = detail::EntityDirectory::from_ledger(ledger_);

        // Initial funding sized so an entity can field its expected input
        // draws for the whole run even without refunding.
        const double total_txs = cfg_.params.lambda_size * static_cast<double>(cfg_.n_blocks);
        for (const auto& [c, pool] : dir_.by_category) {
            const auto& shape = cfg_.categories->shapes.at(c);
            const double share = cfg_.categories->activity.count(c)
                                     ? cfg_.categories->activity.at(c)
                                     : 0.0;
            const double own_txs = total_txs * share / static_cast<double>(pool.size());
            const auto n_addr = static_cast<std::uint64_t>(std::max(
                50.0, std::ceil(cfg_.endowment_factor * shape.lambda_in * own_txs)));
            for (EntityId e : pool) {
                TransactionRecord tx;
                tx.id = next_tx_++;
                tx.block_height = 1;
                for (std::uint64_t i = 0; i < n_addr; ++i) {
                    TxOutput out;
                    out.addr = ledger_.create_address(e);
                    out.is_new = true;
                    out.values.assign(cfg_.endowment_utxos_per_address,
                                      cfg_.endowment_utxo_value_sat);
                    tx.outputs.push_back(std::move(out));
                }
                endowment_.push_back(std::move(tx));
            }
        }
    }

    SimConfig cfg_;
    Ledger ledger_;
    Rng rng_;
    detail::EntityDirectory dir_;
    std::vector<TransactionRecord> endowment_;
    TxId next_tx_ = 1;
    std::uint64_t height_ = 0;
};

// Deterministic block stream: same config and seed, same bytes.
inline ChainResult simulate_chain(const SimConfig& cfg) {
    ChainSimulator sim(cfg);
    ChainResult r{{}, Ledger{}, {}};
    r.blocks.reserve(cfg.n_blocks);
    for (std::uint64_t i = 0; i < cfg.n_blocks; ++i) r.blocks.push_back(sim.next_block());
    r.ledger = sim.ledger();
    r.labels = sim.labels();
    return r;
}

}  // namespace blocksim::model
