#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "blocksim/clustering.hpp"
#include "blocksim/inference.hpp"
#include "blocksim/ledger.hpp"
#include "blocksim/rng.hpp"

// Per-entity feature extraction: address, entity, temporal, centrality and
// N-motif feature classes over a labeled block stream. Entities come from
// ground-truth labels when given, otherwise from multi-input clustering.
namespace blocksim::feat {

using EntityKey = std::int64_t;

// ---------------------------------------------------------------------------
// preprocessed view of the stream

struct TxView {
    std::uint32_t ord = 0;  // position in the stream
    std::uint64_t height = 0;
    std::int64_t timestamp = 0;
    bool coinbase = false;
    bool inputless = false;
    std::uint32_t n_inputs = 0;       // input address entries
    std::uint32_t n_outputs = 0;      // output address entries
    std::uint32_t sender_addrs = 0;   // distinct input addresses
    double value_btc = 0;
    double fee_btc = 0;
    EntityKey sender = -1;  // -1 for inputless txs
    // receiving entities with value and distinct-address counts
    std::vector<EntityKey> recv_keys;
    std::vector<double> recv_btc;
    std::vector<std::uint32_t> recv_addr_counts;
};

struct AddressStats {
    double received_btc = 0;
    double sent_btc = 0;
    std::uint64_t txs_in = 0;
    std::uint64_t txs_out = 0;
    std::int64_t utxos_end = 0;  // received minus spent UTXO count
};

struct StreamIndex {
    std::vector<TxView> txs;
    std::vector<EntityKey> rows;                       // row entities, ascending
    std::unordered_map<EntityKey, std::uint32_t> row_of;
    std::vector<std::string> row_labels;               // category names per row
    std::vector<std::uint64_t> row_ids;                // stable external ids per row
    std::vector<std::vector<AddressId>> row_addresses; // member addresses per row
    std::unordered_map<AddressId, AddressStats> addr_stats;
    std::unordered_map<EntityKey, std::vector<std::uint32_t>> out_txs;  // ordinary, ascending ord
    std::unordered_map<EntityKey, std::vector<std::uint32_t>> in_txs;   // ordinary, ascending ord
    std::uint64_t min_height = 0, max_height = 0;

    bool is_row(EntityKey k) const { return row_of.contains(k); }

    static StreamIndex build(std::span<const Block> blocks, const infer::LabelTable* labels);
};

namespace detail {

inline double btc(Satoshi v) { return static_cast<double>(v) / static_cast<double>(kSatPerBtc); }

// address -> entity key resolution used when building the index
struct KeyResolver {
    const infer::LabelTable* labels;
    std::unordered_map<AddressId, AddressId> cluster_root;  // input addresses only
    static constexpr EntityKey kClusterBase = 1'000'000'000;   // offset for cluster keys
    static constexpr EntityKey kSinkBase = 3'000'000'000;      // output-only addresses

    EntityKey key(AddressId a) const {
        if (labels) {
            if (const auto* info = labels->find(a))
                return static_cast<EntityKey>(info->entity);
        }
        auto it = cluster_root.find(a);
        if (it != cluster_root.end()) return kClusterBase + static_cast<EntityKey>(it->second);
        return kSinkBase + static_cast<EntityKey>(a);
    }
};

}  // namespace detail

inline StreamIndex StreamIndex::build(std::span<const Block> blocks,
                                      const infer::LabelTable* labels) {
    StreamIndex ix;

    // cluster input addresses so unlabeled spenders get stable pseudo-entities
    MultiInputClusterer clusterer;
    for (const auto& b : blocks)
        for (const auto& tx : b.txs) clusterer.observe(tx);
    detail::KeyResolver resolver{labels, {}, };
    for (const auto& cls : clusterer.partition()) {
        const AddressId root = cls.front();
        for (AddressId a : cls) resolver.cluster_root[a] = root;
    }

    // row universe
    std::map<EntityKey, std::string> row_label;
    std::map<EntityKey, std::uint64_t> row_id;
    std::map<EntityKey, std::set<AddressId>> row_members;
    if (labels) {
        for (const auto& [addr, info] : labels->by_address) {
            const auto k = static_cast<EntityKey>(info.entity);
            row_label[k] = category_name(info.category);
            row_id[k] = info.entity;
            row_members[k].insert(addr);
        }
    } else {
        for (const auto& [addr, root] : resolver.cluster_root) {
            const EntityKey k = detail::KeyResolver::kClusterBase + static_cast<EntityKey>(root);
            row_label[k] = category_name(Category::Unknown);
            row_id[k] = root;
            row_members[k].insert(addr);
        }
    }
    for (const auto& [k, lbl] : row_label) {
        ix.row_of[k] = static_cast<std::uint32_t>(ix.rows.size());
        ix.rows.push_back(k);
        ix.row_labels.push_back(lbl);
        ix.row_ids.push_back(row_id[k]);
        ix.row_addresses.emplace_back(row_members[k].begin(), row_members[k].end());
    }

    // transaction views
    std::uint32_t ord = 0;
    bool first = true;
    for (const auto& b : blocks) {
        if (first) {
            ix.min_height = b.height;
            first = false;
        }
        ix.max_height = b.height;
        for (const auto& tx : b.txs) {
            TxView v;
            v.ord = ord++;
            v.height = b.height;
            v.timestamp = b.timestamp;
            v.coinbase = tx.coinbase;
            v.inputless = tx.inputless();
            v.n_inputs = static_cast<std::uint32_t>(tx.inputs.size());
            v.n_outputs = static_cast<std::uint32_t>(tx.outputs.size());
            v.fee_btc = detail::btc(tx.fee);
            v.value_btc = detail::btc(tx.value());

            std::unordered_set<AddressId> in_addrs;
            for (const auto& in : tx.inputs) {
                in_addrs.insert(in.addr);
                auto& st = ix.addr_stats[in.addr];
                Satoshi spent = 0;
                for (const auto& u : in.consumed) spent += u.value;
                st.sent_btc += detail::btc(spent);
                st.utxos_end -= static_cast<std::int64_t>(in.consumed.size());
                ++st.txs_out;
            }
            v.sender_addrs = static_cast<std::uint32_t>(in_addrs.size());
            if (!tx.inputs.empty()) v.sender = resolver.key(tx.inputs.front().addr);

            std::map<EntityKey, std::pair<double, std::set<AddressId>>> recv;
            for (const auto& out : tx.outputs) {
                Satoshi got = 0;
                for (Satoshi x : out.values) got += x;
                auto& st = ix.addr_stats[out.addr];
                st.received_btc += detail::btc(got);
                st.utxos_end += static_cast<std::int64_t>(out.values.size());
                ++st.txs_in;
                auto& slot = recv[resolver.key(out.addr)];
                slot.first += detail::btc(got);
                slot.second.insert(out.addr);
            }
            for (const auto& [k, val] : recv) {
                v.recv_keys.push_back(k);
                v.recv_btc.push_back(val.first);
                v.recv_addr_counts.push_back(static_cast<std::uint32_t>(val.second.size()));
            }

            if (!v.inputless) {
                ix.out_txs[v.sender].push_back(v.ord);
                for (EntityKey k : v.recv_keys) ix.in_txs[k].push_back(v.ord);
            }
            ix.txs.push_back(std::move(v));
        }
    }
    return ix;
}

// ---------------------------------------------------------------------------
// feature blocks

struct FeatureBlock {
    std::string feature_class;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;  // aligned with StreamIndex::rows
};

namespace detail {

struct MeanStd {
    long double s = 0, s2 = 0, n = 0;
    void add(double x, double w = 1.0) {
        s += static_cast<long double>(w) * x;
        s2 += static_cast<long double>(w) * x * x;
        n += w;
    }
    double mean() const { return n > 0 ? static_cast<double>(s / n) : 0.0; }
    double stddev() const {
        if (n <= 0) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, static_cast<double>(s2 / n) - m * m));
    }
};

}  // namespace detail

// address class (10 columns): per-address aggregates across an entity's
// member addresses, plus entity class (8 columns): totals and coinbase counts
inline std::vector<FeatureBlock> extract_address_entity_features(const StreamIndex& ix) {
    FeatureBlock addr_blk, ent_blk;
    addr_blk.feature_class = "address";
    addr_blk.names = {"addr_received_btc_mean", "addr_received_btc_std", "addr_balance_btc_mean",
                      "addr_balance_btc_std",   "addr_txs_in_mean",      "addr_txs_in_std",
                      "addr_txs_out_mean",      "addr_txs_out_std",      "addr_utxos_end_mean",
                      "addr_utxos_end_std"};
    ent_blk.feature_class = "entity";
    ent_blk.names = {"ent_received_btc", "ent_sent_btc",     "ent_balance_btc",
                     "ent_n_addresses",  "ent_txs_in",       "ent_txs_out",
                     "ent_coinbase_txs", "ent_coinbase_ratio"};
    addr_blk.rows.assign(ix.rows.size(), std::vector<double>(addr_blk.names.size(), 0.0));
    ent_blk.rows.assign(ix.rows.size(), std::vector<double>(ent_blk.names.size(), 0.0));

    // entity tx-level counters
    std::vector<std::uint64_t> txs_in(ix.rows.size(), 0), txs_out(ix.rows.size(), 0),
        coinbase(ix.rows.size(), 0);
    for (const auto& tx : ix.txs) {
        if (tx.sender >= 0 && ix.is_row(tx.sender)) ++txs_out[ix.row_of.at(tx.sender)];
        for (EntityKey k : tx.recv_keys) {
            if (!ix.is_row(k)) continue;
            const auto r = ix.row_of.at(k);
            ++txs_in[r];
            if (tx.coinbase) ++coinbase[r];
        }
    }

    for (std::size_t r = 0; r < ix.rows.size(); ++r) {
        detail::MeanStd received, balance, a_in, a_out, utxos;
        double ent_received = 0, ent_sent = 0;
        for (AddressId a : ix.row_addresses[r]) {
            AddressStats st;
            if (auto it = ix.addr_stats.find(a); it != ix.addr_stats.end()) st = it->second;
            received.add(st.received_btc);
            balance.add(st.received_btc - st.sent_btc);
            a_in.add(static_cast<double>(st.txs_in));
            a_out.add(static_cast<double>(st.txs_out));
            utxos.add(static_cast<double>(st.utxos_end));
            ent_received += st.received_btc;
            ent_sent += st.sent_btc;
        }
        auto& arow = addr_blk.rows[r];
        arow[0] = received.mean();
        arow[1] = received.stddev();
        arow[2] = balance.mean();
        arow[3] = balance.stddev();
        arow[4] = a_in.mean();
        arow[5] = a_in.stddev();
        arow[6] = a_out.mean();
        arow[7] = a_out.stddev();
        arow[8] = utxos.mean();
        arow[9] = utxos.stddev();
        auto& erow = ent_blk.rows[r];
        erow[0] = ent_received;
        erow[1] = ent_sent;
        erow[2] = ent_received - ent_sent;
        erow[3] = static_cast<double>(ix.row_addresses[r].size());
        erow[4] = static_cast<double>(txs_in[r]);
        erow[5] = static_cast<double>(txs_out[r]);
        erow[6] = static_cast<double>(coinbase[r]);
        erow[7] = txs_in[r] > 0 ? static_cast<double>(coinbase[r]) / static_cast<double>(txs_in[r])
                                : 0.0;
    }
    return {std::move(addr_blk), std::move(ent_blk)};
}

// temporal class (16 columns)
inline FeatureBlock extract_temporal_features(const StreamIndex& ix) {
    FeatureBlock blk;
    blk.feature_class = "temporal";
    blk.names = {"tmp_active_days",       "tmp_span_days",          "tmp_active_day_ratio",
                 "tmp_weeks_active",      "tmp_months_active",      "tmp_years_active",
                 "tmp_receiving_days",    "tmp_sending_days",       "tmp_recv_send_days",
                 "tmp_partners_week_mean", "tmp_partners_week_std",  "tmp_partners_month_mean",
                 "tmp_partners_month_std", "tmp_partners_year_mean", "tmp_partners_year_std",
                 "tmp_txs_per_active_day"};
    blk.rows.assign(ix.rows.size(), std::vector<double>(blk.names.size(), 0.0));

    struct Acc {
        std::set<std::int64_t> days, recv_days, send_days, weeks, months, years;
        std::map<std::int64_t, std::set<EntityKey>> partners_w, partners_m, partners_y;
        std::uint64_t txs = 0;
        std::int64_t first_day = 0, last_day = 0;
        bool any = false;
        void touch_day(std::int64_t day) {
            if (!any) {
                first_day = last_day = day;
                any = true;
            }
            first_day = std::min(first_day, day);
            last_day = std::max(last_day, day);
            days.insert(day);
            weeks.insert(day / 7);
            months.insert(day / 30);
            years.insert(day / 365);
        }
        void partner(std::int64_t day, EntityKey k) {
            partners_w[day / 7].insert(k);
            partners_m[day / 30].insert(k);
            partners_y[day / 365].insert(k);
        }
    };
    std::vector<Acc> acc(ix.rows.size());

    for (const auto& tx : ix.txs) {
        const std::int64_t day = tx.timestamp / 86400;
        if (tx.sender >= 0 && ix.is_row(tx.sender)) {
            auto& a = acc[ix.row_of.at(tx.sender)];
            a.touch_day(day);
            a.send_days.insert(day);
            ++a.txs;
            for (EntityKey k : tx.recv_keys)
                if (k != tx.sender) a.partner(day, k);
        }
        for (std::size_t i = 0; i < tx.recv_keys.size(); ++i) {
            const EntityKey k = tx.recv_keys[i];
            if (!ix.is_row(k)) continue;
            auto& a = acc[ix.row_of.at(k)];
            a.touch_day(day);
            a.recv_days.insert(day);
            ++a.txs;
            if (tx.sender >= 0 && tx.sender != k) a.partner(day, tx.sender);
        }
    }

    for (std::size_t r = 0; r < ix.rows.size(); ++r) {
        const auto& a = acc[r];
        auto& row = blk.rows[r];
        if (!a.any) continue;  // zero row with presence counts 0
        const double active = static_cast<double>(a.days.size());
        const double span = static_cast<double>(a.last_day - a.first_day + 1);
        row[0] = active;
        row[1] = span;
        row[2] = active / span;
        row[3] = static_cast<double>(a.weeks.size());
        row[4] = static_cast<double>(a.months.size());
        row[5] = static_cast<double>(a.years.size());
        row[6] = static_cast<double>(a.recv_days.size());
        row[7] = static_cast<double>(a.send_days.size());
        std::size_t both = 0;
        for (std::int64_t d : a.recv_days)
            if (a.send_days.contains(d)) ++both;
        row[8] = static_cast<double>(both);
        detail::MeanStd pw, pm, py;
        for (const auto& [w, s] : a.partners_w) pw.add(static_cast<double>(s.size()));
        for (const auto& [m, s] : a.partners_m) pm.add(static_cast<double>(s.size()));
        for (const auto& [y, s] : a.partners_y) py.add(static_cast<double>(s.size()));
        row[9] = pw.mean();
        row[10] = pw.stddev();
        row[11] = pm.mean();
        row[12] = pm.stddev();
        row[13] = py.mean();
        row[14] = py.stddev();
        row[15] = static_cast<double>(a.txs) / active;
    }
    return blk;
}

// centrality class (42 columns): 7 metrics on the entity-entity value graph,
// computed globally and over 5 equal block-height windows
inline FeatureBlock extract_centrality_features(const StreamIndex& ix) {
    FeatureBlock blk;
    blk.feature_class = "centrality";
    static const char* metric[] = {"degree",      "in_degree",    "out_degree", "strength_in",
                                   "strength_out", "strength_all", "eigenvector"};
    for (const char* m : metric) blk.names.push_back(std::string("ctr_") + m);
    for (int w = 1; w <= 5; ++w)
        for (const char* m : metric)
            blk.names.push_back("ctr_w" + std::to_string(w) + "_" + m);
    blk.rows.assign(ix.rows.size(), std::vector<double>(blk.names.size(), 0.0));

    struct Edge {
        EntityKey from, to;
        double btc;
        std::uint64_t height;
    };
    std::vector<Edge> edges;
    for (const auto& tx : ix.txs) {
        if (tx.sender < 0) continue;
        for (std::size_t i = 0; i < tx.recv_keys.size(); ++i)
            edges.push_back({tx.sender, tx.recv_keys[i], tx.recv_btc[i], tx.height});
    }

    const auto compute = [&](std::uint64_t h_lo, std::uint64_t h_hi, std::size_t col0) {
        std::unordered_map<EntityKey, std::uint32_t> node_of;
        std::vector<EntityKey> nodes;
        auto node = [&](EntityKey k) {
            auto [it, fresh] = node_of.try_emplace(k, static_cast<std::uint32_t>(nodes.size()));
            if (fresh) nodes.push_back(k);
            return it->second;
        };
        struct Adj {
            std::set<std::uint32_t> in, out;
            double s_in = 0, s_out = 0;
        };
        std::vector<Adj> adj;
        std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> arcs;
        for (const auto& e : edges) {
            if (e.height < h_lo || e.height > h_hi) continue;
            const auto u = node(e.from), v = node(e.to);
            adj.resize(nodes.size());
            adj[u].out.insert(v);
            adj[u].s_out += e.btc;
            adj[v].in.insert(u);
            adj[v].s_in += e.btc;
            arcs.emplace_back(u, v, e.btc);
        }
        adj.resize(nodes.size());

        // lazy symmetric power iteration; a fully edgeless graph stays uniform
        std::vector<double> x(nodes.size(), nodes.empty() ? 0.0 : 1.0 / nodes.size());
        std::vector<double> y(nodes.size());
        for (int it = 0; it < 64 && !nodes.empty(); ++it) {
            std::fill(y.begin(), y.end(), 0.0);
            for (const auto& [u, v, w] : arcs) {
                y[v] += w * x[u];
                y[u] += w * x[v];
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                y[i] += x[i];
                norm += y[i];
            }
            for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / norm;
        }

        for (std::size_t r = 0; r < ix.rows.size(); ++r) {
            auto it = node_of.find(ix.rows[r]);
            if (it == node_of.end()) continue;
            const auto u = it->second;
            std::set<std::uint32_t> all(adj[u].in.begin(), adj[u].in.end());
            all.insert(adj[u].out.begin(), adj[u].out.end());
            auto& row = blk.rows[r];
            row[col0 + 0] = static_cast<double>(all.size());
            row[col0 + 1] = static_cast<double>(adj[u].in.size());
            row[col0 + 2] = static_cast<double>(adj[u].out.size());
            row[col0 + 3] = adj[u].s_in;
            row[col0 + 4] = adj[u].s_out;
            row[col0 + 5] = adj[u].s_in + adj[u].s_out;
            row[col0 + 6] = x[u];
        }
    };

    compute(ix.min_height, ix.max_height, 0);
    const std::uint64_t span = ix.max_height - ix.min_height + 1;
    for (int w = 0; w < 5; ++w) {
        const std::uint64_t lo = ix.min_height + span * w / 5;
        const std::uint64_t hi = ix.min_height + span * (w + 1) / 5 - 1;
        compute(lo, hi, 7 * (w + 1));
    }
    return blk;
}

// ---------------------------------------------------------------------------
// N-motif features

namespace detail {

// weighted aggregates for one motif group
struct GroupAgg {
    double count = 0;  // Horvitz-Thompson estimate of the instance count
    std::vector<MeanStd> q;
    explicit GroupAgg(std::size_t nq) : q(nq) {}
    void add(double w, std::span<const double> values) {
        count += w;
        for (std::size_t i = 0; i < values.size(); ++i) q[i].add(values[i], w);
    }
};

// deterministic fan-out throttle: visits at most `cap` candidates of [0, n)
// and scales instance weights by n / cap
template <typename Fn>
void fan_out(std::size_t n, std::size_t cap, Rng& rng, double weight, Fn&& fn) {
    if (n == 0) return;
    if (cap == 0 || n <= cap) {
        for (std::size_t i = 0; i < n; ++i) fn(i, weight);
        return;
    }
    const double w = weight * static_cast<double>(n) / static_cast<double>(cap);
    std::unordered_set<std::size_t> chosen;
    while (chosen.size() < cap) chosen.insert(static_cast<std::size_t>(rng.below(n)));
    std::vector<std::size_t> order(chosen.begin(), chosen.end());
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) fn(i, w);
}

// first index in sorted `v` with value strictly greater than x
inline std::size_t upper_index(const std::vector<std::uint32_t>& v, std::uint32_t x) {
    return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
}

inline const std::vector<std::uint32_t>& txs_of(
    const std::unordered_map<EntityKey, std::vector<std::uint32_t>>& m, EntityKey k) {
    static const std::vector<std::uint32_t> empty;
    auto it = m.find(k);
    return it == m.end() ? empty : it->second;
}

}  // namespace detail

struct MotifCaps {
    std::size_t level_cap = 0;  // 0 = exhaustive
};

inline MotifCaps default_motif_caps(int n) {
    switch (n) {
        case 1: return {0};
        case 2: return {64};
        default: return {16};
    }
}

// N-motif class: paths of length 2N on the entity-transaction graph,
// chronologically ordered, anchored at each row entity in every path role.
// Direct and Loop (consecutive entities equal) instances aggregate
// separately. Column counts: 44 / 81 / 114 for N = 1 / 2 / 3.
inline FeatureBlock extract_motif_features(const StreamIndex& ix, int n_motif,
                                           std::vector<double>* sampling_rates = nullptr,
                                           MotifCaps caps = {SIZE_MAX}) {
    if (caps.level_cap == SIZE_MAX) caps = default_motif_caps(n_motif);
    FeatureBlock blk;
    blk.feature_class = "motif" + std::to_string(n_motif);

    static const char* kinds[] = {"direct", "loop"};
    std::vector<std::string> roles, quantities;
    if (n_motif == 1) {
        roles = {"src", "dst"};
        quantities = {"nb_inputs", "nb_outputs", "in_val", "out_val", "fee"};
    } else if (n_motif == 2) {
        roles = {"start", "mid", "end"};
        quantities = {"nb_inputs", "nb_outputs", "in_val", "out_val", "mid_val", "nb_address"};
    } else {
        roles = {"start", "mid", "end"};
        quantities = {"nb_inputs", "nb_outputs", "in_val",      "mid_val_1", "mid_val_2",
                      "out_val",   "fee_total",  "nb_address",  "span_blocks"};
    }
    const std::string prefix = "m" + std::to_string(n_motif) + "_";
    for (const auto& role : roles) {
        for (const auto* kind : kinds) {
            blk.names.push_back(prefix + role + "_" + kind + "_count");
            for (const auto& q : quantities) {
                blk.names.push_back(prefix + role + "_" + kind + "_" + q + "_mean");
                blk.names.push_back(prefix + role + "_" + kind + "_" + q + "_std");
            }
        }
    }
    if (n_motif == 2)
        for (const auto& role : roles) blk.names.push_back(prefix + role + "_fee_total_mean");

    blk.rows.assign(ix.rows.size(), std::vector<double>(blk.names.size(), 0.0));
    if (sampling_rates) sampling_rates->assign(ix.rows.size(), 1.0);

    const std::size_t group_width = 1 + 2 * quantities.size();
    const std::size_t cap = caps.level_cap;

    for (std::size_t r = 0; r < ix.rows.size(); ++r) {
        const EntityKey anchor = ix.rows[r];
        std::vector<detail::GroupAgg> agg(roles.size() * 2, detail::GroupAgg(quantities.size()));
        std::vector<detail::MeanStd> role_fee(roles.size());
        double plain_instances = 0, weighted_instances = 0;

        auto record = [&](std::size_t role, bool loop, double w, std::span<const double> vals) {
            agg[role * 2 + (loop ? 1 : 0)].add(w, vals);
            plain_instances += 1;
            weighted_instances += w;
        };

        Rng rng(0xfea70000 + (static_cast<std::uint64_t>(anchor) << 8) +
                static_cast<std::uint64_t>(n_motif));

        const auto& outs = detail::txs_of(ix.out_txs, anchor);
        const auto& ins = detail::txs_of(ix.in_txs, anchor);

        if (n_motif == 1) {
            // src role: anchor -> t -> e2
            for (std::uint32_t t : outs) {
                const auto& tv = ix.txs[t];
                for (std::size_t i = 0; i < tv.recv_keys.size(); ++i) {
                    const double vals[] = {static_cast<double>(tv.n_inputs),
                                           static_cast<double>(tv.n_outputs), tv.value_btc,
                                           tv.recv_btc[i], tv.fee_btc};
                    record(0, tv.recv_keys[i] == anchor, 1.0, vals);
                }
            }
            // dst role: e1 -> t -> anchor
            for (std::uint32_t t : ins) {
                const auto& tv = ix.txs[t];
                for (std::size_t i = 0; i < tv.recv_keys.size(); ++i) {
                    if (tv.recv_keys[i] != anchor) continue;
                    const double vals[] = {static_cast<double>(tv.n_inputs),
                                           static_cast<double>(tv.n_outputs), tv.value_btc,
                                           tv.recv_btc[i], tv.fee_btc};
                    record(1, tv.sender == anchor, 1.0, vals);
                }
            }
        } else if (n_motif == 2) {
            auto emit = [&](std::size_t role, const TxView& t1, std::size_t i2, const TxView& t2,
                            std::size_t i3, double w) {
                const EntityKey e1 = t1.sender, e2 = t1.recv_keys[i2], e3 = t2.recv_keys[i3];
                const bool loop = (e1 == e2) || (e2 == e3);
                const double nb_address =
                    static_cast<double>(t1.recv_addr_counts[i2] + t2.sender_addrs);
                const double vals[] = {static_cast<double>(t1.n_inputs),
                                       static_cast<double>(t2.n_outputs),
                                       t1.value_btc,
                                       t2.recv_btc[i3],
                                       t1.recv_btc[i2],
                                       nb_address};
                record(role, loop, w, vals);
                role_fee[role].add(t1.fee_btc + t2.fee_btc, w);
            };
            // one shared walker: given t1 and the receiving slot (=e2), walk t2 > t1
            auto walk_second = [&](std::size_t role, const TxView& t1, std::size_t i2, double w0) {
                const EntityKey e2 = t1.recv_keys[i2];
                const auto& mid_outs = detail::txs_of(ix.out_txs, e2);
                const auto from = detail::upper_index(mid_outs, t1.ord);
                detail::fan_out(mid_outs.size() - from, cap, rng, w0, [&](std::size_t j, double w1) {
                    const auto& t2 = ix.txs[mid_outs[from + j]];
                    detail::fan_out(t2.recv_keys.size(), cap, rng, w1,
                                    [&](std::size_t i3, double w2) { emit(role, t1, i2, t2, i3, w2); });
                });
            };
            // start role
            detail::fan_out(outs.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t1 = ix.txs[outs[a]];
                detail::fan_out(t1.recv_keys.size(), cap, rng, w0, [&](std::size_t i2, double w1) {
                    walk_second(0, t1, i2, w1);
                });
            });
            // mid role: anchor receives in t1, spends in t2
            detail::fan_out(ins.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t1 = ix.txs[ins[a]];
                for (std::size_t i2 = 0; i2 < t1.recv_keys.size(); ++i2) {
                    if (t1.recv_keys[i2] != anchor) continue;
                    walk_second(1, t1, i2, w0);
                }
            });
            // end role: anchor receives from t2; t2's sender received in t1 < t2
            detail::fan_out(ins.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t2 = ix.txs[ins[a]];
                const EntityKey e2 = t2.sender;
                const auto& mid_ins = detail::txs_of(ix.in_txs, e2);
                const auto upto = detail::upper_index(mid_ins, t2.ord > 0 ? t2.ord - 1 : 0);
                const auto limit = t2.ord == 0 ? 0 : upto;
                detail::fan_out(limit, cap, rng, w0, [&](std::size_t j, double w1) {
                    const auto& t1 = ix.txs[mid_ins[j]];
                    if (t1.ord >= t2.ord) return;
                    for (std::size_t i2 = 0; i2 < t1.recv_keys.size(); ++i2) {
                        if (t1.recv_keys[i2] != e2) continue;
                        for (std::size_t i3 = 0; i3 < t2.recv_keys.size(); ++i3) {
                            if (t2.recv_keys[i3] != anchor) continue;
                            emit(2, t1, i2, t2, i3, w1);
                        }
                    }
                });
            });
        } else {
            auto emit3 = [&](std::size_t role, const TxView& t1, std::size_t i2, const TxView& t2,
                             std::size_t i3, const TxView& t3, std::size_t i4, double w) {
                const EntityKey e1 = t1.sender, e2 = t1.recv_keys[i2], e3 = t2.recv_keys[i3],
                                e4 = t3.recv_keys[i4];
                const bool loop = (e1 == e2) || (e2 == e3) || (e3 == e4);
                const double nb_address =
                    static_cast<double>(t1.recv_addr_counts[i2] + t2.sender_addrs +
                                        t2.recv_addr_counts[i3] + t3.sender_addrs);
                const double vals[] = {static_cast<double>(t1.n_inputs),
                                       static_cast<double>(t3.n_outputs),
                                       t1.value_btc,
                                       t1.recv_btc[i2],
                                       t2.recv_btc[i3],
                                       t3.recv_btc[i4],
                                       t1.fee_btc + t2.fee_btc + t3.fee_btc,
                                       nb_address,
                                       static_cast<double>(t3.height - t1.height)};
                record(role, loop, w, vals);
            };
            // walk ahead: from (t_prev, entity e) enumerate t_next in out_txs(e) > t_prev
            auto walk = [&](EntityKey e, std::uint32_t after,
                            auto&& fn, double w0) {
                const auto& lst = detail::txs_of(ix.out_txs, e);
                const auto from = detail::upper_index(lst, after);
                detail::fan_out(lst.size() - from, cap, rng, w0, [&](std::size_t j, double w1) {
                    const auto& t = ix.txs[lst[from + j]];
                    detail::fan_out(t.recv_keys.size(), cap, rng, w1,
                                    [&](std::size_t slot, double w2) { fn(t, slot, w2); });
                });
            };
            // start: anchor = e1
            detail::fan_out(outs.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t1 = ix.txs[outs[a]];
                detail::fan_out(t1.recv_keys.size(), cap, rng, w0, [&](std::size_t i2, double w1) {
                    walk(t1.recv_keys[i2], t1.ord,
                         [&](const TxView& t2, std::size_t i3, double w2) {
                             walk(t2.recv_keys[i3], t2.ord,
                                  [&](const TxView& t3, std::size_t i4, double w3) {
                                      emit3(0, t1, i2, t2, i3, t3, i4, w3);
                                  },
                                  w2);
                         },
                         w1);
                });
            });
            // mid role, anchor at position 2
            detail::fan_out(ins.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t1 = ix.txs[ins[a]];
                for (std::size_t i2 = 0; i2 < t1.recv_keys.size(); ++i2) {
                    if (t1.recv_keys[i2] != anchor) continue;
                    walk(anchor, t1.ord,
                         [&](const TxView& t2, std::size_t i3, double w2) {
                             walk(t2.recv_keys[i3], t2.ord,
                                  [&](const TxView& t3, std::size_t i4, double w3) {
                                      emit3(1, t1, i2, t2, i3, t3, i4, w3);
                                  },
                                  w2);
                         },
                         w0);
                }
            });
            // mid role, anchor at position 3
            detail::fan_out(ins.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t2 = ix.txs[ins[a]];
                const EntityKey e2 = t2.sender;
                const auto& prev = detail::txs_of(ix.in_txs, e2);
                const auto upto = detail::upper_index(prev, t2.ord == 0 ? 0 : t2.ord - 1);
                const auto limit = t2.ord == 0 ? 0 : upto;
                detail::fan_out(limit, cap, rng, w0, [&](std::size_t j, double w1) {
                    const auto& t1 = ix.txs[prev[j]];
                    if (t1.ord >= t2.ord) return;
                    for (std::size_t i2 = 0; i2 < t1.recv_keys.size(); ++i2) {
                        if (t1.recv_keys[i2] != e2) continue;
                        for (std::size_t i3 = 0; i3 < t2.recv_keys.size(); ++i3) {
                            if (t2.recv_keys[i3] != anchor) continue;
                            walk(anchor, t2.ord,
                                 [&](const TxView& t3, std::size_t i4, double w2) {
                                     emit3(1, t1, i2, t2, i3, t3, i4, w2);
                                 },
                                 w1);
                        }
                    }
                });
            });
            // end: anchor = e4
            detail::fan_out(ins.size(), cap, rng, 1.0, [&](std::size_t a, double w0) {
                const auto& t3 = ix.txs[ins[a]];
                const EntityKey e3 = t3.sender;
                const auto& t2s = detail::txs_of(ix.in_txs, e3);
                const auto upto3 = t3.ord == 0 ? 0 : detail::upper_index(t2s, t3.ord - 1);
                detail::fan_out(upto3, cap, rng, w0, [&](std::size_t j2, double w1) {
                    const auto& t2 = ix.txs[t2s[j2]];
                    if (t2.ord >= t3.ord) return;
                    const EntityKey e2 = t2.sender;
                    const auto& t1s = detail::txs_of(ix.in_txs, e2);
                    const auto upto2 = t2.ord == 0 ? 0 : detail::upper_index(t1s, t2.ord - 1);
                    detail::fan_out(upto2, cap, rng, w1, [&](std::size_t j1, double w2) {
                        const auto& t1 = ix.txs[t1s[j1]];
                        if (t1.ord >= t2.ord) return;
                        for (std::size_t i2 = 0; i2 < t1.recv_keys.size(); ++i2) {
                            if (t1.recv_keys[i2] != e2) continue;
                            for (std::size_t i3 = 0; i3 < t2.recv_keys.size(); ++i3) {
                                if (t2.recv_keys[i3] != e3) continue;
                                for (std::size_t i4 = 0; i4 < t3.recv_keys.size(); ++i4) {
                                    if (t3.recv_keys[i4] != anchor) continue;
                                    emit3(2, t1, i2, t2, i3, t3, i4, w2);
                                }
                            }
                        }
                    });
                });
            });
        }

        auto& row = blk.rows[r];
        for (std::size_t g = 0; g < agg.size(); ++g) {
            const auto& a = agg[g];
            std::size_t col = g * group_width;
            row[col++] = a.count;
            for (const auto& q : a.q) {
                row[col++] = q.mean();
                row[col++] = q.stddev();
            }
        }
        if (n_motif == 2) {
            const std::size_t base = roles.size() * 2 * group_width;
            for (std::size_t role = 0; role < roles.size(); ++role)
                row[base + role] = role_fee[role].mean();
        }
        if (sampling_rates)
            (*sampling_rates)[r] =
                weighted_instances > 0 ? plain_instances / weighted_instances : 1.0;
    }
    return blk;
}

// ---------------------------------------------------------------------------
// full matrix

struct FeatureMatrix {
    std::vector<std::uint64_t> entity_ids;
    std::vector<std::string> labels;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::size_t> class_column_counts;
};

// column-aligned join of feature blocks computed over the same entity set
inline FeatureMatrix join_blocks(const StreamIndex& ix, std::span<const FeatureBlock> blocks) {
    FeatureMatrix m;
    m.entity_ids = ix.row_ids;
    m.labels = ix.row_labels;
    m.rows.assign(ix.rows.size(), {});
    for (const auto& blk : blocks) {
        if (blk.rows.size() != ix.rows.size())
            throw std::invalid_argument("feature block entity set mismatch");
        m.class_column_counts[blk.feature_class] = blk.names.size();
        for (const auto& n : blk.names) m.columns.push_back(n);
        for (std::size_t r = 0; r < ix.rows.size(); ++r)
            m.rows[r].insert(m.rows[r].end(), blk.rows[r].begin(), blk.rows[r].end());
    }
    return m;
}

inline FeatureMatrix build_feature_matrix(std::span<const Block> stream,
                                          const infer::LabelTable* labels) {
    const auto ix = StreamIndex::build(stream, labels);
    std::vector<FeatureBlock> blocks;
    for (auto& blk : extract_address_entity_features(ix)) blocks.push_back(std::move(blk));
    blocks.push_back(extract_temporal_features(ix));
    blocks.push_back(extract_centrality_features(ix));
    blocks.push_back(extract_motif_features(ix, 1));
    blocks.push_back(extract_motif_features(ix, 2));
    blocks.push_back(extract_motif_features(ix, 3));
    return join_blocks(ix, blocks);
}

}  // namespace blocksim::feat
