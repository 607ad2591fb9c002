#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "blocksim/block_model.hpp"
#include "blocksim/features.hpp"
#include "blocksim/io.hpp"

using namespace blocksim;
namespace ft = blocksim::feat;

namespace {

struct HandStream {
    std::vector<Block> blocks;
    infer::LabelTable labels;
    TxId next_tx = 1;
    std::map<AddressId, Satoshi> pending;  // addr -> value of its single utxo
    std::map<AddressId, UtxoId> pending_id;

    void label(AddressId a, EntityId e, Category c = Category::Exchange) {
        labels.by_address[a] = {e, c};
    }

    Block& block(std::uint64_t height, std::int64_t day) {
        blocks.push_back(Block{height, day * 86400, {}});
        return blocks.back();
    }

    // coinbase paying one utxo to addr
    void mint(Block& b, AddressId addr, Satoshi value, bool coinbase = true) {
        TransactionRecord tx;
        tx.id = next_tx++;
        tx.coinbase = coinbase;
        tx.block_height = b.height;
        tx.outputs.push_back({addr, !pending.contains(addr), {value}});
        pending[addr] = value;
        pending_id[addr] = UtxoId{tx.id, 0};
        b.txs.push_back(tx);
    }

    // spend addr's single utxo, paying each (addr, value) output; fee absorbs the rest
    void spend(Block& b, AddressId from, std::vector<std::pair<AddressId, Satoshi>> outs) {
        TransactionRecord tx;
        tx.id = next_tx++;
        tx.block_height = b.height;
        const Satoshi value = pending.at(from);
        tx.inputs.push_back({from, {Utxo{pending_id.at(from), value}}});
        pending.erase(from);
        Satoshi paid = 0;
        std::uint32_t vout = 0;
        for (auto& [addr, v] : outs) {
            tx.outputs.push_back({addr, !pending.contains(addr) && !spent_.contains(addr), {v}});
            spent_.insert(addr);
            pending[addr] = v;
            pending_id[addr] = UtxoId{tx.id, vout++};
            paid += v;
        }
        spent_.insert(from);
        tx.fee = value - paid;
        b.txs.push_back(tx);
    }

    std::set<AddressId> spent_;
};

}  // namespace

TEST_CASE("entity receiving one output: totals and coinbase proportion") {
    HandStream hs;
    hs.label(0, 1, Category::MiningPool);
    auto& b = hs.block(1, 10);
    hs.mint(b, 0, 2 * kSatPerBtc);

    const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
    const auto blks = ft::extract_address_entity_features(ix);
    REQUIRE(ix.rows.size() == 1);
    const auto& addr_names = blks[0].names;
    const auto& ent_names = blks[1].names;
    REQUIRE(addr_names.size() == 10);
    REQUIRE(ent_names.size() == 8);

    auto ent_col = [&](const std::string& n) {
        for (std::size_t i = 0; i < ent_names.size(); ++i)
            if (ent_names[i] == n) return blks[1].rows[0][i];
        FAIL("column not found: " + n);
        return 0.0;
    };
    CHECK(ent_col("ent_received_btc") == Catch::Approx(2.0));
    CHECK(ent_col("ent_balance_btc") == Catch::Approx(2.0));
    CHECK(ent_col("ent_coinbase_txs") == 1.0);
    CHECK(ent_col("ent_coinbase_ratio") == 1.0);  // pure miner
}

TEST_CASE("entity balances equal the ledger's unspent totals") {
    model::SimConfig cfg;
    cfg.categories = default_category_params();
    cfg.entities_per_category = 5;
    cfg.n_blocks = 25;
    cfg.seed = 44;
    const auto result = model::simulate_chain(cfg);
    const auto labels = infer::label_table(result.labels);

    const auto ix = ft::StreamIndex::build(result.blocks, &labels);
    const auto blks = ft::extract_address_entity_features(ix);

    std::size_t balance_col = SIZE_MAX;
    for (std::size_t i = 0; i < blks[1].names.size(); ++i)
        if (blks[1].names[i] == "ent_balance_btc") balance_col = i;
    REQUIRE(balance_col != SIZE_MAX);

    for (std::size_t r = 0; r < ix.rows.size(); ++r) {
        const auto entity = static_cast<EntityId>(ix.row_ids[r]);
        Satoshi unspent = 0;
        for (AddressId a : result.ledger.entity(entity).addresses())
            for (const auto& u : result.ledger.address(a).utxos()) unspent += u.value;
        const double expected = static_cast<double>(unspent) / kSatPerBtc;
        CHECK(blks[1].rows[r][balance_col] == Catch::Approx(expected).margin(1e-6));
    }
}

TEST_CASE("temporal features") {
    auto col = [](const ft::FeatureBlock& blk, std::size_t row, const std::string& n) {
        for (std::size_t i = 0; i < blk.names.size(); ++i)
            if (blk.names[i] == n) return blk.rows[row][i];
        FAIL("column not found: " + n);
        return 0.0;
    };

    SECTION("active every day of a 10-day span") {
        HandStream hs;
        hs.label(0, 1);
        for (int day = 1; day <= 10; ++day) {
            auto& b = hs.block(day, day);
            hs.mint(b, 0, 1000, day == 1);
        }
        const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
        const auto blk = ft::extract_temporal_features(ix);
        CHECK(col(blk, 0, "tmp_active_day_ratio") == 1.0);
        CHECK(col(blk, 0, "tmp_span_days") == 10.0);
    }
    SECTION("activity on days 1 and 10 only") {
        HandStream hs;
        hs.label(0, 1);
        auto& b1 = hs.block(1, 1);
        hs.mint(b1, 0, 1000);
        auto& b2 = hs.block(2, 10);
        hs.mint(b2, 0, 1000);
        const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
        const auto blk = ft::extract_temporal_features(ix);
        CHECK(col(blk, 0, "tmp_active_days") == 2.0);
        CHECK(col(blk, 0, "tmp_span_days") == 10.0);
        CHECK(col(blk, 0, "tmp_active_day_ratio") == Catch::Approx(0.2));
    }
    SECTION("date-bucket recount oracle on a simulated trace") {
        model::SimConfig cfg;
        cfg.categories = default_category_params();
        cfg.entities_per_category = 4;
        cfg.n_blocks = 10;
        cfg.params.lambda_size = 10;
        cfg.seed = 3;
        const auto result = model::simulate_chain(cfg);
        const auto labels = infer::label_table(result.labels);
        const auto ix = ft::StreamIndex::build(result.blocks, &labels);
        const auto blk = ft::extract_temporal_features(ix);

        // oracle: recount active days per entity straight from the records
        std::map<EntityId, std::set<std::int64_t>> days;
        for (const auto& b : result.blocks) {
            const std::int64_t day = b.timestamp / 86400;
            for (const auto& tx : b.txs) {
                if (!tx.inputs.empty())
                    if (const auto* s = labels.find(tx.inputs.front().addr))
                        days[s->entity].insert(day);
                for (const auto& out : tx.outputs)
                    if (const auto* o = labels.find(out.addr)) days[o->entity].insert(day);
            }
        }
        for (std::size_t r = 0; r < ix.rows.size(); ++r) {
            const auto e = static_cast<EntityId>(ix.row_ids[r]);
            const double expected = days.contains(e) ? static_cast<double>(days[e].size()) : 0.0;
            CHECK(col(blk, r, "tmp_active_days") == expected);
        }
    }
}

TEST_CASE("centrality features") {
    auto col = [](const ft::FeatureBlock& blk, std::size_t row, const std::string& n) {
        for (std::size_t i = 0; i < blk.names.size(); ++i)
            if (blk.names[i] == n) return blk.rows[row][i];
        FAIL("column not found: " + n);
        return 0.0;
    };

    SECTION("two entities, one transaction between them") {
        HandStream hs;
        hs.label(0, 1);
        hs.label(1, 2);
        auto& b1 = hs.block(1, 1);
        hs.mint(b1, 0, 10000);
        auto& b2 = hs.block(2, 2);
        hs.spend(b2, 0, {{1, 9000}});
        const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
        const auto blk = ft::extract_centrality_features(ix);
        REQUIRE(blk.names.size() == 42);
        CHECK(col(blk, 0, "ctr_degree") == 1.0);
        CHECK(col(blk, 1, "ctr_degree") == 1.0);
        CHECK(col(blk, 0, "ctr_out_degree") == 1.0);
        CHECK(col(blk, 1, "ctr_in_degree") == 1.0);
        CHECK(col(blk, 0, "ctr_strength_out") == Catch::Approx(9000.0 / kSatPerBtc));
    }
    SECTION("eigenvector centrality sums to one over a closed entity system") {
        model::SimConfig cfg;
        cfg.categories = default_category_params();
        cfg.entities_per_category = 4;
        cfg.n_blocks = 15;
        cfg.params.lambda_size = 10;
        cfg.seed = 5;
        cfg.subset.lambda_sub = 0.0;  // closed: every address is labeled
        const auto result = model::simulate_chain(cfg);
        const auto labels = infer::label_table(result.labels);
        const auto ix = ft::StreamIndex::build(result.blocks, &labels);
        const auto blk = ft::extract_centrality_features(ix);
        std::size_t eig = SIZE_MAX;
        for (std::size_t i = 0; i < blk.names.size(); ++i)
            if (blk.names[i] == "ctr_eigenvector") eig = i;
        double total = 0.0;
        for (const auto& row : blk.rows) total += row[eig];
        CHECK(total == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("star graph: the hub is strictly maximal") {
        HandStream hs;
        hs.label(0, 1);  // hub entity with 5 funded addresses
        for (AddressId a = 10; a < 15; ++a) hs.label(a, 1);
        for (EntityId leaf = 2; leaf <= 6; ++leaf)
            hs.label(static_cast<AddressId>(leaf + 18), leaf);
        auto& b1 = hs.block(1, 1);
        for (AddressId a = 10; a < 15; ++a) hs.mint(b1, a, 50000);
        for (int i = 0; i < 5; ++i) {
            auto& b = hs.block(2 + i, 2 + i);
            hs.spend(b, static_cast<AddressId>(10 + i),
                     {{static_cast<AddressId>(20 + i), 40000}});
        }
        const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
        const auto blk = ft::extract_centrality_features(ix);
        std::size_t eig = SIZE_MAX, deg = SIZE_MAX;
        for (std::size_t i = 0; i < blk.names.size(); ++i) {
            if (blk.names[i] == "ctr_eigenvector") eig = i;
            if (blk.names[i] == "ctr_degree") deg = i;
        }
        const std::size_t hub = ix.row_of.at(1);
        CHECK(blk.rows[hub][deg] == 5.0);
        for (std::size_t r = 0; r < ix.rows.size(); ++r) {
            if (r == hub) continue;
            CHECK(blk.rows[hub][eig] > blk.rows[r][eig]);
        }

        // independent oracle: dense lazy power iteration on the 6-node star
        const double w = 40000.0 / kSatPerBtc;
        std::vector<std::vector<double>> m(6, std::vector<double>(6, 0.0));
        for (int leaf = 1; leaf < 6; ++leaf) {
            m[0][leaf] = m[leaf][0] = w;
        }
        std::vector<double> x(6, 1.0 / 6);
        for (int it = 0; it < 64; ++it) {
            std::vector<double> y(6, 0.0);
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) y[i] += m[i][j] * x[j];
                y[i] += x[i];
            }
            double norm = 0;
            for (double v : y) norm += v;
            for (int i = 0; i < 6; ++i) x[i] = y[i] / norm;
        }
        CHECK(blk.rows[hub][eig] == Catch::Approx(x[0]).margin(1e-9));
    }
}

// ---------------------------------------------------------------------------
// motifs

namespace {

struct OracleTx {
    std::uint32_t ord;
    std::int64_t sender;  // entity key, -1 for inputless
    std::vector<std::pair<std::int64_t, double>> recv;
};

struct MotifCounts {
    // [role][kind] -> count; roles: 0 start/src, 1 mid/dst(1-motif), 2 end
    std::map<std::int64_t, std::array<std::array<double, 2>, 3>> per_anchor;

    void add(std::int64_t anchor, int role, bool loop) {
        auto& a = per_anchor[anchor];
        a[role][loop ? 1 : 0] += 1.0;
    }
};

std::vector<OracleTx> oracle_txs(std::span<const Block> blocks, const infer::LabelTable& labels) {
    std::vector<OracleTx> txs;
    std::uint32_t ord = 0;
    for (const auto& b : blocks) {
        for (const auto& tx : b.txs) {
            OracleTx o;
            o.ord = ord++;
            o.sender = -1;
            if (!tx.inputs.empty()) {
                const auto* info = labels.find(tx.inputs.front().addr);
                REQUIRE(info != nullptr);  // oracle traces are fully labeled
                o.sender = info->entity;
            }
            std::map<std::int64_t, double> recv;
            for (const auto& out : tx.outputs) {
                const auto* info = labels.find(out.addr);
                REQUIRE(info != nullptr);
                Satoshi v = 0;
                for (Satoshi x : out.values) v += x;
                recv[info->entity] += static_cast<double>(v) / kSatPerBtc;
            }
            for (auto& [k, v] : recv) o.recv.emplace_back(k, v);
            txs.push_back(std::move(o));
        }
    }
    return txs;
}

MotifCounts brute_force_motifs(const std::vector<OracleTx>& txs, int n) {
    MotifCounts counts;
    if (n == 1) {
        for (const auto& t : txs) {
            if (t.sender < 0) continue;
            for (const auto& [e2, v] : t.recv) {
                const bool loop = e2 == t.sender;
                counts.add(t.sender, 0, loop);
                counts.add(e2, 1, loop);
            }
        }
    } else if (n == 2) {
        for (const auto& t1 : txs) {
            if (t1.sender < 0) continue;
            for (const auto& t2 : txs) {
                if (t2.sender < 0 || t2.ord <= t1.ord) continue;
                for (const auto& [e2, v1] : t1.recv) {
                    if (e2 != t2.sender) continue;
                    for (const auto& [e3, v2] : t2.recv) {
                        const bool loop = (t1.sender == e2) || (e2 == e3);
                        counts.add(t1.sender, 0, loop);
                        counts.add(e2, 1, loop);
                        counts.add(e3, 2, loop);
                    }
                }
            }
        }
    } else {
        for (const auto& t1 : txs) {
            if (t1.sender < 0) continue;
            for (const auto& t2 : txs) {
                if (t2.sender < 0 || t2.ord <= t1.ord) continue;
                for (const auto& t3 : txs) {
                    if (t3.sender < 0 || t3.ord <= t2.ord) continue;
                    for (const auto& [e2, v1] : t1.recv) {
                        if (e2 != t2.sender) continue;
                        for (const auto& [e3, v2] : t2.recv) {
                            if (e3 != t3.sender) continue;
                            for (const auto& [e4, v3] : t3.recv) {
                                const bool loop =
                                    (t1.sender == e2) || (e2 == e3) || (e3 == e4);
                                counts.add(t1.sender, 0, loop);
                                counts.add(e2, 1, loop);  // pos2 -> mid
                                counts.add(e3, 1, loop);  // pos3 -> mid
                                counts.add(e4, 2, loop);
                            }
                        }
                    }
                }
            }
        }
    }
    return counts;
}

double block_col(const ft::FeatureBlock& blk, std::size_t row, const std::string& name) {
    for (std::size_t i = 0; i < blk.names.size(); ++i)
        if (blk.names[i] == name) return blk.rows[row][i];
    FAIL("column not found: " + name);
    return 0.0;
}

}  // namespace

TEST_CASE("1-motif: a change address makes a loop") {
    HandStream hs;
    hs.label(0, 1);
    hs.label(1, 1);  // change address of the same entity
    auto& b1 = hs.block(1, 1);
    hs.mint(b1, 0, 10000);
    auto& b2 = hs.block(2, 2);
    hs.spend(b2, 0, {{1, 9000}});

    const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
    const auto blk = ft::extract_motif_features(ix, 1);
    REQUIRE(blk.names.size() == 44);
    const std::size_t row = ix.row_of.at(1);
    CHECK(block_col(blk, row, "m1_src_loop_count") == 1.0);
    CHECK(block_col(blk, row, "m1_src_direct_count") == 0.0);
    CHECK(block_col(blk, row, "m1_dst_loop_count") == 1.0);
}

TEST_CASE("2-motif chain carries the value through the middle entity") {
    HandStream hs;
    hs.label(0, 1);
    hs.label(1, 2);
    hs.label(2, 3);
    auto& b1 = hs.block(1, 1);
    hs.mint(b1, 0, 8 * kSatPerBtc);
    auto& b2 = hs.block(2, 2);
    hs.spend(b2, 0, {{1, 7 * kSatPerBtc}});  // e1 -> t1 -> e2, mid_val 7
    auto& b3 = hs.block(3, 3);
    hs.spend(b3, 1, {{2, 5 * kSatPerBtc}});  // e2 -> t2 -> e3

    const auto ix = ft::StreamIndex::build(hs.blocks, &hs.labels);
    const auto blk = ft::extract_motif_features(ix, 2);
    REQUIRE(blk.names.size() == 81);
    const std::size_t start = ix.row_of.at(1);
    CHECK(block_col(blk, start, "m2_start_direct_count") == 1.0);
    CHECK(block_col(blk, start, "m2_start_loop_count") == 0.0);
    CHECK(block_col(blk, start, "m2_start_direct_mid_val_mean") == Catch::Approx(7.0));
    CHECK(block_col(blk, start, "m2_start_direct_out_val_mean") == Catch::Approx(5.0));
    CHECK(block_col(blk, start, "m2_start_direct_in_val_mean") == Catch::Approx(8.0));
    const std::size_t mid = ix.row_of.at(2);
    CHECK(block_col(blk, mid, "m2_mid_direct_count") == 1.0);
    const std::size_t end = ix.row_of.at(3);
    CHECK(block_col(blk, end, "m2_end_direct_count") == 1.0);
}

TEST_CASE("motif counts equal brute-force path enumeration") {
    model::SimConfig cfg;
    cfg.categories = default_category_params();
    cfg.entities_per_category = 3;
    cfg.n_blocks = 5;
    cfg.params.lambda_size = 10;  // about 50 ordinary txs
    cfg.subset.lambda_sub = 0.0;
    cfg.subset.lambda_size_sub = 2.0;
    cfg.seed = 61;
    const auto result = model::simulate_chain(cfg);
    const auto labels = infer::label_table(result.labels);
    const auto ix = ft::StreamIndex::build(result.blocks, &labels);
    const auto otxs = oracle_txs(result.blocks, labels);

    static const char* role_names_12[] = {"src", "dst"};
    static const char* role_names_23[] = {"start", "mid", "end"};
    static const char* kind_names[] = {"direct", "loop"};

    for (int n : {1, 2, 3}) {
        const auto blk = ft::extract_motif_features(ix, n, nullptr, ft::MotifCaps{0});
        const auto oracle = brute_force_motifs(otxs, n);
        const int n_roles = n == 1 ? 2 : 3;
        for (std::size_t r = 0; r < ix.rows.size(); ++r) {
            const auto anchor = ix.rows[r];
            std::array<std::array<double, 2>, 3> expected{};
            if (auto it = oracle.per_anchor.find(anchor); it != oracle.per_anchor.end())
                expected = it->second;
            for (int role = 0; role < n_roles; ++role) {
                for (int kind = 0; kind < 2; ++kind) {
                    const std::string col = "m" + std::to_string(n) + "_" +
                                            (n == 1 ? role_names_12[role] : role_names_23[role]) +
                                            "_" + kind_names[kind] + "_count";
                    INFO("n=" << n << " row=" << r << " col=" << col);
                    CHECK(block_col(blk, r, col) == expected[role][kind]);
                }
            }
        }
    }
}

TEST_CASE("throttled motif enumeration stays deterministic and consistent") {
    model::SimConfig cfg;
    cfg.categories = default_category_params();
    cfg.entities_per_category = 3;
    cfg.n_blocks = 8;
    cfg.params.lambda_size = 12;
    cfg.seed = 29;
    const auto result = model::simulate_chain(cfg);
    const auto labels = infer::label_table(result.labels);
    const auto ix = ft::StreamIndex::build(result.blocks, &labels);

    std::vector<double> rates1, rates2;
    const auto b1 = ft::extract_motif_features(ix, 3, &rates1, ft::MotifCaps{4});
    const auto b2 = ft::extract_motif_features(ix, 3, &rates2, ft::MotifCaps{4});
    CHECK(b1.rows == b2.rows);
    CHECK(rates1 == rates2);
    for (double r : rates1) CHECK(r <= 1.0 + 1e-12);

    // weighted counts stay within an order of magnitude of the exact ones
    const auto exact = ft::extract_motif_features(ix, 3, nullptr, ft::MotifCaps{0});
    double est_total = 0, exact_total = 0;
    for (std::size_t r = 0; r < ix.rows.size(); ++r) {
        est_total += block_col(b1, r, "m3_start_direct_count") +
                     block_col(b1, r, "m3_start_loop_count");
        exact_total += block_col(exact, r, "m3_start_direct_count") +
                       block_col(exact, r, "m3_start_loop_count");
    }
    REQUIRE(exact_total > 0);
    CHECK(est_total > 0.1 * exact_total);
    CHECK(est_total < 10.0 * exact_total);
}

TEST_CASE("feature matrix realizes the declared column counts") {
    model::SimConfig cfg;
    cfg.categories = default_category_params();
    cfg.entities_per_category = 3;
    cfg.n_blocks = 6;
    cfg.params.lambda_size = 8;
    cfg.seed = 15;
    const auto result = model::simulate_chain(cfg);
    const auto labels = infer::label_table(result.labels);

    const auto m = ft::build_feature_matrix(result.blocks, &labels);
    CHECK(m.class_column_counts.at("address") == 10);
    CHECK(m.class_column_counts.at("entity") == 8);
    CHECK(m.class_column_counts.at("temporal") == 16);
    CHECK(m.class_column_counts.at("centrality") == 42);
    CHECK(m.class_column_counts.at("motif1") == 44);
    CHECK(m.class_column_counts.at("motif2") == 81);
    CHECK(m.class_column_counts.at("motif3") == 114);
    CHECK(m.columns.size() == 10 + 8 + 16 + 42 + 44 + 81 + 114);
    CHECK(m.rows.size() == 12);  // 4 categories x 3 entities
    for (const auto& row : m.rows) CHECK(row.size() == m.columns.size());

    // deterministic export
    const auto m2 = ft::build_feature_matrix(result.blocks, &labels);
    CHECK(io::feature_matrix_to_csv(m) == io::feature_matrix_to_csv(m2));

    // schema covers every column exactly once
    const auto schema = io::feature_schema_to_json(m);
    CHECK(schema.at("columns").size() == m.columns.size() + 2);
}

TEST_CASE("labeled entity with no activity yields a zero row") {
    HandStream hs;
    hs.label(0, 1);
    hs.label(5, 9);  // never used
    auto& b = hs.block(1, 1);
    hs.mint(b, 0, 1000);
    const auto m = ft::build_feature_matrix(hs.blocks, &hs.labels);
    REQUIRE(m.rows.size() == 2);
    const std::size_t idle = m.entity_ids[0] == 9 ? 0 : 1;
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        if (m.columns[c] == "ent_n_addresses") {
            CHECK(m.rows[idle][c] == 1.0);  // owns one labeled address, zero activity
        } else {
            CHECK(m.rows[idle][c] == 0.0);
        }
    }
}

TEST_CASE("without labels, rows come from multi-input clusters") {
    HandStream hs;
    auto& b1 = hs.block(1, 1);
    hs.mint(b1, 0, 10000);
    hs.mint(b1, 1, 10000, false);
    auto& b2 = hs.block(2, 2);
    // one tx spending both addresses links them into a single cluster
    TransactionRecord tx;
    tx.id = hs.next_tx++;
    tx.inputs.push_back({0, {Utxo{hs.pending_id.at(0), 10000}}});
    tx.inputs.push_back({1, {Utxo{hs.pending_id.at(1), 10000}}});
    tx.outputs.push_back({2, true, {20000}});
    b2.txs.push_back(tx);

    const auto m = ft::build_feature_matrix(hs.blocks, nullptr);
    REQUIRE(m.rows.size() == 1);  // the {0,1} cluster; address 2 is a sink
    CHECK(m.labels[0] == "Unknown");
}
