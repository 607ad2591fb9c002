#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "blocksim/fenwick.hpp"
#include "blocksim/rng.hpp"

namespace blocksim {

using Satoshi = std::int64_t;
using AddressId = std::uint64_t;
using EntityId = std::uint32_t;
using TxId = std::uint64_t;

inline constexpr Satoshi kSatPerBtc = 100'000'000;

enum class Category : std::uint8_t { Exchange, Service, Gambling, MiningPool, Unknown };

inline constexpr Category kKnownCategories[] = {Category::Exchange, Category::Service,
                                                Category::Gambling, Category::MiningPool};

inline const char* category_name(Category c) {
    switch (c) {
        case Category::Exchange: return "Exchange";
        case Category::Service: return "Service";
        case Category::Gambling: return "Gambling";
        case Category::MiningPool: return "MiningPool";
        case Category::Unknown: return "Unknown";
    }
    return "Unknown";
}

inline std::optional<Category> category_from_name(const std::string& s) {
    for (Category c : kKnownCategories)
        if (s == category_name(c)) return c;
    if (s == "Unknown") return Category::Unknown;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// transaction records

struct UtxoId {
    TxId tx = 0;
    std::uint32_t vout = 0;
    friend bool operator==(const UtxoId&, const UtxoId&) = default;
    friend auto operator<=>(const UtxoId&, const UtxoId&) = default;
};

struct UtxoIdHash {
    std::size_t operator()(const UtxoId& u) const {
        return std::hash<std::uint64_t>{}(u.tx * 0x9e3779b97f4a7c15ULL + u.vout);
    }
};

struct Utxo {
    UtxoId id;
    Satoshi value = 0;
    friend bool operator==(const Utxo&, const Utxo&) = default;
};

struct TxInput {
    AddressId addr = 0;
    std::vector<Utxo> consumed;
    friend bool operator==(const TxInput&, const TxInput&) = default;
};

struct TxOutput {
    AddressId addr = 0;
    bool is_new = false;  // address first appears in this transaction
    std::vector<Satoshi> values;
    friend bool operator==(const TxOutput&, const TxOutput&) = default;
};

struct TransactionRecord {
    TxId id = 0;
    std::uint64_t block_height = 0;
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
    Satoshi fee = 0;
    bool coinbase = false;
    std::optional<EntityId> input_entity;  // ground truth, set by the entity-model simulator

    bool inputless() const { return inputs.empty(); }
    bool boundary_in() const { return inputs.empty() && !coinbase; }

    Satoshi input_value() const {
        Satoshi v = 0;
        for (const auto& in : inputs)
            for (const auto& u : in.consumed) v += u.value;
        return v;
    }
    Satoshi output_value() const {
        Satoshi v = 0;
        for (const auto& out : outputs)
            for (Satoshi x : out.values) v += x;
        return v;
    }
    // transaction value: sum of consumed inputs, or total minted for inputless txs
    Satoshi value() const { return inputless() ? output_value() + fee : input_value(); }

    friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

struct Block {
    std::uint64_t height = 0;
    std::int64_t timestamp = 0;
    std::vector<TransactionRecord> txs;
    friend bool operator==(const Block&, const Block&) = default;
};

// ---------------------------------------------------------------------------
// errors

struct LedgerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DoubleSpendError : LedgerError {
    UtxoId utxo;
    explicit DoubleSpendError(UtxoId u)
        : LedgerError("utxo (" + std::to_string(u.tx) + "," + std::to_string(u.vout) +
                      ") does not exist or is already spent"),
          utxo(u) {}
};

struct ConservationError : LedgerError {
    TxId tx;
    explicit ConservationError(TxId t)
        : LedgerError("tx " + std::to_string(t) + " violates value conservation"), tx(t) {}
};

struct ExhaustedError : LedgerError {
    std::uint64_t height;
    explicit ExhaustedError(std::uint64_t h)
        : LedgerError("ledger has no spendable funds at block height " + std::to_string(h)),
          height(h) {}
};

// ---------------------------------------------------------------------------
// address / entity state

class Ledger;

class AddressState {
public:
    AddressId id() const { return id_; }
    const std::vector<Utxo>& utxos() const { return utxos_; }
    std::uint64_t k_utxo() const { return utxos_.size(); }
    std::uint64_t k_out() const { return k_out_; }
    std::optional<EntityId> owner() const { return owner_; }
    bool external() const { return external_; }
    bool seen() const { return seen_; }

private:
    friend class Ledger;
    AddressId id_ = 0;
    std::vector<Utxo> utxos_;
    std::uint64_t k_out_ = 0;  // cumulative count of UTXOs this address has spent
    std::optional<EntityId> owner_;
    bool external_ = false;  // outside the modeled subset; receives, never spends
    bool seen_ = false;      // appeared in some transaction
};

class EntityRecord {
public:
    EntityId id() const { return id_; }
    Category category() const { return category_; }
    const std::vector<AddressId>& addresses() const { return members_; }
    std::int64_t k_utxo_total() const { return k_utxo_total_; }
    std::int64_t k_out_total() const { return k_out_total_; }
    std::uint64_t funded_addresses() const { return funded_; }

private:
    friend class Ledger;
    EntityId id_ = 0;
    Category category_ = Category::Unknown;
    std::vector<AddressId> members_;
    std::unordered_map<AddressId, std::uint32_t> local_;  // member -> index in members_
    std::int64_t k_utxo_total_ = 0;
    std::int64_t k_out_total_ = 0;
    std::uint64_t funded_ = 0;
    WeightedIndex in_weights_;   // per member: k_utxo + 1 if funded, else 0
    WeightedIndex out_weights_;  // per member: k_out + 1
};

struct ApplyDelta {
    std::uint64_t consumed_utxos = 0;
    std::uint64_t created_utxos = 0;
    Satoshi consumed_value = 0;
    Satoshi created_value = 0;
};

struct DegreeSnapshot {
    std::vector<std::uint64_t> k_utxo;  // indexed by address id
    std::vector<std::uint64_t> k_out;
    std::vector<std::int64_t> entity_k_utxo;  // indexed by entity id
    std::vector<std::int64_t> entity_k_out;
};

// ---------------------------------------------------------------------------
// The bipartite address-transaction ledger: unspent-output sets, degrees,
// ownership, and the attachment-weight indices used by the block samplers.
// Single writer per chain stream; reads may be shared.
class Ledger {
public:
    // --- construction of addresses / entities -----------------------------

    AddressId create_address(std::optional<EntityId> owner = std::nullopt, bool external = false) {
        AddressState a;
        a.id_ = addresses_.size();
        a.owner_ = owner;
        a.external_ = external;
        addresses_.push_back(std::move(a));
        in_weights_.push_back(0);                    // unfunded until it receives
        out_weights_.push_back(external ? 0 : 1);    // k_out + 1 smoothing
        if (owner) attach_member(*owner, addresses_.back().id_);
        return addresses_.back().id_;
    }

    // ensure ids [0..id] exist (parse path; file ids are dense by contract)
    void ensure_address(AddressId id) {
        while (addresses_.size() <= id) create_address();
    }

    EntityId create_entity(Category c) {
        EntityRecord e;
        e.id_ = static_cast<EntityId>(entities_.size());
        e.category_ = c;
        entities_.push_back(std::move(e));
        return entities_.back().id_;
    }

    void assign_owner(AddressId a, EntityId e) {
        if (addresses_[a].owner_) throw LedgerError("address already owned");
        addresses_[a].owner_ = e;
        attach_member(e, a);
    }

    // --- queries -----------------------------------------------------------

    std::size_t n_addresses() const { return addresses_.size(); }
    std::size_t n_entities() const { return entities_.size(); }
    const AddressState& address(AddressId a) const { return addresses_[a]; }
    const EntityRecord& entity(EntityId e) const { return entities_[e]; }

    Satoshi total_unspent() const { return total_unspent_; }
    Satoshi total_minted() const { return total_minted_; }
    Satoshi total_fees() const { return total_fees_; }
    Satoshi total_boundary_out() const { return total_boundary_out_; }

    // number of internal addresses currently holding at least one UTXO
    std::uint64_t funded_addresses() const { return funded_; }

    bool utxo_exists(const UtxoId& id) const { return utxo_index_.contains(id); }

    DegreeSnapshot degree_snapshot() const {
        DegreeSnapshot s;
        s.k_utxo.reserve(addresses_.size());
        s.k_out.reserve(addresses_.size());
        for (const auto& a : addresses_) {
            s.k_utxo.push_back(a.k_utxo());
            s.k_out.push_back(a.k_out());
        }
        for (const auto& e : entities_) {
            s.entity_k_utxo.push_back(e.k_utxo_total_);
            s.entity_k_out.push_back(e.k_out_total_);
        }
        return s;
    }

    // --- attachment picks ----------------------------------------------------
    // Input side: P(a) proportional to k_utxo(a) + 1 over funded internal
    // addresses (conditioning on spendability; unfunded addresses cannot
    // field a UTXO draw). Output side: P(a) proportional to k_out(a) + 1
    // over all internal addresses already seen.

    std::optional<AddressId> pick_input_address(Rng& rng,
                                                const std::vector<AddressId>& exclude) {
        return masked_pick(in_weights_, rng, exclude);
    }

    std::optional<AddressId> pick_output_address(Rng& rng) {
        if (out_weights_.total() <= 0) return std::nullopt;
        std::vector<AddressId> none;
        return masked_pick(out_weights_, rng, none);
    }

    std::optional<AddressId> pick_entity_input_address(EntityId e, Rng& rng,
                                                       const std::vector<AddressId>& exclude) {
        auto& ent = entities_[e];
        std::vector<AddressId> local_exclude;
        for (AddressId a : exclude) {
            auto it = ent.local_.find(a);
            if (it != ent.local_.end()) local_exclude.push_back(it->second);
        }
        auto idx = masked_pick_local(ent.in_weights_, rng, local_exclude);
        if (!idx) return std::nullopt;
        return ent.members_[*idx];
    }

    std::optional<AddressId> pick_entity_output_address(EntityId e, Rng& rng) {
        auto& ent = entities_[e];
        if (ent.out_weights_.total() <= 0) return std::nullopt;
        std::vector<std::size_t> none;
        auto idx = masked_pick_local(ent.out_weights_, rng, none);
        if (!idx) return std::nullopt;
        return ent.members_[*idx];
    }

    // uniform draw of `count` distinct UTXOs from an address
    std::vector<Utxo> pick_utxos(AddressId a, std::uint64_t count, Rng& rng) const {
        const auto& pool = addresses_[a].utxos_;
        if (count > pool.size()) throw LedgerError("pick_utxos: count exceeds k_utxo");
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<Utxo> out;
        out.reserve(count);
        for (std::uint64_t j = 0; j < count; ++j) {
            const std::size_t r = j + rng.below(idx.size() - j);
            std::swap(idx[j], idx[r]);
            out.push_back(pool[idx[j]]);
        }
        return out;
    }

    // --- mutation ------------------------------------------------------------

    // Validates and applies one transaction. Throws DoubleSpendError or
    // ConservationError without mutating state on rejection.
    ApplyDelta apply_transaction(const TransactionRecord& tx) {
        // validity checks first; no mutation until all pass
        std::unordered_map<UtxoId, bool, UtxoIdHash> in_tx;
        for (const auto& in : tx.inputs) {
            if (in.addr >= addresses_.size()) throw LedgerError("input address unknown");
            if (in.consumed.empty()) throw LedgerError("input without consumed utxos");
            for (const auto& u : in.consumed) {
                auto it = utxo_index_.find(u.id);
                if (it == utxo_index_.end()) throw DoubleSpendError(u.id);
                if (!in_tx.emplace(u.id, true).second) throw DoubleSpendError(u.id);
                const auto& held = addresses_[it->second.addr].utxos_[it->second.slot];
                if (it->second.addr != in.addr || held.value != u.value)
                    throw LedgerError("consumed utxo does not match ledger state");
            }
        }
        Satoshi out_total = 0;
        std::uint32_t n_created = 0;
        for (const auto& out : tx.outputs) {
            for (Satoshi v : out.values) {
                if (v <= 0) throw LedgerError("non-positive output value");
                out_total += v;
                ++n_created;
            }
        }
        for (std::uint32_t v = 0; v < n_created; ++v)
            if (utxo_index_.contains(UtxoId{tx.id, v}))
                throw LedgerError("utxo id collision: tx id " + std::to_string(tx.id) + " reused");
        if (tx.fee < 0) throw LedgerError("negative fee");
        if (!tx.inputless() && out_total + tx.fee != tx.input_value())
            throw ConservationError(tx.id);

        ApplyDelta delta;

        // consume
        for (const auto& in : tx.inputs) {
            auto& a = addresses_[in.addr];
            for (const auto& u : in.consumed) {
                remove_utxo(in.addr, u.id);
                delta.consumed_value += u.value;
                ++delta.consumed_utxos;
                if (a.external_)
                    total_boundary_out_ -= u.value;
                else
                    total_unspent_ -= u.value;
            }
            const auto spent = static_cast<std::int64_t>(in.consumed.size());
            a.k_out_ += in.consumed.size();
            bump_out_weight(in.addr, spent);
            refresh_in_weight(in.addr);
            mark_seen(in.addr);
        }

        // create
        std::uint32_t vout = 0;
        for (const auto& out : tx.outputs) {
            if (out.addr >= addresses_.size()) ensure_address(out.addr);
            auto& a = addresses_[out.addr];
            for (Satoshi v : out.values) {
                add_utxo(out.addr, UtxoId{tx.id, vout++}, v);
                delta.created_value += v;
                ++delta.created_utxos;
                if (a.external_)
                    total_boundary_out_ += v;
                else
                    total_unspent_ += v;
            }
            refresh_in_weight(out.addr);
            mark_seen(out.addr);
        }

        total_fees_ += tx.fee;
        if (tx.inputless()) total_minted_ += out_total + tx.fee;
        return delta;
    }

    void apply_block(const Block& b) {
        for (const auto& tx : b.txs) apply_transaction(tx);
    }

private:
    void attach_member(EntityId e, AddressId a) {
        auto& ent = entities_[e];
        ent.local_[a] = static_cast<std::uint32_t>(ent.members_.size());
        ent.members_.push_back(a);
        const auto& st = addresses_[a];
        ent.in_weights_.push_back(st.k_utxo() > 0 ? static_cast<std::int64_t>(st.k_utxo()) + 1 : 0);
        ent.out_weights_.push_back(static_cast<std::int64_t>(st.k_out()) + 1);
        ent.k_utxo_total_ += static_cast<std::int64_t>(st.k_utxo());
        ent.k_out_total_ += static_cast<std::int64_t>(st.k_out());
        if (st.k_utxo() > 0) ++ent.funded_;
    }

    void add_utxo(AddressId a, UtxoId id, Satoshi value) {
        auto& st = addresses_[a];
        if (utxo_index_.contains(id)) throw LedgerError("duplicate utxo id created");
        utxo_index_[id] = Loc{a, static_cast<std::uint32_t>(st.utxos_.size())};
        st.utxos_.push_back(Utxo{id, value});
        if (st.utxos_.size() == 1 && !st.external_) ++funded_;
        if (st.owner_) {
            auto& ent = entities_[*st.owner_];
            ent.k_utxo_total_ += 1;
            if (st.utxos_.size() == 1) ++ent.funded_;
        }
    }

    void remove_utxo(AddressId a, UtxoId id) {
        auto& st = addresses_[a];
        auto it = utxo_index_.find(id);
        const std::uint32_t pos = it->second.slot;
        const std::uint32_t last = static_cast<std::uint32_t>(st.utxos_.size()) - 1;
        if (pos != last) {
            st.utxos_[pos] = st.utxos_[last];
            utxo_index_[st.utxos_[pos].id].slot = pos;
        }
        st.utxos_.pop_back();
        utxo_index_.erase(it);
        if (st.utxos_.empty() && !st.external_) --funded_;
        if (st.owner_) {
            auto& ent = entities_[*st.owner_];
            ent.k_utxo_total_ -= 1;
            if (st.utxos_.empty()) --ent.funded_;
        }
    }

    // input weight: k_utxo + 1 while funded, 0 otherwise; external always 0
    void refresh_in_weight(AddressId a) {
        const auto& st = addresses_[a];
        const std::int64_t w =
            (st.external_ || st.utxos_.empty()) ? 0 : static_cast<std::int64_t>(st.utxos_.size()) + 1;
        in_weights_.set(a, w);
        if (st.owner_) {
            auto& ent = entities_[*st.owner_];
            ent.in_weights_.set(ent.local_[a], w);
        }
    }

    void bump_out_weight(AddressId a, std::int64_t spent) {
        const auto& st = addresses_[a];
        if (!st.external_) out_weights_.add(a, spent);
        if (st.owner_) {
            auto& ent = entities_[*st.owner_];
            ent.out_weights_.add(ent.local_[a], spent);
            ent.k_out_total_ += spent;
        }
    }

    void mark_seen(AddressId a) { addresses_[a].seen_ = true; }

    template <typename ExcludeList>
    std::optional<std::size_t> masked_pick_local(WeightedIndex& w, Rng& rng,
                                                 const ExcludeList& exclude) {
        std::vector<std::pair<std::size_t, std::int64_t>> saved;
        saved.reserve(exclude.size());
        for (auto e : exclude) {
            const auto i = static_cast<std::size_t>(e);
            saved.emplace_back(i, w.weight(i));
            w.set(i, 0);
        }
        std::optional<std::size_t> result;
        if (w.total() > 0) result = w.sample(rng);
        for (auto& [i, wt] : saved) w.set(i, wt);
        return result;
    }

    std::optional<AddressId> masked_pick(WeightedIndex& w, Rng& rng,
                                         const std::vector<AddressId>& exclude) {
        auto r = masked_pick_local(w, rng, exclude);
        if (!r) return std::nullopt;
        return static_cast<AddressId>(*r);
    }

    struct Loc {
        AddressId addr;
        std::uint32_t slot;
    };

    std::vector<AddressState> addresses_;
    std::vector<EntityRecord> entities_;
    std::unordered_map<UtxoId, Loc, UtxoIdHash> utxo_index_;
    WeightedIndex in_weights_;   // global funded-address attachment weights
    WeightedIndex out_weights_;  // global k_out + 1 weights (internal only)
    std::uint64_t funded_ = 0;
    Satoshi total_unspent_ = 0;
    Satoshi total_minted_ = 0;
    Satoshi total_fees_ = 0;
    Satoshi total_boundary_out_ = 0;
};

}  // namespace blocksim
