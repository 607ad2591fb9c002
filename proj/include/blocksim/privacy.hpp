#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blocksim/clustering.hpp"
#include "blocksim/distributions.hpp"
#include "blocksim/params.hpp"
#include "blocksim/rng.hpp"

// Attacker model over alias partitions: closed-form expected privacy loss
// from address re-use, an exact enumeration oracle for it, the
// privacy-conscious asymptotic form, and Monte Carlo attack simulation.
namespace blocksim::privacy {

// An entity's address set split into aliases. Alias 0 is the seed alias the
// attacker already knows; selection_probs is the multinomial over aliases
// used when the entity assembles a transaction's inputs.
struct AliasPartition {
    std::vector<std::uint64_t> sizes;  // |A(e)_i|
    std::vector<double> probs;         // simplex over aliases
    double lambda_in = 2.99;           // input-address intensity of the entity's category

    std::uint64_t total_addresses() const {
        return std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0});
    }
    std::uint64_t hidden_addresses() const { return total_addresses() - sizes.at(0); }

    void validate() const {
        if (sizes.size() < 2) throw std::invalid_argument("alias partition needs >= 2 aliases");
        if (sizes.size() != probs.size())
            throw std::invalid_argument("sizes and probs must align");
        if (lambda_in <= 0) throw std::invalid_argument("lambda_in must be positive");
        double total = 0;
        for (double p : probs) {
            if (p < 0) throw std::invalid_argument("negative alias probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("alias probabilities must sum to 1");
        for (std::uint64_t s : sizes)
            if (s == 0) throw std::invalid_argument("empty alias");
    }
};

// Expected number of addresses revealed by one transaction:
//   E[D] = (1 - e^(-l p_1)) / (1 - e^(-l)) * sum_{i>=2} |A_i| (1 - e^(-l p_i))
inline double expected_discovered(const AliasPartition& ap) {
    ap.validate();
    const double l = ap.lambda_in;
    const double front = -std::expm1(-l * ap.probs[0]) / -std::expm1(-l);
    double tail = 0.0;
    for (std::size_t i = 1; i < ap.sizes.size(); ++i)
        tail += static_cast<double>(ap.sizes[i]) * -std::expm1(-l * ap.probs[i]);
    return front * tail;
}

// Exact oracle: marginalizes over I_t with truncated-Poisson weights and
// enumerates every multinomial outcome. Exponential in the alias count;
// guarded for small instances only.
inline double brute_force_expected_discovered(const AliasPartition& ap,
                                               std::uint32_t n_cutoff = 0) {
    ap.validate();
    const auto a = ap.sizes.size();
    const double l = ap.lambda_in;
    if (a > 5) throw std::invalid_argument("enumeration oracle limited to <= 5 aliases");
    if (l > 6.0) throw std::invalid_argument("enumeration oracle limited to lambda <= 6");
    if (n_cutoff == 0)
        n_cutoff = static_cast<std::uint32_t>(
            std::max(60.0, std::ceil(l + 20.0 * std::sqrt(l))));

    // enumeration volume guard
    double outcomes = 0;
    for (std::uint32_t n = 1; n <= n_cutoff; ++n) {
        double c = 1;
        for (std::size_t j = 1; j < a; ++j) c = c * (n + j) / j;
        outcomes += c;
    }
    if (outcomes > 1e7) throw std::invalid_argument("enumeration oracle instance too large");

    std::vector<double> log_fact(n_cutoff + 1, 0.0);
    for (std::uint32_t i = 2; i <= n_cutoff; ++i)
        log_fact[i] = log_fact[i - 1] + std::log(static_cast<double>(i));
    std::vector<double> log_p(a);
    for (std::size_t i = 0; i < a; ++i)
        log_p[i] = ap.probs[i] > 0 ? std::log(ap.probs[i]) : -std::numeric_limits<double>::infinity();

    double expectation = 0.0;
    std::vector<std::uint32_t> counts(a, 0);

    // recursive composition enumeration of (n_1 .. n_a) with sum n
    auto recurse = [&](auto&& self, std::size_t idx, std::uint32_t left, double log_prob,
                       std::uint32_t n) -> void {
        if (idx == a - 1) {
            counts[idx] = left;
            double lp = log_prob;
            if (left > 0) {
                if (ap.probs[idx] == 0) return;
                lp += static_cast<double>(left) * log_p[idx] - log_fact[left];
            }
            if (counts[0] == 0) return;  // seed alias unused: nothing linked
            double discovered = 0;
            for (std::size_t i = 1; i < a; ++i)
                if (counts[i] > 0) discovered += static_cast<double>(ap.sizes[i]);
            if (discovered == 0) return;
            const double log_multinom = log_fact[n] + lp;
            expectation += discovered * std::exp(log_multinom) * dist::tpois_pmf(l, n);
            return;
        }
        for (std::uint32_t k = 0; k <= left; ++k) {
            if (k > 0 && ap.probs[idx] == 0) break;
            counts[idx] = k;
            const double lp =
                log_prob + (k > 0 ? static_cast<double>(k) * log_p[idx] - log_fact[k] : 0.0);
            self(self, idx + 1, left - k, lp, n);
        }
    };

    for (std::uint32_t n = 1; n <= n_cutoff; ++n) recurse(recurse, 0, n, 0.0, n);
    return expectation;
}

// Privacy-conscious limit (p_1 << p_i): E[D] ~ lambda_in p_1 (|A(e)| - |A(e)_1|)
inline double expected_discovered_asymptotic(const AliasPartition& ap) {
    ap.validate();
    return ap.lambda_in * ap.probs[0] * static_cast<double>(ap.hidden_addresses());
}

// ---------------------------------------------------------------------------
// attacker state

// Union-find over an entity's addresses. Each alias is pre-linked internally
// (the attacker already clusters an alias as one pseudo-entity); the seed
// alias is the one initially attributed to the entity. discovered() counts
// addresses currently linked to the seed class, excluding the seed alias
// itself.
class AttackerKnowledge {
public:
    explicit AttackerKnowledge(const std::vector<std::vector<AddressId>>& aliases,
                               std::size_t seed_alias = 0)
        : seed_size_(aliases.at(seed_alias).size()) {
        for (const auto& alias : aliases)
            for (std::size_t i = 1; i < alias.size(); ++i) uf_.unite(alias[0], alias[i]);
        seed_root_ = uf_.find(aliases.at(seed_alias).front());
    }

    void observe(std::span<const AddressId> tx_inputs) {
        if (tx_inputs.empty()) return;
        for (std::size_t i = 1; i < tx_inputs.size(); ++i)
            uf_.unite(tx_inputs[0], tx_inputs[i]);
        seed_root_ = uf_.find(seed_root_);
    }

    std::uint64_t discovered() {
        return uf_.component_size(seed_root_) - seed_size_;
    }

    bool linked(AddressId a) { return uf_.same(a, seed_root_); }

private:
    UnionFind uf_;
    std::size_t seed_root_;
    std::uint64_t seed_size_;
};

// ---------------------------------------------------------------------------
// attack simulation

struct AttackCurve {
    std::vector<double> mean_fraction;  // identified share of hidden addresses, per tx count
    std::vector<double> std_error;
};

// One category's attack: the target entity participates in each observed
// transaction with probability `activity`; when it does, I_t input addresses
// are drawn ~ positive Poisson(lambda_in) and assigned to aliases by the
// selection multinomial. Aliases collapse under the multi-input heuristic.
inline AttackCurve simulate_attack_entity(const AliasPartition& ap, double activity,
                                          std::uint64_t n_transactions, std::uint64_t n_trials,
                                          Rng rng) {
    ap.validate();
    if (n_trials < 1) throw std::invalid_argument("simulate_attack: need >= 1 trial");
    const auto a = ap.sizes.size();
    const double denom = static_cast<double>(ap.hidden_addresses());

    // alias representative ids: alias i gets a contiguous block of ids
    std::vector<std::vector<AddressId>> alias_addrs(a);
    AddressId next = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::uint64_t j = 0; j < ap.sizes[i]; ++j) alias_addrs[i].push_back(next++);

    std::vector<double> sum(n_transactions, 0.0), sumsq(n_transactions, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
        Rng trial_rng = rng.stream(trial + 1);
        AttackerKnowledge knowledge(alias_addrs);
        for (std::uint64_t t = 0; t < n_transactions; ++t) {
            if (activity >= 1.0 || trial_rng.bernoulli(activity)) {
                const auto n_in = dist::tpois_sample(ap.lambda_in, trial_rng);
                touched.clear();
                for (std::uint64_t d = 0; d < n_in; ++d) {
                    double u = trial_rng.next_double();
                    std::size_t alias = a - 1;
                    for (std::size_t i = 0; i < a; ++i) {
                        if (u < ap.probs[i]) {
                            alias = i;
                            break;
                        }
                        u -= ap.probs[i];
                    }
                    touched.push_back(static_cast<std::uint32_t>(alias));
                }
                std::sort(touched.begin(), touched.end());
                touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
                std::vector<AddressId> observed;
                observed.reserve(touched.size());
                for (auto alias : touched) observed.push_back(alias_addrs[alias].front());
                knowledge.observe(observed);
            }
            const double frac =
                denom > 0 ? static_cast<double>(knowledge.discovered()) / denom : 0.0;
            sum[t] += frac;
            sumsq[t] += frac * frac;
        }
    }

    AttackCurve curve;
    curve.mean_fraction.resize(n_transactions);
    curve.std_error.resize(n_transactions);
    const auto n = static_cast<double>(n_trials);
    for (std::uint64_t t = 0; t < n_transactions; ++t) {
        const double m = sum[t] / n;
        const double var = std::max(0.0, sumsq[t] / n - m * m);
        curve.mean_fraction[t] = m;
        curve.std_error[t] = std::sqrt(var / n);
    }
    return curve;
}

// Builds the per-category alias partition from the calibrated parameters:
// seed-alias probability p_1 = 1 - p_new of the category, remaining mass
// split across hidden aliases proportionally to alias size.
inline AliasPartition category_partition(const CategoryShape& shape,
                                         const std::vector<std::uint64_t>& alias_sizes) {
    AliasPartition ap;
    ap.sizes = alias_sizes;
    ap.lambda_in = shape.lambda_in;
    ap.probs.resize(alias_sizes.size(), 0.0);
    ap.probs[0] = 1.0 - shape.p_new;
    std::uint64_t hidden = 0;
    for (std::size_t i = 1; i < alias_sizes.size(); ++i) hidden += alias_sizes[i];
    for (std::size_t i = 1; i < alias_sizes.size(); ++i)
        ap.probs[i] = shape.p_new * static_cast<double>(alias_sizes[i]) /
                      static_cast<double>(hidden);
    return ap;
}

// Identified-proportion curves per category as a function of the number of
// observed blockchain transactions; category activity shares gate how often
// the target entity of each category transacts.
inline std::map<Category, AttackCurve> simulate_attack(
    const CategoryParams& cats, const std::vector<std::uint64_t>& alias_sizes,
    std::uint64_t n_transactions, std::uint64_t n_trials, std::uint64_t seed) {
    cats.validate();
    std::map<Category, AttackCurve> out;
    std::uint64_t idx = 0;
    for (const auto& [c, shape] : cats.shapes) {
        const double activity = cats.activity.count(c) ? cats.activity.at(c) : 1.0;
        const auto ap = category_partition(shape, alias_sizes);
        out[c] = simulate_attack_entity(ap, activity, n_transactions, n_trials,
                                        Rng(seed).stream(0x517ac0de + idx));
        ++idx;
    }
    return out;
}

}  // namespace blocksim::privacy
