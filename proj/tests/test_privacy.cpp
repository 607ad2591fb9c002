#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <queue>
#include <set>
#include <vector>

#include "blocksim/privacy.hpp"

using namespace blocksim;
namespace pv = blocksim::privacy;

namespace {

pv::AliasPartition make_partition(std::vector<std::uint64_t> sizes, std::vector<double> probs,
                                  double lambda) {
    pv::AliasPartition ap;
    ap.sizes = std::move(sizes);
    ap.probs = std::move(probs);
    ap.lambda_in = lambda;
    return ap;
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& x : p) {
        x = -std::log(rng.next_double_pos());
        total += x;
    }
    for (auto& x : p) x /= total;
    return p;
}

}  // namespace

TEST_CASE("expected discovered addresses: boundary cases") {
    CHECK(pv::expected_discovered(make_partition({5, 10}, {0.0, 1.0}, 2.99)) == 0.0);
    CHECK(pv::expected_discovered(make_partition({5, 10}, {1.0, 0.0}, 2.99)) == 0.0);
}

TEST_CASE("expected discovered matches the closed form and the enumeration oracle") {
    const auto ap = make_partition({5, 10}, {0.5, 0.5}, 2.99);
    const double closed = pv::expected_discovered(ap);
    CHECK(closed == Catch::Approx(6.336).margin(0.005));
    const double brute = pv::brute_force_expected_discovered(ap);
    CHECK(closed == Catch::Approx(brute).margin(1e-9));
}

TEST_CASE("enumeration oracle boundary cases") {
    CHECK(pv::brute_force_expected_discovered(make_partition({3, 4}, {1.0, 0.0}, 2.0)) == 0.0);
    CHECK(pv::brute_force_expected_discovered(make_partition({3, 4}, {0.0, 1.0}, 2.0)) == 0.0);
}

TEST_CASE("closed form equals the oracle on a small instance grid") {
    Rng rng(7);
    for (double lambda : {0.5, 2.99}) {
        for (std::size_t aliases : {2u, 3u, 4u}) {
            for (int rep = 0; rep < 5; ++rep) {
                std::vector<std::uint64_t> sizes;
                for (std::size_t i = 0; i < aliases; ++i) sizes.push_back(1 + rng.below(20));
                const auto ap = make_partition(sizes, random_simplex(aliases, rng), lambda);
                const double closed = pv::expected_discovered(ap);
                const double brute = pv::brute_force_expected_discovered(ap);
                CHECK(std::abs(closed - brute) < 1e-9);
            }
        }
    }
}

TEST_CASE("privacy-conscious asymptotics") {
    SECTION("seed probability zero gives zero") {
        CHECK(pv::expected_discovered_asymptotic(make_partition({5, 10}, {0.0, 1.0}, 2.99)) == 0.0);
    }
    SECTION("direct formula evaluation") {
        CHECK(pv::expected_discovered_asymptotic(make_partition({3, 7}, {1e-3, 1.0 - 1e-3}, 2.0)) ==
              Catch::Approx(0.014).margin(1e-12));
    }
    SECTION("ratio to the exact value stabilizes as p1 vanishes") {
        std::vector<double> ratios;
        for (double p1 : {1e-2, 1e-3, 1e-4}) {
            // hidden aliases keep fixed relative weights
            const double rest = 1.0 - p1;
            const auto ap =
                make_partition({4, 6, 9}, {p1, rest * 0.4, rest * 0.6}, 2.99);
            ratios.push_back(pv::expected_discovered(ap) /
                             pv::expected_discovered_asymptotic(ap));
        }
        // convergence is O(p1): consecutive gaps shrink by an order of magnitude
        CHECK(std::abs(ratios[1] - ratios[2]) < 0.2 * std::abs(ratios[0] - ratios[1]));
        CHECK(ratios[1] == Catch::Approx(ratios[2]).epsilon(0.005));
    }
}

// In the privacy-conscious regime (small p1), more address re-use means more
// exposure. The formula is not monotone over the whole simplex: at p1 = 1 the
// hidden aliases are never selected and the expectation returns to zero.
TEST_CASE("expected discovered is monotone in small p1 and in alias sizes") {
    Rng rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        const auto probs = random_simplex(3, rng);
        const double lambda = 0.5 + 4.0 * rng.next_double();
        std::vector<std::uint64_t> sizes{1 + rng.below(10), 1 + rng.below(10), 1 + rng.below(10)};

        // small-p1 sweep with the hidden mass renormalized proportionally
        double prev = -1.0;
        for (double p1 : {0.01, 0.05, 0.1, 0.2}) {
            const double rest = 1.0 - p1;
            const double hidden = probs[1] + probs[2];
            const auto ap = make_partition(
                sizes, {p1, rest * probs[1] / hidden, rest * probs[2] / hidden}, lambda);
            const double v = pv::expected_discovered(ap);
            CHECK(v >= prev);
            prev = v;
        }

        // growing a hidden alias can only help the attacker
        const auto base = make_partition(sizes, probs, lambda);
        auto bigger = sizes;
        bigger[2] += 5;
        const auto grown = make_partition(bigger, probs, lambda);
        CHECK(pv::expected_discovered(grown) >= pv::expected_discovered(base));
    }
}

TEST_CASE("attacker knowledge collapses aliases under the multi-input heuristic") {
    // aliases: 0 = {0,1}, 1 = {2,3,4}, 2 = {5,6}
    const std::vector<std::vector<AddressId>> aliases{{0, 1}, {2, 3, 4}, {5, 6}};
    pv::AttackerKnowledge knowledge(aliases);
    CHECK(knowledge.discovered() == 0);

    SECTION("a tx touching aliases 0 and 1 reveals all of alias 1") {
        knowledge.observe(std::vector<AddressId>{1, 3});
        CHECK(knowledge.discovered() == 3);
    }
    SECTION("links propagate transitively") {
        knowledge.observe(std::vector<AddressId>{0, 2});   // 0-1 linked
        knowledge.observe(std::vector<AddressId>{4, 6});   // 1-2 linked, no seed involvement
        CHECK(knowledge.discovered() == 5);                // closure pulls alias 2 in
    }
    SECTION("links between hidden aliases only do not count until the seed joins") {
        knowledge.observe(std::vector<AddressId>{3, 5});  // aliases 1-2
        CHECK(knowledge.discovered() == 0);
        knowledge.observe(std::vector<AddressId>{0, 6});  // seed joins the merged class
        CHECK(knowledge.discovered() == 5);
    }
}

TEST_CASE("attacker knowledge equals a component oracle on random traces") {
    Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::vector<AddressId>> aliases;
        AddressId next = 0;
        const std::size_t n_alias = 2 + rng.below(3);
        for (std::size_t i = 0; i < n_alias; ++i) {
            std::vector<AddressId> alias;
            const auto sz = 1 + rng.below(5);
            for (std::uint64_t j = 0; j < sz; ++j) alias.push_back(next++);
            aliases.push_back(alias);
        }
        pv::AttackerKnowledge knowledge(aliases);

        // oracle graph: intra-alias cliques plus observed links
        std::vector<std::vector<AddressId>> oracle_edges;
        for (const auto& alias : aliases) oracle_edges.push_back(alias);

        for (int t = 0; t < 30; ++t) {
            std::set<AddressId> tx;
            const auto k = 1 + rng.below(3);
            while (tx.size() < k) tx.insert(rng.below(next));
            std::vector<AddressId> inputs(tx.begin(), tx.end());
            knowledge.observe(inputs);
            oracle_edges.push_back(inputs);
        }

        // BFS from the seed alias over the oracle edge sets
        std::set<AddressId> comp(aliases[0].begin(), aliases[0].end());
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& e : oracle_edges) {
                bool touches = false;
                for (AddressId a : e)
                    if (comp.contains(a)) touches = true;
                if (!touches) continue;
                for (AddressId a : e)
                    if (comp.insert(a).second) changed = true;
            }
        }
        CHECK(knowledge.discovered() == comp.size() - aliases[0].size());
    }
}

TEST_CASE("attack simulation") {
    SECTION("seed probability zero gives a flat zero curve") {
        const auto ap = make_partition({5, 10, 10}, {0.0, 0.5, 0.5}, 2.99);
        const auto curve = pv::simulate_attack_entity(ap, 1.0, 50, 200, Rng(1));
        for (double v : curve.mean_fraction) CHECK(v == 0.0);
    }
    SECTION("curves are monotone and deterministic per seed") {
        const auto ap = make_partition({5, 10, 10}, {0.4, 0.3, 0.3}, 2.99);
        const auto c1 = pv::simulate_attack_entity(ap, 0.5, 80, 300, Rng(7));
        const auto c2 = pv::simulate_attack_entity(ap, 0.5, 80, 300, Rng(7));
        CHECK(c1.mean_fraction == c2.mean_fraction);
        for (std::size_t t = 1; t < c1.mean_fraction.size(); ++t)
            CHECK(c1.mean_fraction[t] >= c1.mean_fraction[t - 1]);
        for (double v : c1.mean_fraction) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SECTION("one-step mean matches the closed form within Monte Carlo error") {
        const auto ap = make_partition({5, 10}, {0.5, 0.5}, 2.99);
        const auto curve = pv::simulate_attack_entity(ap, 1.0, 1, 100'000, Rng(21));
        const double expected = pv::expected_discovered(ap) / 10.0;  // fraction of hidden
        CHECK(std::abs(curve.mean_fraction[0] - expected) < 3.0 * curve.std_error[0]);
    }
    SECTION("category curves: frequent low-privacy categories reveal more") {
        const auto cats = default_category_params();
        const std::vector<std::uint64_t> sizes{25, 25, 25, 25};
        const auto curves = pv::simulate_attack(cats, sizes, 60, 400, 11);
        const auto& ex = curves.at(Category::Exchange).mean_fraction;
        const auto& sv = curves.at(Category::Service).mean_fraction;
        const auto& gm = curves.at(Category::Gambling).mean_fraction;
        const auto& mp = curves.at(Category::MiningPool).mean_fraction;
        for (std::size_t t = 0; t < ex.size(); ++t) {
            CHECK(ex[t] >= gm[t]);
            CHECK(ex[t] >= mp[t]);
            CHECK(sv[t] >= gm[t]);
            CHECK(sv[t] >= mp[t]);
        }
    }
}
