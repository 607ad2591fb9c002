#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "blocksim/classifier.hpp"
#include "blocksim/io.hpp"
#include "blocksim/rng.hpp"

using namespace blocksim;
namespace gb = blocksim::gbdt;

namespace {

// two well-separated gaussian blobs in two features
gb::Dataset separable_toy(std::size_t per_class, std::uint64_t seed) {
    gb::Dataset d;
    d.feature_names = {"x0", "x1"};
    d.class_names = {"a", "b"};
    Rng rng(seed);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const std::uint32_t y = i < per_class ? 0 : 1;
        const double cx = y == 0 ? -2.0 : 2.0;
        d.x.push_back({cx + rng.next_double(), rng.next_double()});
        d.y.push_back(y);
        d.row_ids.push_back(i);
    }
    return d;
}

gb::Dataset four_blob(std::size_t per_class, std::uint64_t seed, double spread = 0.5) {
    gb::Dataset d;
    d.feature_names = {"x0", "x1"};
    d.class_names = {"a", "b", "c", "d"};
    const double cx[] = {-2, 2, -2, 2};
    const double cy[] = {-2, -2, 2, 2};
    Rng rng(seed);
    for (std::uint32_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < per_class; ++i) {
            d.x.push_back({cx[k] + spread * rng.next_double(), cy[k] + spread * rng.next_double()});
            d.y.push_back(k);
            d.row_ids.push_back(k * per_class + i);
        }
    return d;
}

}  // namespace

TEST_CASE("stratified split") {
    const auto d = four_blob(25, 3);
    auto [train, test] = gb::split_train_test(d, 0.70, 9);

    SECTION("70/30 per class within one row") {
        std::map<std::uint32_t, int> tr, te;
        for (auto y : train.y) ++tr[y];
        for (auto y : test.y) ++te[y];
        for (std::uint32_t k = 0; k < 4; ++k) {
            CHECK(std::abs(tr[k] - 17.5) <= 1.0);
            CHECK(tr[k] + te[k] == 25);
        }
    }
    SECTION("same seed reproduces the split; union is disjoint and complete") {
        auto [train2, test2] = gb::split_train_test(d, 0.70, 9);
        CHECK(train.row_ids == train2.row_ids);
        CHECK(test.row_ids == test2.row_ids);
        std::set<std::uint64_t> all(train.row_ids.begin(), train.row_ids.end());
        for (auto id : test.row_ids) CHECK(all.insert(id).second);
        CHECK(all.size() == d.n_rows());
    }
    SECTION("a single-row class is an error") {
        gb::Dataset bad = d;
        bad.x.push_back({0.0, 0.0});
        bad.y.push_back(3);
        bad.class_names.push_back("e");
        bad.x.push_back({0.0, 0.0});
        bad.y.push_back(4);
        bad.row_ids.push_back(100);
        bad.row_ids.push_back(101);
        CHECK_THROWS_AS(gb::split_train_test(bad, 0.7, 1), std::invalid_argument);
    }
}

TEST_CASE("separable data reaches full training accuracy quickly") {
    const auto d = separable_toy(60, 5);
    gb::GbdtConfig cfg;
    cfg.n_rounds = 50;
    cfg.min_leaf = 5;
    const auto model = gb::train_gbdt(d, cfg);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (model.predict(d.x[i]) == d.y[i]) ++correct;
    CHECK(correct == d.n_rows());
}

TEST_CASE("constant features fall back to the majority class") {
    gb::Dataset d;
    d.feature_names = {"c"};
    d.class_names = {"a", "b"};
    for (int i = 0; i < 30; ++i) {
        d.x.push_back({1.0});
        d.y.push_back(i < 20 ? 0 : 1);  // majority is class 0
        d.row_ids.push_back(i);
    }
    const auto model = gb::train_gbdt(d);
    for (std::size_t i = 0; i < d.n_rows(); ++i) CHECK(model.predict(d.x[i]) == 0);
}

TEST_CASE("training loss is non-increasing round by round") {
    const auto d = four_blob(30, 11, 2.5);  // overlapping blobs
    gb::GbdtConfig cfg;
    cfg.n_rounds = 120;
    cfg.min_leaf = 5;
    const auto model = gb::train_gbdt(d, cfg);
    REQUIRE(model.training_loss.size() > 10);
    for (std::size_t r = 1; r < model.training_loss.size(); ++r)
        CHECK(model.training_loss[r] <= model.training_loss[r - 1] + 1e-12);
}

TEST_CASE("softmax probabilities sum to one") {
    const auto d = four_blob(20, 13);
    const auto model = gb::train_gbdt(d);
    for (std::size_t i = 0; i < d.n_rows(); i += 7) {
        const auto p = model.predict_proba(d.x[i]);
        double total = 0;
        for (double v : p) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("evaluation metrics") {
    SECTION("perfect predictions give all metrics 1") {
        const auto d = four_blob(20, 7);
        const auto model = gb::train_gbdt(d);
        const auto rep = gb::evaluate(model, d);  // trained on itself, separable
        CHECK(rep.overall_accuracy == 1.0);
        CHECK(rep.overall_f1 == 1.0);
        CHECK(rep.overall_precision == 1.0);
        for (const auto& m : rep.per_class) {
            REQUIRE(m.precision.has_value());
            CHECK(*m.precision == 1.0);
            CHECK(*m.f1 == 1.0);
        }
    }
    SECTION("single-class predictions on a balanced 4-class test give accuracy 0.25") {
        gb::GbdtModel constant_model;
        constant_model.class_names = {"a", "b", "c", "d"};
        constant_model.feature_names = {"x0", "x1"};
        // no rounds: scores all zero, argmax picks class 0
        const auto d = four_blob(10, 9);
        const auto rep = gb::evaluate(constant_model, d);
        CHECK(rep.overall_accuracy == Catch::Approx(0.25));
    }
    SECTION("metrics recompute exactly from the emitted confusion matrix") {
        const auto d = four_blob(25, 21, 3.0);
        auto [train, test] = gb::split_train_test(d, 0.7, 2);
        const auto model = gb::train_gbdt(train);
        const auto rep = gb::evaluate(model, test);

        const auto k = rep.class_names.size();
        std::uint64_t total = 0, diag = 0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                total += rep.confusion[i][j];
                if (i == j) diag += rep.confusion[i][j];
            }
        CHECK(rep.overall_accuracy ==
              Catch::Approx(static_cast<double>(diag) / total).margin(1e-12));
        long double wf = 0, wsum = 0;
        for (std::size_t c = 0; c < k; ++c) {
            std::uint64_t tp = rep.confusion[c][c], fp = 0, fn = 0;
            for (std::size_t j = 0; j < k; ++j) {
                if (j == c) continue;
                fn += rep.confusion[c][j];
                fp += rep.confusion[j][c];
            }
            const auto support = tp + fn;
            if (support == 0) continue;
            const double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
            const double rec = static_cast<double>(tp) / support;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            wf += static_cast<long double>(support) * f1;
            wsum += support;
            if (rep.per_class[c].f1)
                CHECK(*rep.per_class[c].f1 == Catch::Approx(f1).margin(1e-12));
        }
        CHECK(rep.overall_f1 == Catch::Approx(static_cast<double>(wf / wsum)).margin(1e-12));
    }
    SECTION("empty test class leaves metrics undefined") {
        const auto d = four_blob(10, 3);
        const auto model = gb::train_gbdt(d);
        gb::Dataset test = d;
        // drop class 3 rows
        gb::Dataset filtered;
        filtered.feature_names = test.feature_names;
        filtered.class_names = test.class_names;
        for (std::size_t i = 0; i < test.n_rows(); ++i) {
            if (test.y[i] == 3) continue;
            filtered.x.push_back(test.x[i]);
            filtered.y.push_back(test.y[i]);
        }
        const auto rep = gb::evaluate(model, filtered);
        CHECK_FALSE(rep.per_class[3].accuracy.has_value());
        CHECK_FALSE(rep.per_class[3].f1.has_value());
        CHECK(rep.per_class[3].support == 0);
    }
}

TEST_CASE("feature importance") {
    SECTION("a planted informative column ranks first") {
        gb::Dataset d;
        d.class_names = {"a", "b"};
        for (int f = 0; f < 10; ++f) d.feature_names.push_back("f" + std::to_string(f));
        Rng rng(77);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> row(10);
            for (auto& v : row) v = rng.next_double();
            const std::uint32_t y = i % 2;
            row[4] = y == 0 ? rng.next_double() : 3.0 + rng.next_double();  // informative
            d.x.push_back(std::move(row));
            d.y.push_back(y);
            d.row_ids.push_back(i);
        }
        gb::GbdtConfig cfg;
        cfg.n_rounds = 40;
        cfg.min_leaf = 10;
        const auto model = gb::train_gbdt(d, cfg);
        const auto ranking = gb::feature_importance(model);
        REQUIRE_FALSE(ranking.empty());
        CHECK(ranking.front().name == "f4");
    }
    SECTION("untrained model has an empty ranking") {
        gb::GbdtModel empty;
        empty.class_names = {"a", "b"};
        empty.feature_names = {"x"};
        CHECK(gb::feature_importance(empty).empty());
    }
    SECTION("per-feature gains sum to the total ensemble gain") {
        const auto d = four_blob(25, 31, 2.0);
        const auto model = gb::train_gbdt(d);
        double total_from_trees = 0;
        for (const auto& round : model.rounds)
            for (const auto& tree : round)
                for (const auto& n : tree.nodes)
                    if (n.feature >= 0) total_from_trees += n.gain;
        double total_from_ranking = 0;
        for (const auto& e : gb::feature_importance(model)) total_from_ranking += e.total_gain;
        CHECK(total_from_ranking == Catch::Approx(total_from_trees).epsilon(1e-12));
    }
}

TEST_CASE("training is deterministic per seed") {
    const auto d = four_blob(25, 17, 2.0);
    gb::GbdtConfig cfg;
    cfg.n_rounds = 30;
    const auto m1 = gb::train_gbdt(d, cfg);
    const auto m2 = gb::train_gbdt(d, cfg);
    CHECK(io::model_to_json(m1).dump() == io::model_to_json(m2).dump());
}

TEST_CASE("model JSON round trip preserves predictions") {
    const auto d = four_blob(20, 23, 1.5);
    const auto model = gb::train_gbdt(d);
    const auto restored = io::model_from_json(io::model_to_json(model));
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        CHECK(restored.predict(d.x[i]) == model.predict(d.x[i]));
}

TEST_CASE("histogram split path handles larger datasets") {
    gb::Dataset d = four_blob(3000, 41, 2.0);  // 12000 rows forces the histogram path
    gb::GbdtConfig cfg;
    cfg.n_rounds = 10;
    cfg.exact_split_max_rows = 10000;
    const auto model = gb::train_gbdt(d, cfg);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (model.predict(d.x[i]) == d.y[i]) ++correct;
    CHECK(static_cast<double>(correct) / d.n_rows() > 0.95);
    for (std::size_t r = 1; r < model.training_loss.size(); ++r)
        CHECK(model.training_loss[r] <= model.training_loss[r - 1] + 1e-12);
}
