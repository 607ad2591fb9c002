#pragma once

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blocksim/block_model.hpp"
#include "blocksim/io.hpp"

// Command-line surface. Every subcommand is deterministic given its flags and
// seed; the default seed comes from BLOCKSIM_SEED when set.
namespace blocksim::cli {

inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("BLOCKSIM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::runtime_error("BLOCKSIM_SEED must be an integer");
        }
    }
    return 0;
}

inline int run_command(const std::vector<std::string>& args) {
    CLI::App app{"probabilistic block-chain model toolkit: simulate, fit, attack, "
                 "features, classify, report"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "sample a synthetic block stream");
    std::string sim_params, sim_cat, sim_subset, sim_out, sim_labels_out;
    std::uint64_t sim_blocks = 100, sim_seed = default_seed();
    std::uint32_t sim_entities = 40;
    std::int64_t sim_reward = kDefaultBlockRewardSat;
    sim->add_option("--params", sim_params, "model params JSON (defaults when omitted)");
    sim->add_option("--cat-params", sim_cat, "category params JSON; enables the entity model");
    sim->add_option("--subset-params", sim_subset, "boundary/coinbase params JSON");
    sim->add_option("--blocks", sim_blocks, "number of blocks")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output blocks file (JSON lines)")->required();
    sim->add_option("--labels-out", sim_labels_out, "ground-truth labels CSV (entity model)");
    sim->add_option("--entities", sim_entities, "entities per category (entity model)");
    sim->add_option("--reward-sat", sim_reward, "minted value per inputless tx");

    // --- fit ---------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "maximum-likelihood parameter fit");
    std::string fit_in, fit_labels, fit_out, fit_params_out, fit_cat_out;
    fit->add_option("--in", fit_in, "blocks file")->required();
    fit->add_option("--labels", fit_labels, "labels CSV; enables per-category fits");
    fit->add_option("--out", fit_out, "fit report JSON")->required();
    fit->add_option("--params-out", fit_params_out, "fitted params as a simulate-ready file");
    fit->add_option("--cat-params-out", fit_cat_out,
                    "fitted category params as a simulate-ready file");

    // --- attack -------------------------------------------------------------
    auto* attack = app.add_subcommand("attack", "simulate multi-input de-anonymization");
    std::string atk_cat, atk_aliases, atk_out;
    std::uint64_t atk_txs = 200, atk_trials = 1000, atk_seed = default_seed();
    attack->add_option("--cat-params", atk_cat, "category params JSON (defaults when omitted)");
    attack->add_option("--aliases", atk_aliases, "alias geometry JSON {\"sizes\": [..]}");
    attack->add_option("--txs", atk_txs, "observed transactions per trial")
        ->check(CLI::PositiveNumber);
    attack->add_option("--trials", atk_trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    attack->add_option("--seed", atk_seed, "RNG seed");
    attack->add_option("--out", atk_out, "curve CSV")->required();

    // --- features -------------------------------------------------------------
    auto* feats = app.add_subcommand("features", "extract the entity feature matrix");
    std::string ft_in, ft_labels, ft_out, ft_schema;
    feats->add_option("--in", ft_in, "blocks file")->required();
    feats->add_option("--labels", ft_labels, "labels CSV (multi-input clusters when omitted)");
    feats->add_option("--out", ft_out, "features CSV")->required();
    feats->add_option("--schema-out", ft_schema, "schema JSON (default: <out>.schema.json)");

    // --- classify -------------------------------------------------------------
    auto* cls = app.add_subcommand("classify", "train and evaluate the category classifier");
    std::string cls_features, cls_out, cls_model, cls_confusion, cls_importance;
    std::uint64_t cls_seed = default_seed();
    double cls_fraction = 0.70;
    cls->add_option("--features", cls_features, "features CSV")->required();
    cls->add_option("--seed", cls_seed, "split/train seed");
    cls->add_option("--train-fraction", cls_fraction, "train split fraction");
    cls->add_option("--out", cls_out, "classification report JSON")->required();
    cls->add_option("--model-out", cls_model, "trained model JSON");
    cls->add_option("--confusion-out", cls_confusion, "confusion matrix CSV");
    cls->add_option("--importance-out", cls_importance, "feature importance JSON");

    // --- report ---------------------------------------------------------------
    auto* report = app.add_subcommand("report", "derived data reports");
    report->require_subcommand(1);
    auto* cdf = report->add_subcommand("utxo-cdf", "1-CDF of output UTXO values (log-log ready)");
    std::string cdf_in, cdf_out;
    cdf->add_option("--in", cdf_in, "blocks file")->required();
    cdf->add_option("--out", cdf_out, "ccdf CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) {
            model::SimConfig cfg;
            if (!sim_params.empty())
                cfg.params = io::params_from_json(io::json::parse(io::read_file(sim_params)));
            if (!sim_cat.empty())
                cfg.categories =
                    io::category_params_from_json(io::json::parse(io::read_file(sim_cat)));
            cfg.subset = sim_subset.empty()
                             ? default_subset_params(cfg.params.lambda_size)
                             : io::subset_params_from_json(io::json::parse(io::read_file(sim_subset)));
            cfg.n_blocks = sim_blocks;
            cfg.seed = sim_seed;
            cfg.entities_per_category = sim_entities;
            cfg.block_reward_sat = sim_reward;
            auto result = model::simulate_chain(cfg);
            io::write_blocks(sim_out, result.blocks);
            if (!sim_labels_out.empty()) io::write_labels(sim_labels_out, result.labels);
        } else if (fit->parsed()) {
            auto blocks = io::parse_blocks(fit_in);
            infer::FitReport rep;
            if (!fit_labels.empty()) {
                auto labels = io::parse_labels(fit_labels);
                rep = infer::fit_btea(blocks, labels);
            } else {
                rep = infer::fit_bta(blocks);
            }
            io::write_file(fit_out, io::fit_report_to_json(rep).dump(2) + "\n");
            if (!fit_params_out.empty())
                io::write_file(fit_params_out,
                               io::params_to_json(io::params_from_fit(rep)).dump(2) + "\n");
            if (!fit_cat_out.empty())
                io::write_file(fit_cat_out,
                               io::category_params_to_json(io::category_params_from_fit(rep))
                                       .dump(2) +
                                   "\n");
        } else if (attack->parsed()) {
            CategoryParams cats = atk_cat.empty()
                                      ? default_category_params()
                                      : io::category_params_from_json(
                                            io::json::parse(io::read_file(atk_cat)));
            std::vector<std::uint64_t> sizes{25, 25, 25, 25};
            if (!atk_aliases.empty()) {
                auto j = io::json::parse(io::read_file(atk_aliases));
                sizes = j.at("sizes").get<std::vector<std::uint64_t>>();
            }
            auto curves = privacy::simulate_attack(cats, sizes, atk_txs, atk_trials, atk_seed);
            io::write_file(atk_out, io::attack_curves_to_csv(curves));
        } else if (feats->parsed()) {
            auto blocks = io::parse_blocks(ft_in);
            std::optional<infer::LabelTable> labels;
            if (!ft_labels.empty()) labels = io::parse_labels(ft_labels);
            auto matrix = feat::build_feature_matrix(blocks, labels ? &*labels : nullptr);
            io::write_file(ft_out, io::feature_matrix_to_csv(matrix));
            const std::string schema_path = ft_schema.empty() ? ft_out + ".schema.json" : ft_schema;
            io::write_file(schema_path, io::feature_schema_to_json(matrix).dump(2) + "\n");
        } else if (cls->parsed()) {
            auto data = io::dataset_from_csv(io::read_file(cls_features));
            auto [train, test] = gbdt::split_train_test(data, cls_fraction, cls_seed);
            gbdt::GbdtConfig cfg;
            cfg.seed = cls_seed;
            auto model = gbdt::train_gbdt(train, cfg);
            auto rep = gbdt::evaluate(model, test);
            rep.split_descriptor = io::format_double(cls_fraction) + "/" +
                                   io::format_double(1.0 - cls_fraction) + " stratified, seed " +
                                   std::to_string(cls_seed);
            io::write_file(cls_out, io::classification_report_to_json(rep).dump(2) + "\n");
            if (!cls_model.empty())
                io::write_file(cls_model, io::model_to_json(model).dump() + "\n");
            const std::string confusion_path =
                cls_confusion.empty() ? cls_out + ".confusion.csv" : cls_confusion;
            io::write_file(confusion_path, io::confusion_to_csv(rep));
            if (!cls_importance.empty())
                io::write_file(cls_importance,
                               io::importance_to_json(gbdt::feature_importance(model)).dump(2) +
                                   "\n");
        } else if (report->parsed() && cdf->parsed()) {
            auto blocks = io::parse_blocks(cdf_in);
            io::write_file(cdf_out, io::utxo_ccdf_to_csv(blocks));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

inline int run_command(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

}  // namespace blocksim::cli
