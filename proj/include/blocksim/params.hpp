#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "blocksim/ledger.hpp"

namespace blocksim {

struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generative hyper-parameters of the block-transaction address model.
// Monetary parameters are in satoshi.
struct ModelParams {
    double lambda_size = 65.6;  // transactions per block
    double lambda_in = 2.99;    // input addresses per tx (positive Poisson)
    double lambda_out = 1.21;   // output addresses per tx (positive Poisson)
    double p_new = 0.26;        // fresh-address probability per output
    double p_utxo_in = 0.92;    // geometric, bounded by the address's k_utxo
    double p_utxo_out = 1.00;   // geometric, unbounded
    double mu_fee_sat = 20000.0;
    double sigma_fee_sat = 15000.0;

    void validate() const {
        if (lambda_size <= 0 || lambda_in <= 0 || lambda_out <= 0)
            throw ParamError("lambda parameters must be positive");
        auto chk_p = [](double p, const char* name) {
            if (!(p > 0.0 && p <= 1.0)) throw ParamError(std::string(name) + " must be in (0,1]");
        };
        chk_p(p_new, "p_new");
        chk_p(p_utxo_in, "p_utxo_in");
        chk_p(p_utxo_out, "p_utxo_out");
        if (sigma_fee_sat <= 0) throw ParamError("sigma_fee_sat must be positive");
    }
};

// Per-category overrides of the transaction-shape parameters.
struct CategoryShape {
    double lambda_in = 2.99;
    double lambda_out = 1.21;
    double p_new = 0.26;
    double p_utxo_in = 0.92;
    double p_utxo_out = 1.00;
};

struct CategoryParams {
    std::map<Category, CategoryShape> shapes;
    std::map<Category, double> activity;  // P(input entity category), sums to 1

    void validate() const {
        if (shapes.empty()) throw ParamError("no categories defined");
        double total = 0.0;
        for (const auto& [c, w] : activity) {
            if (w < 0) throw ParamError("negative activity weight");
            if (!shapes.contains(c)) throw ParamError("activity weight for unknown category");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ParamError("activity weights must sum to 1");
        for (const auto& [c, s] : shapes) {
            ModelParams m;
            m.lambda_in = s.lambda_in;
            m.lambda_out = s.lambda_out;
            m.p_new = s.p_new;
            m.p_utxo_in = s.p_utxo_in;
            m.p_utxo_out = s.p_utxo_out;
            m.validate();
        }
    }
};

// Boundary and coinbase shape for subset simulation: transactions crossing
// the modeled subset's edge.
struct SubsetParams {
    double lambda_sub = 0.3;       // external output addresses per ordinary tx
    double lambda_size_sub = 65.6; // incoming boundary txs per block
    double lambda_out_sub = 3.0;   // output addresses per inputless tx (positive Poisson)
    double p_new_sub = 0.9;
    double p_utxo_out_sub = 1.0;

    void validate() const {
        if (lambda_sub < 0) throw ParamError("lambda_sub must be non-negative");
        if (lambda_size_sub < 0) throw ParamError("lambda_size_sub must be non-negative");
        if (lambda_out_sub <= 0) throw ParamError("lambda_out_sub must be positive");
        if (!(p_new_sub > 0 && p_new_sub <= 1)) throw ParamError("p_new_sub must be in (0,1]");
        if (!(p_utxo_out_sub > 0 && p_utxo_out_sub <= 1))
            throw ParamError("p_utxo_out_sub must be in (0,1]");
    }
};

// Calibrated defaults (BTC mainnet, stationary 2016-2018 period).
inline ModelParams default_params() { return ModelParams{}; }

inline CategoryParams default_category_params() {
    CategoryParams p;
    p.shapes[Category::Exchange] = {3.79, 0.68, 0.23, 0.95, 1.00};
    p.shapes[Category::Service] = {2.58, 1.96, 0.20, 0.92, 1.00};
    p.shapes[Category::Gambling] = {1.98, 0.21, 0.47, 0.84, 1.00};
    p.shapes[Category::MiningPool] = {21.2, 7.04, 0.55, 0.67, 1.00};
    p.activity[Category::Exchange] = 0.33;
    p.activity[Category::Service] = 0.55;
    p.activity[Category::Gambling] = 0.09;
    p.activity[Category::MiningPool] = 0.03;
    return p;
}

inline SubsetParams default_subset_params(double lambda_size = 65.6) {
    SubsetParams p;
    p.lambda_size_sub = lambda_size;  // one boundary funding tx per ordinary tx on average
    return p;
}

inline constexpr Satoshi kDefaultBlockRewardSat = Satoshi{1'250'000'000};  // 12.5 BTC
inline constexpr std::int64_t kBlockSpacingSeconds = 600;
inline constexpr std::int64_t kGenesisTimestamp = 1451606400;  // 2016-01-01T00:00:00Z

}  // namespace blocksim
