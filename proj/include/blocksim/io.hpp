#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blocksim/classifier.hpp"
#include "blocksim/features.hpp"
#include "blocksim/inference.hpp"
#include "blocksim/ledger.hpp"
#include "blocksim/params.hpp"
#include "blocksim/privacy.hpp"

// File formats: the JSON-lines block stream, the labels CSV, parameter files,
// and the JSON/CSV report artifacts. Persisted monetary values are integer
// satoshi; reports may carry reals.
namespace blocksim::io {

using nlohmann::json;

struct ParseError : std::runtime_error {
    std::size_t line;
    ParseError(std::size_t line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// fixed 12-significant-digit rendering so emitted CSV/JSON artifacts are
// byte-stable across runs
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// ---------------------------------------------------------------------------
// blocks (JSON lines, canonical key order, integers only)

inline json tx_to_json(const TransactionRecord& tx) {
    json j;
    j["id"] = tx.id;
    j["coinbase"] = tx.coinbase;
    j["fee_sat"] = tx.fee;
    json inputs = json::array();
    for (const auto& in : tx.inputs) {
        json ji;
        ji["addr"] = in.addr;
        json utxos = json::array();
        for (const auto& u : in.consumed)
            utxos.push_back(json{{"id", json::array({u.id.tx, u.id.vout})}, {"value_sat", u.value}});
        ji["utxos"] = std::move(utxos);
        inputs.push_back(std::move(ji));
    }
    j["inputs"] = std::move(inputs);
    json outputs = json::array();
    for (const auto& out : tx.outputs) {
        json jo;
        jo["addr"] = out.addr;
        jo["new"] = out.is_new;
        jo["values_sat"] = out.values;
        outputs.push_back(std::move(jo));
    }
    j["outputs"] = std::move(outputs);
    return j;
}

inline std::string block_to_line(const Block& b) {
    json j;
    j["height"] = b.height;
    j["timestamp"] = b.timestamp;
    json txs = json::array();
    for (const auto& tx : b.txs) txs.push_back(tx_to_json(tx));
    j["txs"] = std::move(txs);
    return j.dump();
}

inline std::string blocks_to_string(std::span<const Block> blocks) {
    std::string out;
    for (const auto& b : blocks) {
        out += block_to_line(b);
        out += '\n';
    }
    return out;
}

inline void write_blocks(const std::string& path, std::span<const Block> blocks) {
    write_file(path, blocks_to_string(blocks));
}

// Streaming parse with per-line validation: schema, strictly increasing
// heights, non-decreasing timestamps, double-spend and conservation checks
// through a replay ledger, and new-flag consistency.
inline std::vector<Block> parse_blocks_string(const std::string& content) {
    std::vector<Block> blocks;
    Ledger replay;
    std::optional<std::uint64_t> prev_height;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        auto require = [&](const json& obj, const char* key) -> const json& {
            if (!obj.contains(key))
                throw ParseError(line_no, std::string("missing key '") + key + "'");
            return obj.at(key);
        };

        Block b;
        try {
            b.height = require(j, "height").get<std::uint64_t>();
            b.timestamp = require(j, "timestamp").get<std::int64_t>();
            for (const auto& jt : require(j, "txs")) {
                TransactionRecord tx;
                tx.id = require(jt, "id").get<TxId>();
                tx.coinbase = require(jt, "coinbase").get<bool>();
                tx.fee = require(jt, "fee_sat").get<Satoshi>();
                tx.block_height = b.height;
                for (const auto& ji : require(jt, "inputs")) {
                    TxInput in;
                    in.addr = require(ji, "addr").get<AddressId>();
                    for (const auto& ju : require(ji, "utxos")) {
                        const auto& id = require(ju, "id");
                        if (!id.is_array() || id.size() != 2)
                            throw ParseError(line_no, "utxo 'id' must be [tx, vout]");
                        in.consumed.push_back(Utxo{
                            UtxoId{id[0].get<TxId>(), id[1].get<std::uint32_t>()},
                            require(ju, "value_sat").get<Satoshi>()});
                    }
                    tx.inputs.push_back(std::move(in));
                }
                for (const auto& jo : require(jt, "outputs")) {
                    TxOutput out;
                    out.addr = require(jo, "addr").get<AddressId>();
                    out.is_new = require(jo, "new").get<bool>();
                    out.values = require(jo, "values_sat").get<std::vector<Satoshi>>();
                    if (out.values.empty()) throw ParseError(line_no, "output without values");
                    tx.outputs.push_back(std::move(out));
                }
                b.txs.push_back(std::move(tx));
            }
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("bad field: ") + e.what());
        }

        if (prev_height && b.height <= *prev_height)
            throw ParseError(line_no, "heights must be strictly increasing");
        if (b.timestamp < prev_ts)
            throw ParseError(line_no, "timestamps must be non-decreasing");
        prev_height = b.height;
        prev_ts = b.timestamp;

        for (const auto& tx : b.txs) {
            for (const auto& out : tx.outputs) {
                const bool seen =
                    out.addr < replay.n_addresses() && replay.address(out.addr).seen();
                if (out.is_new && seen)
                    throw ParseError(line_no, "address " + std::to_string(out.addr) +
                                                  " marked new but already seen");
                if (!out.is_new && !seen)
                    throw ParseError(line_no, "address " + std::to_string(out.addr) +
                                                  " not seen but not marked new");
                replay.ensure_address(out.addr);
            }
            try {
                replay.apply_transaction(tx);
            } catch (const LedgerError& e) {
                throw ParseError(line_no, e.what());
            }
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

inline std::vector<Block> parse_blocks(const std::string& path) {
    return parse_blocks_string(read_file(path));
}

// ---------------------------------------------------------------------------
// labels (CSV: address_id,entity_id,category)

inline std::string labels_to_csv(std::span<const model::LabelRow> rows) {
    std::string out = "address_id,entity_id,category\n";
    for (const auto& r : rows) {
        out += std::to_string(r.addr);
        out += ',';
        out += std::to_string(r.entity);
        out += ',';
        out += category_name(r.category);
        out += '\n';
    }
    return out;
}

inline void write_labels(const std::string& path, std::span<const model::LabelRow> rows) {
    write_file(path, labels_to_csv(rows));
}

inline infer::LabelTable parse_labels_string(const std::string& content) {
    infer::LabelTable table;
    std::map<EntityId, Category> entity_category;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string line = content.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "address_id,entity_id,category")
                throw ParseError(1, "expected header 'address_id,entity_id,category'");
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError(line_no, "expected 3 comma-separated fields");
        AddressId addr;
        EntityId entity;
        try {
            addr = std::stoull(line.substr(0, c1));
            entity = static_cast<EntityId>(std::stoul(line.substr(c1 + 1, c2 - c1 - 1)));
        } catch (const std::exception&) {
            throw ParseError(line_no, "address_id and entity_id must be integers");
        }
        const std::string cat_name = line.substr(c2 + 1);
        auto cat = category_from_name(cat_name);
        if (!cat || *cat == Category::Unknown)
            throw ParseError(line_no, "unknown category '" + cat_name + "'");

        if (auto it = entity_category.find(entity); it != entity_category.end()) {
            if (it->second != *cat)
                throw ParseError(line_no, "conflicting categories for entity " +
                                              std::to_string(entity));
        } else {
            entity_category[entity] = *cat;
        }
        if (auto it = table.by_address.find(addr); it != table.by_address.end()) {
            if (it->second.entity != entity)
                throw ParseError(line_no,
                                 "conflicting entities for address " + std::to_string(addr));
        }
        table.by_address[addr] = {entity, *cat};
    }
    return table;
}

inline infer::LabelTable parse_labels(const std::string& path) {
    return parse_labels_string(read_file(path));
}

// ---------------------------------------------------------------------------
// parameter files (keys carry unit suffixes for monetary values)

inline json params_to_json(const ModelParams& p) {
    return json{{"lambda_size", p.lambda_size},   {"lambda_in", p.lambda_in},
                {"lambda_out", p.lambda_out},     {"p_new", p.p_new},
                {"p_utxo_in", p.p_utxo_in},       {"p_utxo_out", p.p_utxo_out},
                {"mu_fee_sat", p.mu_fee_sat},     {"sigma_fee_sat", p.sigma_fee_sat}};
}

inline ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.lambda_size = j.value("lambda_size", p.lambda_size);
    p.lambda_in = j.value("lambda_in", p.lambda_in);
    p.lambda_out = j.value("lambda_out", p.lambda_out);
    p.p_new = j.value("p_new", p.p_new);
    p.p_utxo_in = j.value("p_utxo_in", p.p_utxo_in);
    p.p_utxo_out = j.value("p_utxo_out", p.p_utxo_out);
    p.mu_fee_sat = j.value("mu_fee_sat", p.mu_fee_sat);
    p.sigma_fee_sat = j.value("sigma_fee_sat", p.sigma_fee_sat);
    p.validate();
    return p;
}

inline json category_params_to_json(const CategoryParams& p) {
    json shapes = json::object(), activity = json::object();
    for (const auto& [c, s] : p.shapes)
        shapes[category_name(c)] = json{{"lambda_in", s.lambda_in},
                                        {"lambda_out", s.lambda_out},
                                        {"p_new", s.p_new},
                                        {"p_utxo_in", s.p_utxo_in},
                                        {"p_utxo_out", s.p_utxo_out}};
    for (const auto& [c, w] : p.activity) activity[category_name(c)] = w;
    return json{{"categories", shapes}, {"activity", activity}};
}

inline CategoryParams category_params_from_json(const json& j) {
    CategoryParams p;
    for (const auto& [name, js] : j.at("categories").items()) {
        auto c = category_from_name(name);
        if (!c) throw std::runtime_error("unknown category '" + name + "'");
        CategoryShape s;
        s.lambda_in = js.value("lambda_in", s.lambda_in);
        s.lambda_out = js.value("lambda_out", s.lambda_out);
        s.p_new = js.value("p_new", s.p_new);
        s.p_utxo_in = js.value("p_utxo_in", s.p_utxo_in);
        s.p_utxo_out = js.value("p_utxo_out", s.p_utxo_out);
        p.shapes[*c] = s;
    }
    for (const auto& [name, w] : j.at("activity").items()) {
        auto c = category_from_name(name);
        if (!c) throw std::runtime_error("unknown category '" + name + "'");
        p.activity[*c] = w.get<double>();
    }
    p.validate();
    return p;
}

inline json subset_params_to_json(const SubsetParams& p) {
    return json{{"lambda_sub", p.lambda_sub},
                {"lambda_size_sub", p.lambda_size_sub},
                {"lambda_out_sub", p.lambda_out_sub},
                {"p_new_sub", p.p_new_sub},
                {"p_utxo_out_sub", p.p_utxo_out_sub}};
}

inline SubsetParams subset_params_from_json(const json& j) {
    SubsetParams p;
    p.lambda_sub = j.value("lambda_sub", p.lambda_sub);
    p.lambda_size_sub = j.value("lambda_size_sub", p.lambda_size_sub);
    p.lambda_out_sub = j.value("lambda_out_sub", p.lambda_out_sub);
    p.p_new_sub = j.value("p_new_sub", p.p_new_sub);
    p.p_utxo_out_sub = j.value("p_utxo_out_sub", p.p_utxo_out_sub);
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// fit / error reports

// Fitted values as simulation-ready parameter sets; estimates with no backing
// samples fall back to the defaults.
inline ModelParams params_from_fit(const infer::FitReport& r) {
    ModelParams p;
    auto take = [](const infer::ParamEstimate& e, double fallback) {
        return e.n > 0 ? e.value : fallback;
    };
    p.lambda_size = take(r.lambda_size, p.lambda_size);
    p.lambda_in = take(r.global.lambda_in, p.lambda_in);
    p.lambda_out = take(r.global.lambda_out, p.lambda_out);
    p.p_new = take(r.global.p_new, p.p_new);
    p.p_utxo_in = take(r.global.p_utxo_in, p.p_utxo_in);
    p.p_utxo_out = take(r.global.p_utxo_out, p.p_utxo_out);
    p.mu_fee_sat = take(r.global.mu_fee, p.mu_fee_sat);
    p.sigma_fee_sat = take(r.global.sigma_fee, p.sigma_fee_sat);
    return p;
}

inline CategoryParams category_params_from_fit(const infer::FitReport& r) {
    CategoryParams p;
    double activity_total = 0.0;
    for (const auto& [c, f] : r.categories) {
        CategoryShape s;
        auto take = [](const infer::ParamEstimate& e, double fallback) {
            return e.n > 0 ? e.value : fallback;
        };
        s.lambda_in = take(f.lambda_in, s.lambda_in);
        s.lambda_out = take(f.lambda_out, s.lambda_out);
        s.p_new = take(f.p_new, s.p_new);
        s.p_utxo_in = take(f.p_utxo_in, s.p_utxo_in);
        s.p_utxo_out = take(f.p_utxo_out, s.p_utxo_out);
        p.shapes[c] = s;
        const double a = r.activity.contains(c) ? r.activity.at(c).value : 0.0;
        p.activity[c] = a;
        activity_total += a;
    }
    if (activity_total > 0)
        for (auto& [c, a] : p.activity) a /= activity_total;
    return p;
}

inline json estimate_to_json(const infer::ParamEstimate& e) {
    return json{{"value", e.value}, {"n", e.n}};
}

inline json shape_fit_to_json(const infer::ShapeFit& f) {
    return json{{"lambda_in", estimate_to_json(f.lambda_in)},
                {"lambda_out", estimate_to_json(f.lambda_out)},
                {"p_new", estimate_to_json(f.p_new)},
                {"p_utxo_in", estimate_to_json(f.p_utxo_in)},
                {"p_utxo_out", estimate_to_json(f.p_utxo_out)},
                {"mu_fee_sat", estimate_to_json(f.mu_fee)},
                {"sigma_fee_sat", estimate_to_json(f.sigma_fee)},
                {"txs", f.txs}};
}

inline json fit_report_to_json(const infer::FitReport& r) {
    json j;
    j["lambda_size"] = estimate_to_json(r.lambda_size);
    j["global"] = shape_fit_to_json(r.global);
    json cats = json::object();
    for (const auto& [c, f] : r.categories) cats[category_name(c)] = shape_fit_to_json(f);
    j["categories"] = std::move(cats);
    json act = json::object();
    for (const auto& [c, e] : r.activity) act[category_name(c)] = estimate_to_json(e);
    j["activity"] = std::move(act);
    if (r.pearson_in_out)
        j["pearson_in_out"] = *r.pearson_in_out;
    else
        j["pearson_in_out"] = nullptr;
    j["contradictions"] = r.contradictions;
    j["unlabeled_txs"] = r.unlabeled_txs;
    j["subset"] = json{{"lambda_size_sub", estimate_to_json(r.subset.lambda_size_sub)},
                       {"lambda_out_sub", estimate_to_json(r.subset.lambda_out_sub)},
                       {"p_new_sub", estimate_to_json(r.subset.p_new_sub)},
                       {"p_utxo_out_sub", estimate_to_json(r.subset.p_utxo_out_sub)},
                       {"lambda_sub", estimate_to_json(r.subset.lambda_sub)}};
    return j;
}

inline json error_report_to_json(const infer::ErrorReport& r) {
    json scopes = json::object();
    for (const auto& [name, s] : r.scopes)
        scopes[name] = json{{"mse_signed", s.mse_signed}, {"rmse", s.rmse},
                            {"mae", s.mae},               {"rmae", s.rmae},
                            {"nrmse", s.nrmse},           {"predictor_btc", s.predictor_btc},
                            {"test_mean_btc", s.test_mean_btc},
                            {"test_sigma_btc", s.test_sigma_btc},
                            {"n", s.n}};
    return json{{"scopes", scopes}};
}

// ---------------------------------------------------------------------------
// attack curves / UTXO ccdf

inline std::string attack_curves_to_csv(const std::map<Category, privacy::AttackCurve>& curves) {
    std::string out = "category,tx_count,mean_fraction,std_error\n";
    for (const auto& [c, curve] : curves) {
        for (std::size_t t = 0; t < curve.mean_fraction.size(); ++t) {
            out += category_name(c);
            out += ',';
            out += std::to_string(t + 1);
            out += ',';
            out += format_double(curve.mean_fraction[t]);
            out += ',';
            out += format_double(curve.std_error[t]);
            out += '\n';
        }
    }
    return out;
}

// 1 - CDF of output UTXO values of ordinary transactions (BTC, log-log
// ready): for each distinct value v, the fraction of values >= v.
inline std::string utxo_ccdf_to_csv(std::span<const Block> blocks) {
    std::vector<double> values;
    for (const auto& b : blocks)
        for (const auto& tx : b.txs) {
            if (tx.inputless()) continue;
            for (const auto& out : tx.outputs)
                for (Satoshi v : out.values)
                    values.push_back(static_cast<double>(v) / static_cast<double>(kSatPerBtc));
        }
    std::sort(values.begin(), values.end());
    std::string out = "value_btc,ccdf\n";
    const auto n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        out += format_double(values[i]);
        out += ',';
        out += format_double(static_cast<double>(values.size() - i) / n);
        out += '\n';
        i = j;
    }
    return out;
}

// ---------------------------------------------------------------------------
// feature matrix

inline std::string feature_matrix_to_csv(const feat::FeatureMatrix& m) {
    std::string out = "entity_id,label";
    for (const auto& c : m.columns) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out += std::to_string(m.entity_ids[r]);
        out += ',';
        out += m.labels[r];
        for (double v : m.rows[r]) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline json feature_schema_to_json(const feat::FeatureMatrix& m) {
    json cols = json::array();
    cols.push_back(json{{"name", "entity_id"}, {"class", "key"}});
    cols.push_back(json{{"name", "label"}, {"class", "key"}});
    std::size_t idx = 0;
    // class boundaries follow the join order recorded in class_column_counts
    std::vector<std::pair<std::string, std::size_t>> ordered;
    for (const auto& blk :
         {std::string("address"), std::string("entity"), std::string("temporal"),
          std::string("centrality"), std::string("motif1"), std::string("motif2"),
          std::string("motif3")}) {
        auto it = m.class_column_counts.find(blk);
        if (it != m.class_column_counts.end()) ordered.emplace_back(blk, it->second);
    }
    for (const auto& [cls, count] : ordered) {
        for (std::size_t i = 0; i < count && idx < m.columns.size(); ++i, ++idx)
            cols.push_back(json{{"name", m.columns[idx]}, {"class", cls}});
    }
    return json{{"columns", cols}};
}

inline gbdt::Dataset dataset_from_csv(const std::string& content) {
    gbdt::Dataset d;
    std::map<std::string, std::uint32_t> class_index;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<std::string> header;
    while (pos < content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string line = content.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t p = 0;
        while (true) {
            auto c = line.find(',', p);
            fields.push_back(line.substr(p, c == std::string::npos ? c : c - p));
            if (c == std::string::npos) break;
            p = c + 1;
        }
        if (line_no == 1) {
            if (fields.size() < 3 || fields[0] != "entity_id" || fields[1] != "label")
                throw ParseError(1, "expected header entity_id,label,<features>");
            header = fields;
            d.feature_names.assign(fields.begin() + 2, fields.end());
            continue;
        }
        if (fields.size() != header.size())
            throw ParseError(line_no, "row width does not match header");
        try {
            d.row_ids.push_back(std::stoull(fields[0]));
        } catch (const std::exception&) {
            throw ParseError(line_no, "entity_id must be an integer");
        }
        auto [it, fresh] =
            class_index.try_emplace(fields[1], static_cast<std::uint32_t>(class_index.size()));
        d.y.push_back(it->second);
        std::vector<double> row;
        row.reserve(fields.size() - 2);
        for (std::size_t i = 2; i < fields.size(); ++i) {
            try {
                row.push_back(std::stod(fields[i]));
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad numeric value in column " + header[i]);
            }
        }
        d.x.push_back(std::move(row));
    }
    d.class_names.resize(class_index.size());
    for (const auto& [name, idx] : class_index) d.class_names[idx] = name;
    return d;
}

// ---------------------------------------------------------------------------
// classification report / model

inline json classification_report_to_json(const gbdt::ClassificationReport& r) {
    json per = json::object();
    for (std::size_t c = 0; c < r.class_names.size(); ++c) {
        const auto& m = r.per_class[c];
        json jm;
        jm["support"] = m.support;
        jm["accuracy"] = m.accuracy ? json(*m.accuracy) : json(nullptr);
        jm["precision"] = m.precision ? json(*m.precision) : json(nullptr);
        jm["recall"] = m.recall ? json(*m.recall) : json(nullptr);
        jm["f1"] = m.f1 ? json(*m.f1) : json(nullptr);
        per[r.class_names[c]] = std::move(jm);
    }
    return json{{"classes", r.class_names},
                {"per_class", per},
                {"overall", json{{"accuracy", r.overall_accuracy},
                                 {"precision", r.overall_precision},
                                 {"f1", r.overall_f1}}},
                {"confusion", r.confusion},
                {"n_test", r.n_test},
                {"split", r.split_descriptor}};
}

inline std::string confusion_to_csv(const gbdt::ClassificationReport& r) {
    std::string out = "true\\pred";
    for (const auto& c : r.class_names) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::size_t i = 0; i < r.class_names.size(); ++i) {
        out += r.class_names[i];
        for (std::size_t j = 0; j < r.class_names.size(); ++j) {
            out += ',';
            out += std::to_string(r.confusion[i][j]);
        }
        out += '\n';
    }
    return out;
}

inline json model_to_json(const gbdt::GbdtModel& m) {
    json rounds = json::array();
    for (const auto& round : m.rounds) {
        json jr = json::array();
        for (const auto& tree : round) {
            json nodes = json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back(json::array(
                    {n.feature, n.threshold, n.left, n.right, n.value, n.gain}));
            jr.push_back(std::move(nodes));
        }
        rounds.push_back(std::move(jr));
    }
    return json{{"format", "blocksim-gbdt-v1"},
                {"classes", m.class_names},
                {"features", m.feature_names},
                {"learning_rate", m.config.learning_rate},
                {"n_rounds", m.config.n_rounds},
                {"max_depth", m.config.max_depth},
                {"min_leaf", m.config.min_leaf},
                {"rounds", rounds},
                {"training_loss", m.training_loss}};
}

inline gbdt::GbdtModel model_from_json(const json& j) {
    gbdt::GbdtModel m;
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.n_rounds = j.at("n_rounds").get<int>();
    m.config.max_depth = j.at("max_depth").get<int>();
    m.config.min_leaf = j.at("min_leaf").get<int>();
    for (const auto& jr : j.at("rounds")) {
        std::vector<gbdt::Tree> round;
        for (const auto& jt : jr) {
            gbdt::Tree t;
            for (const auto& jn : jt) {
                gbdt::TreeNode n;
                n.feature = jn.at(0).get<std::int32_t>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<std::int32_t>();
                n.right = jn.at(3).get<std::int32_t>();
                n.value = jn.at(4).get<double>();
                n.gain = jn.at(5).get<double>();
                t.nodes.push_back(n);
            }
            round.push_back(std::move(t));
        }
        m.rounds.push_back(std::move(round));
    }
    if (j.contains("training_loss"))
        m.training_loss = j.at("training_loss").get<std::vector<double>>();
    return m;
}

inline json importance_to_json(const std::vector<gbdt::ImportanceEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries)
        arr.push_back(json{{"feature", e.name},
                           {"group", gbdt::feature_group(e.name)},
                           {"gain", e.total_gain},
                           {"per_class_gain", e.per_class_gain}});
    std::map<std::string, double> group_gain;
    for (const auto& e : entries) group_gain[gbdt::feature_group(e.name)] += e.total_gain;
    return json{{"ranking", arr}, {"group_gain", group_gain}};
}

}  // namespace blocksim::io
