#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "airis2/dataset.hpp"
#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"
#include "airis2/model.hpp"
#include "airis2/predictors.hpp"
#include "airis2/timeseries.hpp"

namespace airis2 {

// Aligned multi-gateway channel plus the current active/backup partition.
// Set sizes stay constant for the whole simulation; only membership changes.
struct GatewayNetwork {
    std::map<std::string, AttenuationSeries> gateways;
    std::set<std::string> active_ids;
    std::set<std::string> backup_ids;
};

inline void validate_network(const GatewayNetwork& network) {
    require(!network.active_ids.empty(), ErrorCode::invalid_parameter, "active set must be non-empty");
    for (const auto& id : network.active_ids)
        require(!network.backup_ids.count(id), ErrorCode::invalid_parameter,
                "gateway '" + id + "' is in both active and backup sets");
    std::size_t length = 0;
    double rate = 0.0;
    for (const auto& [id, series] : network.gateways) {
        validate_series(series);
        if (length == 0) {
            length = series.size();
            rate = series.sample_rate_hz;
        } else if (series.size() != length || series.sample_rate_hz != rate) {
            throw_error(ErrorCode::alignment_error,
                        "gateway '" + id + "' series is not aligned with the others");
        }
    }
    for (const auto& id : network.active_ids)
        require(network.gateways.count(id), ErrorCode::invalid_parameter,
                "active gateway '" + id + "' has no series");
    for (const auto& id : network.backup_ids)
        require(network.gateways.count(id), ErrorCode::invalid_parameter,
                "backup gateway '" + id + "' has no series");
}

enum class PolicyKind { persistence, airis2, oracle };

inline PolicyKind parse_policy(const std::string& name) {
    if (name == "persistence") return PolicyKind::persistence;
    if (name == "airis2") return PolicyKind::airis2;
    if (name == "oracle") return PolicyKind::oracle;
    throw_error(ErrorCode::usage_error, "unknown policy '" + name + "' (persistence|airis2|oracle)");
}

inline const char* policy_name(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::persistence: return "persistence";
    case PolicyKind::airis2: return "airis2";
    case PolicyKind::oracle: return "oracle";
    }
    return "unknown";
}

// Switching policy. For airis2 the model predicts on the trailing window,
// normalized with the stats the model was trained with; a per-gateway model
// map may override the shared one.
struct SimPolicy {
    PolicyKind kind = PolicyKind::persistence;
    const LstmClassifier* shared_model = nullptr;
    std::map<std::string, const LstmClassifier*> per_gateway_models;
    std::optional<NormalizationStats> norm;
    double threshold = 0.5;
};

inline SimPolicy persistence_policy() { return {}; }

inline SimPolicy oracle_policy() {
    SimPolicy p;
    p.kind = PolicyKind::oracle;
    return p;
}

inline SimPolicy airis2_policy(const LstmClassifier& model, const NormalizationStats& norm,
                               double threshold = 0.5) {
    SimPolicy p;
    p.kind = PolicyKind::airis2;
    p.shared_model = &model;
    p.norm = norm;
    p.threshold = threshold;
    return p;
}

enum class OutageDefinition { per_link, any_link };

struct SimConfig {
    double alpha_db = 5.0;
    double delta_t_s = 60.0;
    double switch_cooldown_s = 0.0;
    std::size_t decision_interval_samples = 1;
    OutageDefinition outage_definition = OutageDefinition::per_link;
};

struct PendingSwitch {
    std::string out_id;
    std::string in_id;
    std::size_t decision_index = 0;
    std::size_t effective_index = 0;
};

struct SwitchEvent {
    double t_s = 0.0;
    std::string out_id;
    std::string in_id;
};

struct SimResult {
    std::uint64_t outage_sample_count = 0;
    double outage_fraction = 0.0;
    std::uint64_t switch_count = 0;
    std::uint64_t starved_requests = 0;
    std::map<std::string, std::uint64_t> per_gateway_outage;
    std::vector<SwitchEvent> events;
    std::uint64_t total_samples = 0;
    std::size_t active_count = 0;
    OutageDefinition outage_definition = OutageDefinition::per_link;
    std::set<std::string> final_active;
    std::set<std::string> final_backup;
};

inline double availability(const SimResult& result) { return 1.0 - result.outage_fraction; }

// Discrete-time event loop. Per sample: mature pending switches, count outage
// over the active set, then (at the decision interval) let the policy schedule
// new switches that become effective delta_t later. The chosen backup is the
// eligible one with the lowest current attenuation, ids breaking ties.
inline SimResult simulate(const GatewayNetwork& network, const SimPolicy& policy,
                          const SimConfig& config) {
    validate_network(network);
    require(std::isfinite(config.alpha_db), ErrorCode::invalid_parameter, "alpha_db must be finite");
    require(config.delta_t_s > 0.0, ErrorCode::invalid_parameter, "delta_t_s must be > 0");
    require(config.switch_cooldown_s >= 0.0, ErrorCode::invalid_parameter, "cooldown must be >= 0");
    require(config.decision_interval_samples >= 1, ErrorCode::invalid_parameter,
            "decision interval must be >= 1");
    if (policy.kind == PolicyKind::airis2) {
        require(policy.shared_model != nullptr || !policy.per_gateway_models.empty(),
                ErrorCode::usage_error, "airis2 policy needs a model");
        require(policy.norm.has_value(), ErrorCode::usage_error,
                "airis2 policy needs normalization stats");
    }

    const auto& first_series = network.gateways.begin()->second;
    const std::size_t total = first_series.size();
    const double rate = first_series.sample_rate_hz;
    const auto horizon =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.delta_t_s * rate)));
    const auto cooldown =
        static_cast<std::size_t>(std::llround(config.switch_cooldown_s * rate));

    std::set<std::string> active = network.active_ids;
    std::set<std::string> backup = network.backup_ids;
    const std::size_t n_active = active.size();
    const std::size_t n_backup = backup.size();

    SimResult result;
    result.total_samples = total;
    result.active_count = n_active;
    result.outage_definition = config.outage_definition;
    for (const auto& [id, series] : network.gateways) result.per_gateway_outage[id] = 0;

    std::vector<PendingSwitch> pending;
    std::map<std::string, std::size_t> last_decision;
    std::vector<double> window_scratch;

    auto model_for = [&](const std::string& id) -> const LstmClassifier* {
        auto it = policy.per_gateway_models.find(id);
        if (it != policy.per_gateway_models.end()) return it->second;
        return policy.shared_model;
    };

    // nullopt means the policy cannot produce a prediction at this sample
    // (not enough history or future); it is treated as "no fade predicted".
    auto predict = [&](const std::string& id, std::size_t t) -> std::optional<bool> {
        const auto& series = network.gateways.at(id);
        switch (policy.kind) {
        case PolicyKind::persistence:
            return series.values[t] > config.alpha_db;
        case PolicyKind::oracle:
            if (t + horizon >= series.size()) return std::nullopt;
            return series.values[t + horizon] > config.alpha_db;
        case PolicyKind::airis2: {
            const LstmClassifier* model = model_for(id);
            if (model == nullptr) return std::nullopt;
            const auto len = static_cast<std::size_t>(model->config.window_len);
            if (t + 1 < len) return std::nullopt;
            window_scratch.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                window_scratch[i] =
                    (series.values[t + 1 - len + i] - policy.norm->mean_db) / policy.norm->std_db;
            }
            return predict_probability(*model, window_scratch) >= policy.threshold;
        }
        }
        return std::nullopt;
    };

    auto involved = [&](const std::string& id) {
        for (const auto& p : pending)
            if (p.out_id == id || p.in_id == id) return true;
        return false;
    };

    for (std::size_t t = 0; t < total; ++t) {
        // mature switches scheduled delta_t ago
        for (auto it = pending.begin(); it != pending.end();) {
            if (it->effective_index == t) {
                active.erase(it->out_id);
                backup.erase(it->in_id);
                active.insert(it->in_id);
                backup.insert(it->out_id);
                result.events.push_back({first_series.time_at(t), it->out_id, it->in_id});
                ++result.switch_count;
                it = pending.erase(it);
            } else {
                ++it;
            }
        }
        require(active.size() == n_active && backup.size() == n_backup,
                ErrorCode::numeric_error, "set sizes drifted during simulation");

        // outage accounting over the current active set
        bool any_outage = false;
        for (const auto& id : active) {
            if (network.gateways.at(id).values[t] > config.alpha_db) {
                any_outage = true;
                ++result.per_gateway_outage[id];
                if (config.outage_definition == OutageDefinition::per_link)
                    ++result.outage_sample_count;
            }
        }
        if (config.outage_definition == OutageDefinition::any_link && any_outage)
            ++result.outage_sample_count;

        if (t % config.decision_interval_samples != 0) continue;

        for (const auto& id : active) {
            if (involved(id)) continue;
            if (cooldown > 0) {
                auto it = last_decision.find(id);
                if (it != last_decision.end() && t - it->second < cooldown) continue;
            }
            const auto fade_ahead = predict(id, t);
            if (!fade_ahead || !*fade_ahead) continue;

            const std::string* best = nullptr;
            double best_attenuation = 0.0;
            for (const auto& candidate : backup) {
                if (involved(candidate)) continue;
                const auto candidate_fade = predict(candidate, t);
                if (candidate_fade && *candidate_fade) continue;
                const double a = network.gateways.at(candidate).values[t];
                if (best == nullptr || a < best_attenuation) {
                    best = &candidate;
                    best_attenuation = a;
                }
            }
            if (best == nullptr) {
                ++result.starved_requests;
                continue;
            }
            pending.push_back({id, *best, t, t + horizon});
            last_decision[id] = t;
        }
    }

    const double denominator = config.outage_definition == OutageDefinition::per_link
                                   ? static_cast<double>(total) * static_cast<double>(n_active)
                                   : static_cast<double>(total);
    result.outage_fraction = static_cast<double>(result.outage_sample_count) / denominator;
    result.final_active = std::move(active);
    result.final_backup = std::move(backup);
    return result;
}

inline std::string render_sim_json(const SimResult& result) {
    nlohmann::json doc;
    doc["format"] = "airis2-sim";
    doc["version"] = 1;
    doc["outage_sample_count"] = result.outage_sample_count;
    doc["outage_fraction"] = result.outage_fraction;
    doc["availability"] = availability(result);
    doc["switch_count"] = result.switch_count;
    doc["starved_requests"] = result.starved_requests;
    doc["total_samples"] = result.total_samples;
    doc["active_count"] = result.active_count;
    doc["outage_definition"] =
        result.outage_definition == OutageDefinition::per_link ? "per_link" : "any_link";
    doc["per_gateway_outage"] = result.per_gateway_outage;
    doc["final_active"] = result.final_active;
    doc["final_backup"] = result.final_backup;
    return doc.dump(2) + "\n";
}

inline constexpr const char* kSwitchLogHeader = "t_s,out_id,in_id";

inline std::string render_switch_log_csv(const SimResult& result) {
    std::ostringstream out;
    out << kSwitchLogHeader << '\n';
    for (const auto& e : result.events)
        out << detail::format_double(e.t_s) << ',' << e.out_id << ',' << e.in_id << '\n';
    return out.str();
}

// Scenario file: gateway list (CSV path or synthesis parameters), set sizes
// or explicit memberships, switching parameters, policy and seed. Synthetic
// gateways without an explicit seed get one derived from the scenario seed.
struct Scenario {
    GatewayNetwork network;
    SimConfig config;
    PolicyKind policy = PolicyKind::persistence;
    double threshold = 0.5;
    std::string model_path; // for the airis2 policy
    std::uint64_t seed = 0;
};

inline Scenario load_scenario(const nlohmann::json& doc,
                              const std::string& base_dir = std::string{}) {
    Scenario scenario;
    try {
        scenario.seed = doc.value("seed", std::uint64_t{0});
        scenario.config.alpha_db = doc.at("alpha_db").get<double>();
        scenario.config.delta_t_s = doc.at("delta_t_s").get<double>();
        scenario.config.switch_cooldown_s = doc.value("cooldown_s", 0.0);
        scenario.config.decision_interval_samples =
            doc.value("decision_interval_samples", std::size_t{1});
        const std::string outage = doc.value("outage_definition", "per_link");
        if (outage == "per_link")
            scenario.config.outage_definition = OutageDefinition::per_link;
        else if (outage == "any_link")
            scenario.config.outage_definition = OutageDefinition::any_link;
        else
            throw_error(ErrorCode::usage_error, "outage_definition must be per_link or any_link");
        scenario.policy = parse_policy(doc.at("policy").get<std::string>());
        scenario.threshold = doc.value("threshold", 0.5);
        if (doc.contains("model")) scenario.model_path = doc.at("model").get<std::string>();

        const auto& gateways = doc.at("gateways");
        require(gateways.is_array() && !gateways.empty(), ErrorCode::format_error,
                "scenario needs a non-empty gateway array");
        std::size_t index = 0;
        for (const auto& g : gateways) {
            const auto id = g.at("id").get<std::string>();
            require(!scenario.network.gateways.count(id), ErrorCode::format_error,
                    "duplicate gateway id '" + id + "'");
            if (g.contains("csv")) {
                std::string path = g.at("csv").get<std::string>();
                if (!base_dir.empty() && !path.empty() && path.front() != '/')
                    path = base_dir + "/" + path;
                scenario.network.gateways[id] = ingest_csv_file(path, id);
            } else if (g.contains("synth")) {
                const auto& s = g.at("synth");
                SynthParams params;
                params.gateway_id = id;
                params.m_ln = s.at("m_ln").get<double>();
                params.sigma_ln = s.at("sigma_ln").get<double>();
                params.beta_inv_s = s.at("beta_inv_s").get<double>();
                params.duration_s = s.at("duration_s").get<double>();
                params.sample_rate_hz = s.value("sample_rate_hz", 10.0);
                params.offset_db = s.value("offset_db", 0.0);
                params.seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>()
                                                 : mix_seed(scenario.seed, index);
                scenario.network.gateways[id] = generate_synthetic(params);
            } else {
                throw_error(ErrorCode::format_error,
                            "gateway '" + id + "' needs either a csv path or synth params");
            }
            ++index;
        }

        if (doc.contains("active_ids")) {
            for (const auto& id : doc.at("active_ids"))
                scenario.network.active_ids.insert(id.get<std::string>());
            for (const auto& id : doc.at("backup_ids"))
                scenario.network.backup_ids.insert(id.get<std::string>());
        } else {
            const auto n = doc.at("active_count").get<std::size_t>();
            const auto p = doc.at("backup_count").get<std::size_t>();
            require(n + p <= scenario.network.gateways.size(), ErrorCode::format_error,
                    "active_count + backup_count exceeds the gateway list");
            std::size_t i = 0;
            for (const auto& [id, series] : scenario.network.gateways) {
                (void)series;
                if (i < n)
                    scenario.network.active_ids.insert(id);
                else if (i < n + p)
                    scenario.network.backup_ids.insert(id);
                ++i;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("scenario malformed: ") + e.what());
    }
    validate_network(scenario.network);
    return scenario;
}

} // namespace airis2
