#pragma once
// Audit report: the JSON machine contract and a Markdown rendering of the
// same content.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/decision_core.hpp"
#include "fairaudit/group_compare.hpp"
#include "fairaudit/label_audit.hpp"
#include "fairaudit/model_audit.hpp"

namespace fairaudit {

inline constexpr const char* kToolName = "fairaudit";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// Everything needed to reproduce a run: config, seed and input digest. The
// generated_at timestamp is the one field outside the determinism contract.
struct ReportDocument {
    std::string command;
    std::string generated_at;
    Json input = Json::object();
    Json config = Json::object();
    std::uint64_t seed = 0;
    Json groups = Json::array();
    Json comparisons = Json::array();
    std::vector<std::string> warnings;

    Json to_json() const {
        Json j;
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["command"] = command;
        j["generated_at"] = generated_at;
        j["seed"] = seed;
        j["input"] = input;
        j["config"] = config;
        j["groups"] = groups;
        j["comparisons"] = comparisons;
        j["warnings"] = warnings;
        return j;
    }
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json to_json(const GroupKey& key) {
    Json j = Json::object();
    for (const auto& [k, v] : key.dimensions()) j[k] = v;
    return j;
}

inline Json to_json(const IntervalEstimate& iv) {
    return Json{{"point", iv.point},       {"lower", iv.lower},           {"upper", iv.upper},
                {"level", iv.level},       {"replicates", iv.replicates}, {"failures", iv.failures}};
}

inline Json to_json(const ConfusionSummary& s) {
    return Json{{"tp", s.tp},   {"fp", s.fp},   {"fn", s.fn},
                {"tn", s.tn},   {"fpr", s.fpr}, {"fnr", s.fnr},
                {"prevalence", s.prevalence}, {"correction_applied", s.correction_applied}};
}

inline Json to_json(const PrevalenceEstimate& e) {
    Json j{{"implied_threshold", e.implied_threshold},
           {"intercept", e.intercept},
           {"slope", e.slope},
           {"halfwidth", e.halfwidth},
           {"effective_n", e.effective_n},
           {"records_in_window", e.records_in_window},
           {"degenerate", e.degenerate},
           {"clamped", e.clamped}};
    j["interval"] = e.interval ? to_json(*e.interval) : Json(nullptr);
    return j;
}

inline Json to_json(const SdtEstimate& e) {
    return Json{{"criterion", e.criterion},
                {"separation", e.separation},
                {"prevalence", e.prevalence},
                {"implied_threshold", e.implied_threshold},
                {"cost_ratio", e.cost_ratio},
                {"confusion", to_json(e.confusion)},
                {"low_confidence", e.low_confidence},
                {"anti_correlated", e.anti_correlated}};
}

inline Json to_json(const PairResult& p) {
    Json j{{"group_a", p.group_a.canonical()}, {"group_b", p.group_b.canonical()}};
    if (p.comparison) {
        const auto& c = *p.comparison;
        j["status"] = "ok";
        j["metric"] = to_string(c.metric);
        j["estimate_a"] = c.estimate_a;
        j["estimate_b"] = c.estimate_b;
        j["difference"] = c.difference;
        j["interval"] = to_json(c.interval);
        j["excludes_zero"] = c.excludes_zero;
    } else {
        j["status"] = "error";
        j["error_kind"] = to_string(p.error_kind);
        j["error"] = p.error;
        j["failure_fraction"] = p.failure_fraction;
    }
    return j;
}

namespace detail {

inline std::string md_number(const Json& v) {
    if (v.is_null()) return "-";
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
        return buf;
    }
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

}  // namespace detail

inline std::string to_markdown(const ReportDocument& doc) {
    std::string md;
    md += "# " + std::string(kToolName) + " " + doc.command + " report\n\n";
    md += "- version: " + std::string(kToolVersion) + "\n";
    md += "- generated: " + doc.generated_at + "\n";
    md += "- seed: " + std::to_string(doc.seed) + "\n";
    for (const auto& [k, v] : doc.input.items()) md += "- input." + k + ": " + detail::md_number(v) + "\n";
    md += "\n## Configuration\n\n";
    for (const auto& [k, v] : doc.config.items()) md += "- " + k + ": " + detail::md_number(v) + "\n";

    if (!doc.groups.empty()) {
        md += "\n## Groups\n\n";
        for (const auto& g : doc.groups) {
            md += "### " + g["group"].get<std::string>() + "\n\n";
            md += "- records: " + detail::md_number(g["records"]) + "\n";
            md += "- status: " + g["status"].get<std::string>() + "\n";
            if (g.contains("skip_reason")) md += "- skip reason: " + g["skip_reason"].get<std::string>() + "\n";
            if (g.contains("estimate") && !g["estimate"].is_null()) {
                md += "\n| field | value |\n|---|---|\n";
                for (const auto& [k, v] : g["estimate"].items()) {
                    if (v.is_object()) {
                        for (const auto& [k2, v2] : v.items())
                            md += "| " + k + "." + k2 + " | " + detail::md_number(v2) + " |\n";
                    } else {
                        md += "| " + k + " | " + detail::md_number(v) + " |\n";
                    }
                }
            }
            if (g.contains("cost_ratio")) md += "\n- implied cost ratio: " + detail::md_number(g["cost_ratio"]) + "\n";
            md += "\n";
        }
    }
    if (!doc.comparisons.empty()) {
        md += "\n## Comparisons\n\n";
        md += "| group a | group b | metric | estimate a | estimate b | difference | lower | upper | excludes zero | "
              "status |\n|---|---|---|---|---|---|---|---|---|---|\n";
        for (const auto& c : doc.comparisons) {
            if (c["status"] == "ok") {
                md += "| " + c["group_a"].get<std::string>() + " | " + c["group_b"].get<std::string>() + " | " +
                      c["metric"].get<std::string>() + " | " + detail::md_number(c["estimate_a"]) + " | " +
                      detail::md_number(c["estimate_b"]) + " | " + detail::md_number(c["difference"]) + " | " +
                      detail::md_number(c["interval"]["lower"]) + " | " + detail::md_number(c["interval"]["upper"]) +
                      " | " + (c["excludes_zero"].get<bool>() ? "yes" : "no") + " | ok |\n";
            } else {
                md += "| " + c["group_a"].get<std::string>() + " | " + c["group_b"].get<std::string>() +
                      " | - | - | - | - | - | - | - | " + c["error_kind"].get<std::string>() + ": " +
                      c["error"].get<std::string>() + " |\n";
            }
        }
    }
    md += "\n## Warnings\n\n";
    if (doc.warnings.empty()) md += "none\n";
    for (const auto& w : doc.warnings) md += "- " + w + "\n";
    return md;
}

}  // namespace fairaudit
