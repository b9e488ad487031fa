#include <cstdio>

#include <json.hpp>

#include "metric_gate/gate.hpp"

namespace mgate {
namespace {

std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string reasons_json(const std::vector<RiskReason>& reasons) {
    std::string out = "[";
    for (std::size_t i = 0; i < reasons.size(); ++i) {
        const auto& r = reasons[i];
        if (i) out += ",";
        out += "{\"code\":" + quote(r.code) + ",\"message\":" + quote(r.message) + ",\"columns\":[";
        for (std::size_t k = 0; k < r.columns.size(); ++k) {
            if (k) out += ",";
            out += quote(r.columns[k]);
        }
        out += "]}";
    }
    return out + "]";
}

std::string features_json(const SyntacticFeatures& f) {
    std::string out = "{";
    for (std::size_t i = 0; i < kSyntacticSlots; ++i) {
        if (i) out += ",";
        out += quote(kSlotNames[i]) + ":" + std::to_string(static_cast<long long>(f[i]));
    }
    return out + "}";
}

std::string item_json(const BatchItem& item) {
    if (item.ok()) return verdict_json(*item.verdict);
    return "{\"query_id\":" + quote(item.query_id) + ",\"status\":\"ERROR\",\"error\":{\"kind\":" +
           quote(item.error_kind) + ",\"message\":" + quote(item.error_message) + "}}";
}

std::string counts_line(const BatchCounts& c) {
    return "approved: " + std::to_string(c.approved) + "  blocked: " + std::to_string(c.blocked) +
           "  errors: " + std::to_string(c.errors);
}

}  // namespace

std::string verdict_json(const Verdict& v) {
    return "{\"query_id\":" + quote(v.query_id) + ",\"status\":" + quote(status_name(v.status)) +
           ",\"risk_score\":" + fixed6(v.risk_score) + ",\"threshold\":" + fixed6(v.threshold) +
           ",\"reasons\":" + reasons_json(v.reasons) + ",\"features\":" + features_json(v.features) +
           ",\"reduced_confidence\":" + (v.reduced_confidence ? "true" : "false") +
           ",\"model_id\":" + quote(v.model_id) + "}";
}

std::string verdict_text(const Verdict& v) {
    std::string out;
    if (!v.query_id.empty()) out += v.query_id + "\n";
    out += "Status: " + std::string(status_name(v.status)) + "\n";
    out += "Risk Score: " + fixed6(v.risk_score) + " (threshold " + fixed6(v.threshold) + ")\n";
    if (!v.explanation.empty()) out += "Explanation: " + v.explanation + "\n";
    for (const auto& r : v.reasons) {
        out += "  [" + r.code + "]";
        for (const auto& c : r.columns) out += " " + c;
        out += "\n";
    }
    if (v.reduced_confidence) out += "(reduced confidence: advanced SQL constructs present)\n";
    return out;
}

std::string batch_json(const BatchResult& r) {
    std::string out = "{\"results\":[";
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        if (i) out += ",\n";
        out += item_json(r.items[i]);
    }
    out += "],\n\"summary\":{\"approved\":" + std::to_string(r.counts.approved) +
           ",\"blocked\":" + std::to_string(r.counts.blocked) +
           ",\"errors\":" + std::to_string(r.counts.errors) + "}}\n";
    return out;
}

std::string batch_text(const BatchResult& r) {
    std::string out;
    for (const auto& item : r.items) {
        if (item.ok()) {
            out += verdict_text(*item.verdict);
        } else {
            out += item.query_id + "\nStatus: ERROR\n" + item.error_kind + ": " + item.error_message + "\n";
        }
        out += "\n";
    }
    return out + counts_line(r.counts) + "\n";
}

}  // namespace mgate
