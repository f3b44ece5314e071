#pragma once
// Orchestration behind the command-line tool: ingest -> audit -> compare ->
// report. Kept in the library so the end-to-end paths are testable without
// spawning processes.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/group_compare.hpp"
#include "fairaudit/ingest.hpp"
#include "fairaudit/label_audit.hpp"
#include "fairaudit/model_audit.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/synthetic.hpp"

namespace fairaudit::cli {

enum class ReportFormat : std::uint8_t { Json, Markdown };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "markdown" || s == "md") return ReportFormat::Markdown;
    throw InputError("unknown report format '" + std::string(s) + "'");
}

inline CorrectionPolicy parse_correction(std::string_view s) {
    if (s == "none") return CorrectionPolicy::None;
    if (s == "half-count") return CorrectionPolicy::HalfCount;
    throw InputError("unknown correction policy '" + std::string(s) + "'");
}

inline const char* to_string(CorrectionPolicy c) {
    return c == CorrectionPolicy::None ? "none" : "half-count";
}

inline LabelGrouping::Mode parse_label_mode(std::string_view s) {
    if (s == "group") return LabelGrouping::Mode::ByGroup;
    if (s == "labeler") return LabelGrouping::Mode::ByLabeler;
    if (s == "group-labeler") return LabelGrouping::Mode::ByGroupAndLabeler;
    throw InputError("unknown label grouping '" + std::string(s) + "'");
}

inline const char* to_string(LabelGrouping::Mode m) {
    switch (m) {
    case LabelGrouping::Mode::ByGroup: return "group";
    case LabelGrouping::Mode::ByLabeler: return "labeler";
    case LabelGrouping::Mode::ByGroupAndLabeler: return "group-labeler";
    }
    return "group";
}

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double number(std::string_view s, std::string_view what) {
    const auto v = parse_double(s);
    if (!v) throw InputError(std::string(what) + ": '" + std::string(s) + "' is not a number");
    return *v;
}

// "name" or "name:a,b,..."
inline std::pair<std::string, std::vector<double>> parse_form(std::string_view text, std::string_view what) {
    const auto colon = text.find(':');
    std::pair<std::string, std::vector<double>> out;
    out.first = std::string(text.substr(0, colon));
    if (colon != std::string_view::npos)
        for (const auto& p : split(text.substr(colon + 1), ',')) out.second.push_back(number(p, what));
    return out;
}

inline void arity(const std::pair<std::string, std::vector<double>>& form, std::size_t n, std::string_view what) {
    if (form.second.size() != n)
        throw InputError(std::string(what) + " '" + form.first + "' takes " + std::to_string(n) + " parameter(s)");
}

}  // namespace detail

// uniform | exp:RATE | beta:A,B
inline ScoreDensity parse_density(std::string_view text) {
    const auto form = detail::parse_form(text, "density");
    ScoreDensity d;
    if (form.first == "uniform") {
        detail::arity(form, 0, "density");
        d = ScoreDensity::uniform();
    } else if (form.first == "exp") {
        detail::arity(form, 1, "density");
        d = ScoreDensity::truncated_exponential(form.second[0]);
    } else if (form.first == "beta") {
        detail::arity(form, 2, "density");
        d = ScoreDensity::beta_distribution(form.second[0], form.second[1]);
    } else {
        throw InputError("unknown density '" + form.first + "'");
    }
    d.validate();
    return d;
}

// identity | affine:SLOPE,INTERCEPT | logistic:SLOPE,CENTRE
inline Calibration parse_calibration(std::string_view text) {
    const auto form = detail::parse_form(text, "calibration");
    if (form.first == "identity") {
        detail::arity(form, 0, "calibration");
        return Calibration::identity();
    }
    if (form.first == "affine") {
        detail::arity(form, 2, "calibration");
        return Calibration::affine(form.second[0], form.second[1]);
    }
    if (form.first == "logistic") {
        detail::arity(form, 2, "calibration");
        return Calibration::logistic(form.second[0], form.second[1]);
    }
    throw InputError("unknown calibration '" + form.first + "'");
}

// PREVALENCE,SEPARATION,CRITERION
inline SdtParams parse_sdt(std::string_view text) {
    const auto parts = detail::split(text, ',');
    if (parts.size() != 3) throw InputError("SDT parameters are prevalence,separation,criterion");
    SdtParams p{detail::number(parts[0], "prevalence"), detail::number(parts[1], "separation"),
                detail::number(parts[2], "criterion")};
    p.validate();
    return p;
}

// Group keys on the command line: a bare value means `dimension=value`.
inline GroupKey parse_group_arg(std::string_view text, const std::vector<std::string>& dimensions) {
    if (text.find('=') != std::string_view::npos) return GroupKey::parse(text);
    if (dimensions.size() != 1)
        throw InputError("group '" + std::string(text) + "' needs dim=value form when grouping by " +
                         std::to_string(dimensions.size()) + " dimensions");
    return GroupKey{{dimensions.front(), std::string(text)}};
}

// "A,B" pairs of group keys.
inline std::pair<GroupKey, GroupKey> parse_pair(std::string_view text, const std::vector<std::string>& dimensions) {
    const auto parts = detail::split(text, ',');
    if (parts.size() != 2) throw InputError("pair '" + std::string(text) + "' must be GROUP_A,GROUP_B");
    return {parse_group_arg(parts[0], dimensions), parse_group_arg(parts[1], dimensions)};
}

struct Sweep {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.1;

    std::vector<double> thresholds() const {
        std::vector<double> out;
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }
};

// lo:hi:step
inline Sweep parse_sweep(std::string_view text) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3) throw InputError("sweep must be lo:hi:step");
    Sweep s{detail::number(parts[0], "sweep"), detail::number(parts[1], "sweep"), detail::number(parts[2], "sweep")};
    if (!(s.step > 0.0) || !(s.hi >= s.lo)) throw InputError("sweep needs lo <= hi and step > 0");
    if ((s.hi - s.lo) / s.step > 10000.0) throw InputError("sweep has more than 10000 steps");
    return s;
}

struct OutputOptions {
    std::filesystem::path report;  // empty: standard output
    ReportFormat format = ReportFormat::Json;
    std::filesystem::path table;   // optional tidy CSV
    bool timestamp = true;
};

struct BootstrapArgs {
    std::size_t replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct ModelAuditArgs {
    std::filesystem::path input;
    IngestSchema schema;
    double threshold = 0.5;
    std::vector<std::string> group_by;  // empty: every group column of the file
    WindowPolicy window = WindowPolicy::adaptive();
    BootstrapArgs bootstrap;  // replicates == 0 disables intervals
    std::optional<Sweep> sweep;
};

struct LabelAuditArgs {
    std::filesystem::path input;
    IngestSchema schema;
    LabelGrouping grouping;
    CorrectionPolicy correction = CorrectionPolicy::HalfCount;
    MinCounts min_counts;
    BootstrapArgs bootstrap;  // replicates == 0 disables intervals
};

struct CompareArgs {
    enum class Mode : std::uint8_t { Model, Labels };

    Mode mode = Mode::Model;
    std::filesystem::path input;
    IngestSchema schema;
    double threshold = 0.5;
    std::vector<std::string> group_by;
    WindowPolicy window = WindowPolicy::adaptive();
    LabelGrouping label_grouping;
    CorrectionPolicy correction = CorrectionPolicy::HalfCount;
    Metric metric = Metric::ImpliedThreshold;
    std::vector<std::string> pairs;  // empty: every pair
    BootstrapArgs bootstrap;
};

struct RunResult {
    ReportDocument report;
    std::string table;  // tidy CSV, may be empty
    int exit_code = 0;
};

namespace detail {

inline Json window_json(const WindowPolicy& w) {
    Json j;
    j["mode"] = w.mode == WindowPolicy::Mode::Fixed ? "fixed" : "adaptive";
    if (w.mode == WindowPolicy::Mode::Fixed) {
        j["halfwidth"] = w.halfwidth;
    } else {
        j["min_effective_n"] = w.min_effective_n;
        j["max_halfwidth"] = std::isfinite(w.max_halfwidth) ? Json(w.max_halfwidth) : Json(nullptr);
    }
    return j;
}

inline Json bootstrap_json(const BootstrapArgs& b) {
    return Json{{"replicates", b.replicates}, {"level", b.level}};
}

inline Json schema_json(const IngestSchema& s) {
    Json j;
    j["null_policy"] = s.null_policy == NullPolicy::Fail ? "fail" : "reject-row";
    j["max_rejection_fraction"] = s.max_rejection_fraction;
    j["group_columns"] = s.group_columns;
    return j;
}

template <class Record>
Json input_json(const std::filesystem::path& path, const IngestResult<Record>& in) {
    return Json{{"path", path.filename().string()},
                {"digest", in.digest},
                {"rows", in.rows},
                {"records", in.records.size()},
                {"rejected", in.rejections.size()}};
}

template <class Record>
void rejection_warnings(const IngestResult<Record>& in, std::vector<std::string>& warnings) {
    if (in.rejections.empty()) return;
    warnings.push_back("input: rejected " + std::to_string(in.rejections.size()) + " of " + std::to_string(in.rows) +
                       " rows");
    const std::size_t shown = std::min<std::size_t>(in.rejections.size(), 20);
    for (std::size_t i = 0; i < shown; ++i)
        warnings.push_back("input: line " + std::to_string(in.rejections[i].line) + ": " + in.rejections[i].reason);
}

inline std::vector<std::string> all_dimensions(std::span<const DecisionRecord> records) {
    std::vector<std::string> dims;
    for (const auto& [k, v] : records.front().group.dimensions()) dims.push_back(k);
    return dims;
}

inline void interval_warnings(const std::string& who, const std::optional<IntervalEstimate>& iv,
                              std::vector<std::string>& warnings) {
    if (iv && iv->failures > 0)
        warnings.push_back(who + ": bootstrap failures " + std::to_string(iv->failures) + " of " +
                           std::to_string(iv->replicates) + " replicates");
}

inline int exit_from(bool any_ok, const std::vector<ErrorKind>& kinds) {
    if (any_ok || kinds.empty()) return 0;
    if (std::find(kinds.begin(), kinds.end(), ErrorKind::Input) != kinds.end()) return exit_code(ErrorKind::Input);
    if (std::find(kinds.begin(), kinds.end(), ErrorKind::Unstable) != kinds.end())
        return exit_code(ErrorKind::Unstable);
    return exit_code(ErrorKind::Degenerate);
}

// Group entry for a model audit; also collects the entry's warnings.
inline Json model_group_json(const GroupKey& key, const ModelGroupResult& res, std::vector<std::string>& warnings) {
    const std::string name = key.canonical();
    Json g;
    g["group"] = name;
    g["dimensions"] = to_json(key);
    g["records"] = res.records;
    if (!res.estimate) {
        g["status"] = "skipped";
        g["skip_reason"] = res.skip_reason;
        g["estimate"] = nullptr;
        g["cost_ratio"] = nullptr;
        warnings.push_back(name + ": skipped (" + std::string(to_string(res.skip_kind)) + "): " + res.skip_reason);
        return g;
    }
    const auto& e = *res.estimate;
    g["status"] = "ok";
    g["estimate"] = to_json(e);
    try {
        g["cost_ratio"] = implied_cost_ratio(e.implied_threshold).value();
    } catch (const UndefinedRatioError& err) {
        g["cost_ratio"] = nullptr;
        warnings.push_back(name + ": cost_ratio undefined: " + err.what());
    }
    if (e.clamped)
        warnings.push_back(name + ": clamped: intercept " + format_double(e.intercept) + " moved into [0, 1]");
    if (e.degenerate)
        warnings.push_back(name + ": degenerate: all windowed scores identical, slope fixed at 0");
    interval_warnings(name, e.interval, warnings);
    return g;
}

inline Json label_group_json(const GroupKey& key, const LabelGroupResult& res,
                             const std::optional<IntervalEstimate>& interval, std::vector<std::string>& warnings) {
    const std::string name = key.canonical();
    Json g;
    g["group"] = name;
    g["dimensions"] = to_json(key);
    g["records"] = res.records;
    if (!res.estimate) {
        g["status"] = "skipped";
        g["skip_reason"] = res.skip_reason;
        g["estimate"] = nullptr;
        g["cost_ratio"] = nullptr;
        warnings.push_back(name + ": skipped (" + std::string(to_string(res.skip_kind)) + "): " + res.skip_reason);
        return g;
    }
    const auto& e = *res.estimate;
    g["status"] = "ok";
    Json est = to_json(e);
    est["interval"] = interval ? to_json(*interval) : Json(nullptr);
    g["estimate"] = std::move(est);
    g["cost_ratio"] = e.cost_ratio;
    if (e.confusion.correction_applied)
        warnings.push_back(name + ": correction_applied: observed FPR or FNR was 0 or 1");
    if (e.low_confidence)
        warnings.push_back(name + ": low_confidence: " + std::to_string(e.confusion.positives()) + " positives, " +
                           std::to_string(e.confusion.negatives()) + " negatives");
    if (e.anti_correlated)
        warnings.push_back(name + ": anti_correlated: separation " + format_double(e.separation) + " < 0");
    interval_warnings(name, interval, warnings);
    return g;
}

inline ReportDocument new_report(const char* command, std::uint64_t seed, const OutputOptions* out) {
    ReportDocument doc;
    doc.command = command;
    doc.seed = seed;
    doc.generated_at = (out == nullptr || out->timestamp) ? utc_timestamp() : "";
    return doc;
}

}  // namespace detail

inline RunResult run_model_audit(const ModelAuditArgs& args, const OutputOptions* out = nullptr) {
    args.window.validate();
    if (!std::isfinite(args.threshold)) throw DomainError("threshold must be finite");
    const auto in = ingest_decisions(args.input, args.schema);
    if (in.records.empty()) throw InputError("no usable records in " + args.input.string());
    const std::span<const DecisionRecord> records(in.records);
    const auto dims = args.group_by.empty() ? detail::all_dimensions(records) : args.group_by;

    std::optional<BootstrapConfig> boot;
    if (args.bootstrap.replicates > 0) {
        boot = BootstrapConfig{args.bootstrap.replicates, args.bootstrap.level, Seed{args.bootstrap.seed}};
        validate(*boot);
    }

    RunResult run;
    run.report = detail::new_report("model-audit", args.bootstrap.seed, out);
    auto& doc = run.report;
    doc.input = detail::input_json(args.input, in);
    doc.config = Json{{"threshold", args.threshold},
                      {"group_by", dims},
                      {"window", detail::window_json(args.window)},
                      {"bootstrap", boot ? detail::bootstrap_json(args.bootstrap) : Json(nullptr)},
                      {"schema", detail::schema_json(args.schema)}};
    detail::rejection_warnings(in, doc.warnings);

    const auto results = audit_model(records, args.threshold, dims, args.window, boot);
    bool any_ok = false;
    std::vector<ErrorKind> kinds;
    for (const auto& [key, res] : results) {
        doc.groups.push_back(detail::model_group_json(key, res, doc.warnings));
        if (res.estimate) any_ok = true;
        else kinds.push_back(res.skip_kind);
    }

    std::string table = "group,threshold,status,implied_threshold,lower,upper,intercept,slope,halfwidth,effective_n,"
                        "records_in_window,cost_ratio,clamped,degenerate\n";
    const auto row = [&](const GroupKey& key, double t, const ModelGroupResult& res) {
        table += csv_escape(key.canonical()) + "," + format_double(t) + ",";
        if (!res.estimate) {
            table += "skipped,,,,,,,,,,,,\n";
            return;
        }
        const auto& e = *res.estimate;
        std::string cost;
        if (e.implied_threshold > 0.0 && e.implied_threshold < 1.0)
            cost = format_double(implied_cost_ratio(e.implied_threshold).value());
        table += "ok," + format_double(e.implied_threshold) + "," +
                 (e.interval ? format_double(e.interval->lower) : "") + "," +
                 (e.interval ? format_double(e.interval->upper) : "") + "," + format_double(e.intercept) + "," +
                 format_double(e.slope) + "," + format_double(e.halfwidth) + "," + format_double(e.effective_n) +
                 "," + std::to_string(e.records_in_window) + "," + cost + "," + (e.clamped ? "1" : "0") + "," +
                 (e.degenerate ? "1" : "0") + "\n";
    };
    if (args.sweep) {
        doc.config["sweep"] = Json{{"lo", args.sweep->lo}, {"hi", args.sweep->hi}, {"step", args.sweep->step}};
        for (const double t : args.sweep->thresholds())
            for (const auto& [key, res] : audit_model(records, t, dims, args.window, std::nullopt)) row(key, t, res);
    } else {
        for (const auto& [key, res] : results) row(key, args.threshold, res);
    }
    run.table = std::move(table);
    run.exit_code = detail::exit_from(any_ok, kinds);
    return run;
}

inline RunResult run_label_audit(const LabelAuditArgs& args, const OutputOptions* out = nullptr) {
    const auto in = ingest_labels(args.input, args.schema);
    if (in.records.empty()) throw InputError("no usable records in " + args.input.string());
    const std::span<const LabelRecord> records(in.records);

    std::optional<BootstrapConfig> boot;
    if (args.bootstrap.replicates > 0) {
        boot = BootstrapConfig{args.bootstrap.replicates, args.bootstrap.level, Seed{args.bootstrap.seed}};
        validate(*boot);
    }

    RunResult run;
    run.report = detail::new_report("label-audit", args.bootstrap.seed, out);
    auto& doc = run.report;
    doc.input = detail::input_json(args.input, in);
    doc.config = Json{{"group_mode", to_string(args.grouping.mode)},
                      {"group_by", args.grouping.dimensions},
                      {"correction", to_string(args.correction)},
                      {"min_counts", Json{{"positives", args.min_counts.positives},
                                          {"negatives", args.min_counts.negatives}}},
                      {"bootstrap", boot ? detail::bootstrap_json(args.bootstrap) : Json(nullptr)},
                      {"schema", detail::schema_json(args.schema)}};
    detail::rejection_warnings(in, doc.warnings);

    const auto results = audit_labels(records, args.grouping, args.correction, args.min_counts);
    std::map<GroupKey, std::vector<LabelOutcome>> parts;
    if (boot)
        for (const auto& r : records) parts[args.grouping.key_for(r)].push_back({r.label, r.truth});

    bool any_ok = false;
    std::vector<ErrorKind> kinds;
    std::string table = "group,status,records,criterion,separation,prevalence,implied_threshold,lower,upper,"
                        "cost_ratio,fpr,fnr,correction_applied,low_confidence,anti_correlated\n";
    for (const auto& [key, res] : results) {
        std::optional<IntervalEstimate> interval;
        if (boot && res.estimate) {
            BootstrapConfig cfg = *boot;
            cfg.seed = group_seed(boot->seed, key);
            try {
                interval = bootstrap_interval<LabelOutcome>(
                    [&](std::span<const LabelOutcome> sample) {
                        return sdt_estimate(confusion(sample, args.correction)).implied_threshold;
                    },
                    std::span<const LabelOutcome>(parts.at(key)), cfg);
            } catch (const UnstableStatisticError& e) {
                doc.warnings.push_back(key.canonical() + ": interval unavailable (unstable): " + e.what());
            }
        }
        doc.groups.push_back(detail::label_group_json(key, res, interval, doc.warnings));
        if (res.estimate) any_ok = true;
        else kinds.push_back(res.skip_kind);

        table += csv_escape(key.canonical()) + ",";
        if (!res.estimate) {
            table += "skipped," + std::to_string(res.records) + ",,,,,,,,,,,,\n";
            continue;
        }
        const auto& e = *res.estimate;
        table += "ok," + std::to_string(res.records) + "," + format_double(e.criterion) + "," +
                 format_double(e.separation) + "," + format_double(e.prevalence) + "," +
                 format_double(e.implied_threshold) + "," + (interval ? format_double(interval->lower) : "") + "," +
                 (interval ? format_double(interval->upper) : "") + "," + format_double(e.cost_ratio) + "," +
                 format_double(e.confusion.fpr) + "," + format_double(e.confusion.fnr) + "," +
                 (e.confusion.correction_applied ? "1" : "0") + "," + (e.low_confidence ? "1" : "0") + "," +
                 (e.anti_correlated ? "1" : "0") + "\n";
    }
    run.table = std::move(table);
    run.exit_code = detail::exit_from(any_ok, kinds);
    return run;
}

inline RunResult run_compare(const CompareArgs& args, const OutputOptions* out = nullptr) {
    const BootstrapConfig boot{args.bootstrap.replicates, args.bootstrap.level, Seed{args.bootstrap.seed}};
    validate(boot);

    RunResult run;
    run.report = detail::new_report("compare", args.bootstrap.seed, out);
    auto& doc = run.report;
    std::vector<PairResult> results;
    std::vector<std::pair<GroupKey, GroupKey>> pairs;
    bool any_group_ok = false;
    std::vector<ErrorKind> kinds;

    if (args.mode == CompareArgs::Mode::Model) {
        args.window.validate();
        const auto in = ingest_decisions(args.input, args.schema);
        if (in.records.empty()) throw InputError("no usable records in " + args.input.string());
        const std::span<const DecisionRecord> records(in.records);
        const auto dims = args.group_by.empty() ? detail::all_dimensions(records) : args.group_by;
        doc.input = detail::input_json(args.input, in);
        doc.config = Json{{"mode", "model"},
                          {"metric", to_string(args.metric)},
                          {"threshold", args.threshold},
                          {"group_by", dims},
                          {"window", detail::window_json(args.window)},
                          {"bootstrap", detail::bootstrap_json(args.bootstrap)},
                          {"schema", detail::schema_json(args.schema)}};
        detail::rejection_warnings(in, doc.warnings);

        const auto groups = audit_model(records, args.threshold, dims, args.window, std::nullopt);
        for (const auto& [key, res] : groups) {
            doc.groups.push_back(detail::model_group_json(key, res, doc.warnings));
            any_group_ok = any_group_ok || res.estimate.has_value();
        }
        if (args.pairs.empty()) pairs = all_pairs(groups);
        for (const auto& p : args.pairs) pairs.push_back(parse_pair(p, dims));
        results = compare_groups(records, ModelAuditConfig{args.threshold, dims, args.window}, pairs, args.metric,
                                 boot);
    } else {
        const auto in = ingest_labels(args.input, args.schema);
        if (in.records.empty()) throw InputError("no usable records in " + args.input.string());
        const std::span<const LabelRecord> records(in.records);
        doc.input = detail::input_json(args.input, in);
        doc.config = Json{{"mode", "labels"},
                          {"metric", to_string(args.metric)},
                          {"group_mode", to_string(args.label_grouping.mode)},
                          {"group_by", args.label_grouping.dimensions},
                          {"correction", to_string(args.correction)},
                          {"bootstrap", detail::bootstrap_json(args.bootstrap)},
                          {"schema", detail::schema_json(args.schema)}};
        detail::rejection_warnings(in, doc.warnings);

        const auto groups = audit_labels(records, args.label_grouping, args.correction);
        for (const auto& [key, res] : groups) {
            doc.groups.push_back(detail::label_group_json(key, res, std::nullopt, doc.warnings));
            any_group_ok = any_group_ok || res.estimate.has_value();
        }
        if (args.pairs.empty()) pairs = all_pairs(groups);
        std::vector<std::string> dims = args.label_grouping.dimensions;
        if (args.label_grouping.mode == LabelGrouping::Mode::ByLabeler) dims = {"labeler"};
        for (const auto& p : args.pairs) pairs.push_back(parse_pair(p, dims));
        results = compare_groups(records, LabelAuditConfig{args.label_grouping, args.correction}, pairs, args.metric,
                                 boot);
    }
    doc.config["pairs"] = args.pairs;

    bool any_ok = false;
    std::string table = "group_a,group_b,metric,status,estimate_a,estimate_b,difference,lower,upper,level,"
                        "excludes_zero,failures\n";
    for (const auto& r : results) {
        doc.comparisons.push_back(to_json(r));
        table += csv_escape(r.group_a.canonical()) + "," + csv_escape(r.group_b.canonical()) + "," +
                 to_string(args.metric) + ",";
        if (r.comparison) {
            any_ok = true;
            const auto& c = *r.comparison;
            table += "ok," + format_double(c.estimate_a) + "," + format_double(c.estimate_b) + "," +
                     format_double(c.difference) + "," + format_double(c.interval.lower) + "," +
                     format_double(c.interval.upper) + "," + format_double(c.interval.level) + "," +
                     (c.excludes_zero ? "1" : "0") + "," + std::to_string(c.interval.failures) + "\n";
            detail::interval_warnings(r.group_a.canonical() + " vs " + r.group_b.canonical(), c.interval,
                                      doc.warnings);
        } else {
            kinds.push_back(r.error_kind);
            table += "error,,,,,,,,\n";
            doc.warnings.push_back(r.group_a.canonical() + " vs " + r.group_b.canonical() + ": " +
                                   to_string(r.error_kind) + ": " + r.error);
        }
    }
    if (results.empty() && !any_group_ok) kinds.push_back(ErrorKind::Degenerate);
    if (results.empty()) doc.warnings.push_back("compare: no pairs to compare");
    run.table = std::move(table);
    run.exit_code = detail::exit_from(any_ok, kinds);
    return run;
}

struct SimGroup {
    std::string value;
    std::optional<Calibration> calibration;  // scored datasets
    std::optional<SdtParams> sdt;            // label datasets
};

// VALUE or VALUE=FORM, where FORM is a calibration (scored) or
// prevalence,separation,criterion (labels).
inline SimGroup parse_sim_group(std::string_view text, bool labels) {
    SimGroup g;
    const auto eq = text.find('=');
    g.value = std::string(text.substr(0, eq));
    if (g.value.empty()) throw InputError("simulate: empty group value");
    if (eq != std::string_view::npos) {
        const auto form = text.substr(eq + 1);
        if (labels) g.sdt = parse_sdt(form);
        else g.calibration = parse_calibration(form);
    }
    return g;
}

struct SimulateArgs {
    enum class Kind : std::uint8_t { Scored, Labels };

    Kind kind = Kind::Scored;
    std::size_t n = 1000;  // per group
    std::uint64_t seed = 0;
    std::string dimension = "group";
    std::vector<SimGroup> groups;  // empty: one group "all"
    ScoreModel model{ScoreDensity::uniform(), Calibration::identity()};
    SdtParams sdt;
    std::size_t labelers = 1;
    InputFormat format = InputFormat::Csv;
};

struct SimulateResult {
    std::string data;
    std::size_t records = 0;
};

inline SimulateResult run_simulate(const SimulateArgs& args) {
    if (args.n == 0) throw InputError("simulate: n must be at least 1");
    if (args.format == InputFormat::Auto) throw InputError("simulate: output format must be csv or jsonl");
    std::vector<SimGroup> groups = args.groups;
    if (groups.empty()) groups.push_back({"all", std::nullopt, std::nullopt});
    const bool jsonl = args.format == InputFormat::Jsonl;

    SimulateResult out;
    if (args.kind == SimulateArgs::Kind::Scored) {
        std::vector<DecisionRecord> all;
        for (const auto& g : groups) {
            if (g.sdt) throw InputError("simulate: SDT parameters given for a scored dataset");
            const GroupKey key{{args.dimension, g.value}};
            ScoreModel model = args.model;
            if (g.calibration) model.calibration = *g.calibration;
            auto part = gen_scored(model, args.n, key, group_seed(Seed{args.seed}, key));
            all.insert(all.end(), part.begin(), part.end());
        }
        out.records = all.size();
        out.data = jsonl ? decisions_to_jsonl(all) : decisions_to_csv(all);
    } else {
        SdtWorld world{args.sdt, {}};
        std::vector<LabelRecord> all;
        for (const auto& g : groups) {
            if (g.calibration) throw InputError("simulate: calibration given for a label dataset");
            const GroupKey key{{args.dimension, g.value}};
            if (g.sdt) world.overrides[key] = *g.sdt;
            auto part = gen_labels(world, args.n, key, group_seed(Seed{args.seed}, key), args.labelers);
            all.insert(all.end(), part.begin(), part.end());
        }
        out.records = all.size();
        out.data = jsonl ? labels_to_jsonl(all) : labels_to_csv(all);
    }
    return out;
}

inline std::string render(const ReportDocument& doc, ReportFormat format) {
    if (format == ReportFormat::Markdown) return to_markdown(doc);
    return doc.to_json().dump(2) + "\n";
}

}  // namespace fairaudit::cli
