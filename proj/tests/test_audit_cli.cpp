#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "fairaudit/audit_cli.hpp"
#include "schema_check.hpp"

using namespace fairaudit;
using namespace fairaudit::cli;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fairaudit_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path write(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
};

const schema_check::Validator& validator() {
    static const schema_check::Validator v(schema_check::load(FAIRAUDIT_SCHEMA_PATH));
    return v;
}

void check_schema(const ReportDocument& doc) {
    const auto errors = validator().validate(schema_check::json::parse(doc.to_json().dump()));
    for (const auto& e : errors) UNSCOPED_INFO(e);
    CHECK(errors.empty());
}

bool has_warning(const ReportDocument& doc, const std::string& needle) {
    for (const auto& w : doc.warnings)
        if (w.find(needle) != std::string::npos) return true;
    return false;
}

const Json* group_entry(const ReportDocument& doc, const std::string& name) {
    for (const auto& g : doc.groups)
        if (g["group"] == name) return &g;
    return nullptr;
}

OutputOptions no_timestamp() {
    OutputOptions o;
    o.timestamp = false;
    return o;
}

fs::path scored_file(const TempDir& dir, std::size_t n, const std::string& groups = "") {
    SimulateArgs s;
    s.n = n;
    s.seed = 11;
    if (!groups.empty())
        for (const auto& g : fairaudit::cli::detail::split(groups, ';')) s.groups.push_back(parse_sim_group(g, false));
    return dir.write("scored.csv", run_simulate(s).data);
}

fs::path label_file(const TempDir& dir, std::size_t n, const SdtParams& p, std::size_t labelers = 1) {
    SimulateArgs s;
    s.kind = SimulateArgs::Kind::Labels;
    s.n = n;
    s.seed = 12;
    s.sdt = p;
    s.labelers = labelers;
    s.groups = {parse_sim_group("a", true), parse_sim_group("b", true)};
    return dir.write("labels.csv", run_simulate(s).data);
}

}  // namespace

TEST_CASE("argument parsers", "[parse]") {
    CHECK(parse_report_format("md") == ReportFormat::Markdown);
    CHECK_THROWS_AS(parse_report_format("xml"), InputError);
    CHECK(parse_correction("none") == CorrectionPolicy::None);
    CHECK(parse_correction(to_string(CorrectionPolicy::HalfCount)) == CorrectionPolicy::HalfCount);
    CHECK(parse_label_mode("group-labeler") == LabelGrouping::Mode::ByGroupAndLabeler);
    CHECK_THROWS_AS(parse_label_mode("item"), InputError);

    CHECK(parse_density("exp:8").pdf(0.0) > parse_density("uniform").pdf(0.0));
    CHECK_THROWS_AS(parse_density("exp"), InputError);
    CHECK_THROWS_AS(parse_density("beta:1"), InputError);
    CHECK_THROWS_AS(parse_density("gamma:1,2"), InputError);
    CHECK(parse_calibration("affine:1,-0.1")(0.5) == 0.4);
    CHECK(parse_calibration("logistic:4,0.3")(0.3) == 0.5);
    CHECK_THROWS_AS(parse_calibration("affine:x,1"), InputError);
    const auto sdt = parse_sdt("0.2,2,1");
    CHECK(sdt.prevalence == 0.2);
    CHECK(sdt.separation == 2.0);
    CHECK(sdt.criterion == 1.0);
    CHECK_THROWS_AS(parse_sdt("0.2,2"), InputError);

    const std::vector<std::string> one{"group"};
    CHECK(parse_group_arg("A", one) == GroupKey{{"group", "A"}});
    CHECK(parse_group_arg("region=x", one) == GroupKey{{"region", "x"}});
    CHECK_THROWS_AS(parse_group_arg("A", std::vector<std::string>{"p", "c"}), InputError);
    CHECK(parse_pair("A,B", one).second == GroupKey{{"group", "B"}});
    CHECK_THROWS_AS(parse_pair("A", one), InputError);

    const auto sweep = parse_sweep("0.1:0.3:0.1").thresholds();
    REQUIRE(sweep.size() == 3);
    CHECK_THAT(sweep.back(), WithinAbs(0.3, 1e-12));
    CHECK_THROWS_AS(parse_sweep("0.5:0.1:0.1"), InputError);
    CHECK_THROWS_AS(parse_sweep("0:1:0"), InputError);
}

TEST_CASE("simulate is deterministic and per-group seeded", "[simulate]") {
    SimulateArgs s;
    s.n = 200;
    s.seed = 3;
    s.groups = {parse_sim_group("A", false), parse_sim_group("B=affine:1,-0.1", false)};
    const auto a = run_simulate(s);
    CHECK(a.records == 400);
    CHECK(run_simulate(s).data == a.data);
    // Adding a group leaves existing groups' rows unchanged.
    s.groups.push_back(parse_sim_group("C", false));
    CHECK(run_simulate(s).data.starts_with(a.data));

    s.format = InputFormat::Jsonl;
    CHECK(run_simulate(s).data.front() == '{');
    CHECK_THROWS_AS(parse_sim_group("B=0.2,1,0", false), InputError);
    CHECK_THROWS_AS(parse_sim_group("=uniform", false), InputError);
}

TEST_CASE("model audit on calibrated data recovers the threshold", "[model-audit]") {
    TempDir dir;
    ModelAuditArgs args;
    args.input = scored_file(dir, 50000, "A;B");
    args.threshold = 0.8;
    args.window = WindowPolicy::fixed(0.1);
    args.bootstrap.replicates = 100;
    const auto run = run_model_audit(args, nullptr);
    CHECK(run.exit_code == 0);
    REQUIRE(run.report.groups.size() == 2);
    for (const auto& g : run.report.groups) {
        CHECK(g["status"] == "ok");
        CHECK_THAT(g["estimate"]["implied_threshold"].get<double>(), WithinAbs(0.8, 0.03));
        CHECK(g["estimate"]["interval"]["lower"].get<double>() <= g["estimate"]["implied_threshold"].get<double>());
        CHECK_THAT(g["cost_ratio"].get<double>(), WithinAbs(0.25, 0.06));
    }
    CHECK(run.report.command == "model-audit");
    CHECK(run.report.input["rows"] == 100000);
    CHECK(run.report.input["digest"].get<std::string>().starts_with("sha256:"));
    CHECK_FALSE(run.report.generated_at.empty());
    check_schema(run.report);
    CHECK(run.table.starts_with("group,threshold,status,implied_threshold"));
}

TEST_CASE("reports are byte-identical across runs without a timestamp", "[model-audit][determinism]") {
    TempDir dir;
    ModelAuditArgs args;
    args.input = scored_file(dir, 20000, "A;B=affine:1,-0.1");
    args.threshold = 0.7;
    args.bootstrap.replicates = 100;
    args.bootstrap.seed = 9;
    const auto out = no_timestamp();
    const auto a = run_model_audit(args, &out);
    const auto b = run_model_audit(args, &out);
    CHECK(a.report.generated_at.empty());
    CHECK(render(a.report, ReportFormat::Json) == render(b.report, ReportFormat::Json));
    CHECK(a.table == b.table);
    args.bootstrap.seed = 10;
    CHECK(render(run_model_audit(args, &out).report, ReportFormat::Json) != render(a.report, ReportFormat::Json));
}

TEST_CASE("model audit sweep and skipped groups", "[model-audit]") {
    TempDir dir;
    const auto p = dir.write("s.csv", "score,outcome,group\n0.5,1,A\n0.52,0,A\n0.48,1,A\n0.51,0,A\n0.1,0,B\n");
    ModelAuditArgs args;
    args.input = p;
    args.threshold = 0.5;
    args.window = WindowPolicy::fixed(0.1);
    args.bootstrap.replicates = 0;
    args.sweep = parse_sweep("0.45:0.55:0.05");
    const auto run = run_model_audit(args, nullptr);
    CHECK(run.exit_code == 0);
    CHECK(group_entry(run.report, "group=B")->at("status") == "skipped");
    CHECK(has_warning(run.report, "group=B: skipped (degenerate)"));
    check_schema(run.report);
    // header + 3 thresholds x 2 groups
    CHECK(std::count(run.table.begin(), run.table.end(), '\n') == 7);

    // Every group skipped: degenerate exit code.
    args.input = dir.write("only_b.csv", "score,outcome,group\n0.1,0,B\n");
    args.sweep.reset();
    CHECK(run_model_audit(args, nullptr).exit_code == 3);
}

TEST_CASE("model audit warnings are verbatim", "[model-audit][warnings]") {
    TempDir dir;
    // Steep line: intercept outside [0, 1]. Identical scores: degenerate design.
    const auto p = dir.write("w.csv", "score,outcome,group\n0.6,1,steep\n0.7,0,steep\n0.4,1,flat\n0.4,0,flat\n"
                                      "0.4,0,flat\n0.4,0,flat\n");
    ModelAuditArgs args;
    args.input = p;
    args.threshold = 0.5;
    args.window = WindowPolicy::fixed(10.0);
    args.bootstrap.replicates = 0;
    const auto run = run_model_audit(args, nullptr);
    CHECK(has_warning(run.report, "group=steep: clamped: intercept"));
    CHECK(has_warning(run.report, "group=steep: cost_ratio undefined"));
    CHECK(has_warning(run.report, "group=flat: degenerate: all windowed scores identical"));
    CHECK(group_entry(run.report, "group=steep")->at("estimate")["clamped"] == true);
    CHECK(group_entry(run.report, "group=steep")->at("cost_ratio").is_null());
    check_schema(run.report);
}

TEST_CASE("label audit recovers the closed-form cost ratio", "[label-audit]") {
    TempDir dir;
    LabelAuditArgs args;
    args.input = label_file(dir, 100000, SdtParams{0.2, 2.0, 1.0}, 2);
    args.bootstrap.replicates = 100;
    const auto run = run_label_audit(args, nullptr);
    CHECK(run.exit_code == 0);
    REQUIRE(run.report.groups.size() == 2);
    for (const auto& g : run.report.groups) {
        CHECK_THAT(g["cost_ratio"].get<double>(), WithinAbs(4.0, 0.3));
        CHECK_THAT(g["estimate"]["criterion"].get<double>(), WithinAbs(1.0, 0.03));
        CHECK(g["estimate"]["interval"].is_object());
    }
    check_schema(run.report);

    args.grouping = LabelGrouping{LabelGrouping::Mode::ByGroupAndLabeler, {}};
    args.bootstrap.replicates = 0;
    const auto by = run_label_audit(args, nullptr);
    CHECK(by.report.groups.size() == 4);
    CHECK(group_entry(by.report, "group=b|labeler=labeler-1") != nullptr);
    check_schema(by.report);
}

TEST_CASE("label audit warnings are verbatim", "[label-audit][warnings]") {
    TempDir dir;
    std::string csv = "label,truth,labeler,item,group\n";
    // group p: no false positives among 40 negatives, only 5 positives
    for (int i = 0; i < 40; ++i) csv += "0,0,j,n" + std::to_string(i) + ",p\n";
    for (int i = 0; i < 5; ++i) csv += (i < 3 ? "1" : "0") + std::string(",1,j,y") + std::to_string(i) + ",p\n";
    // group q: labels mostly inverted
    for (int i = 0; i < 40; ++i) csv += std::string(i < 30 ? "1" : "0") + ",0,j,qn" + std::to_string(i) + ",q\n";
    for (int i = 0; i < 40; ++i) csv += std::string(i < 30 ? "0" : "1") + ",1,j,qy" + std::to_string(i) + ",q\n";
    // group r: no positives
    for (int i = 0; i < 10; ++i) csv += "0,0,j,r" + std::to_string(i) + ",r\n";
    LabelAuditArgs args;
    args.input = dir.write("w.csv", csv);
    args.bootstrap.replicates = 0;
    const auto run = run_label_audit(args, nullptr);
    CHECK(run.exit_code == 0);
    CHECK(has_warning(run.report, "group=p: correction_applied"));
    CHECK(has_warning(run.report, "group=p: low_confidence: 5 positives, 40 negatives"));
    CHECK(has_warning(run.report, "group=q: anti_correlated"));
    CHECK(has_warning(run.report, "group=r: skipped (degenerate)"));
    check_schema(run.report);

    args.correction = CorrectionPolicy::None;
    const auto raw = run_label_audit(args, nullptr);
    CHECK(has_warning(raw.report, "group=p: skipped"));
}

TEST_CASE("compare flags a shifted group", "[compare]") {
    TempDir dir;
    CompareArgs args;
    args.input = scored_file(dir, 50000, "A;B=affine:1,-0.1");
    args.threshold = 0.8;
    args.window = WindowPolicy::fixed(0.1);
    args.bootstrap.replicates = 100;
    args.pairs = {"A,B"};
    const auto out = no_timestamp();
    const auto run = run_compare(args, &out);
    CHECK(run.exit_code == 0);
    REQUIRE(run.report.comparisons.size() == 1);
    const auto& c = run.report.comparisons[0];
    CHECK(c["status"] == "ok");
    CHECK(c["excludes_zero"] == true);
    // B's outcomes run 0.1 below its scores, so its implied threshold is lower.
    CHECK_THAT(c["difference"].get<double>(), WithinAbs(0.1, 0.04));
    CHECK(run.report.groups.size() == 2);
    check_schema(run.report);
    CHECK(render(run.report, ReportFormat::Json) == render(run_compare(args, &out).report, ReportFormat::Json));

    args.pairs = {"A,Z"};
    const auto missing = run_compare(args, &out);
    CHECK(missing.exit_code == 2);
    CHECK(missing.report.comparisons[0]["status"] == "error");
    check_schema(missing.report);
}

TEST_CASE("compare on labels", "[compare]") {
    TempDir dir;
    SimulateArgs s;
    s.kind = SimulateArgs::Kind::Labels;
    s.n = 20000;
    s.seed = 5;
    s.sdt = SdtParams{0.3, 1.5, 0.75};
    s.groups = {parse_sim_group("a", true), parse_sim_group("b=0.3,1.5,1.25", true)};
    CompareArgs args;
    args.mode = CompareArgs::Mode::Labels;
    args.input = dir.write("l.csv", run_simulate(s).data);
    args.metric = Metric::Criterion;
    args.bootstrap.replicates = 100;
    const auto run = run_compare(args, nullptr);
    REQUIRE(run.report.comparisons.size() == 1);
    CHECK_THAT(run.report.comparisons[0]["difference"].get<double>(), WithinAbs(-0.5, 0.08));
    CHECK(run.report.comparisons[0]["excludes_zero"] == true);
    check_schema(run.report);
}

TEST_CASE("markdown mirrors the JSON report", "[render]") {
    TempDir dir;
    LabelAuditArgs args;
    args.input = label_file(dir, 5000, SdtParams{0.3, 1.0, 0.5});
    args.bootstrap.replicates = 0;
    const auto run = run_label_audit(args, nullptr);
    const auto md = render(run.report, ReportFormat::Markdown);
    CHECK(md.starts_with("# fairaudit label-audit report"));
    for (const auto& g : run.report.groups) {
        CHECK(md.find("### " + g["group"].get<std::string>()) != std::string::npos);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", g["estimate"]["implied_threshold"].get<double>());
        CHECK(md.find(std::string("| implied_threshold | ") + buf + " |") != std::string::npos);
    }
    CHECK(md.find("## Warnings") != std::string::npos);
    const auto json = render(run.report, ReportFormat::Json);
    CHECK(Json::parse(json)["tool"] == "fairaudit");
    CHECK(json.ends_with("}\n"));
}

TEST_CASE("input errors surface as InputError", "[errors]") {
    TempDir dir;
    ModelAuditArgs args;
    args.input = dir.path / "nope.csv";
    CHECK_THROWS_AS(run_model_audit(args, nullptr), InputError);
    args.input = dir.write("bad.csv", "score,outcome\n0.5,7\n");
    try {
        run_model_audit(args, nullptr);
        FAIL("expected an input error");
    } catch (const Error& e) {
        CHECK(exit_code(e.kind()) == 2);
    }
    args.input = scored_file(dir, 100);
    args.group_by = {"region"};
    try {
        run_model_audit(args, nullptr);
        FAIL("expected an unknown dimension");
    } catch (const Error& e) {
        CHECK(exit_code(e.kind()) == 2);
    }
}
