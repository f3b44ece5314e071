// fairaudit command-line front end.
//
//   fairaudit simulate    --kind scored --n 100000 --groups 'A;B=affine:1,-0.1' --out data.csv
//   fairaudit model-audit --input data.csv --threshold 0.8 --out report.json
//   fairaudit label-audit --input labels.csv --correction half-count
//   fairaudit compare     --input data.csv --threshold 0.8 --metric implied_threshold
//
// Options may also come from a TOML/INI file given with --config; flags on
// the command line win.

#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fairaudit/fairaudit.hpp"

namespace fa = fairaudit;
namespace cli = fairaudit::cli;

namespace {

struct Common {
    std::string input;
    std::string out;
    std::string format = "json";
    std::string table;
    bool no_timestamp = false;
    std::vector<std::string> columns;  // group columns in the file
    std::string null_policy = "reject-row";
    double max_reject = 0.01;
    std::string input_format = "auto";
    std::size_t replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct Window {
    std::string mode = "adaptive";
    double halfwidth = 0.1;
    double min_effective_n = 200.0;
    double max_halfwidth = std::numeric_limits<double>::infinity();
};

void add_io(CLI::App* app, Common& c, bool report = true) {
    app->add_option("-i,--input", c.input, "Input file (.csv, or .jsonl for line-delimited records)")->required();
    app->add_option("--columns", c.columns, "Group dimension columns (default: every non-reserved column)")
        ->delimiter(',');
    app->add_option("--null-policy", c.null_policy, "reject-row | fail")
        ->check(CLI::IsMember({"reject-row", "fail"}));
    app->add_option("--max-reject", c.max_reject, "Largest tolerated fraction of rejected rows");
    app->add_option("--input-format", c.input_format, "auto | csv | jsonl")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    if (report) {
        app->add_option("-o,--out", c.out, "Report path (default: stdout)");
        app->add_option("--format", c.format, "json | markdown")->check(CLI::IsMember({"json", "markdown"}));
        app->add_option("--table", c.table, "Also write a tidy CSV table here");
        app->add_flag("--no-timestamp", c.no_timestamp, "Leave generated_at empty");
    }
}

void add_bootstrap(CLI::App* app, Common& c, std::size_t default_replicates) {
    c.replicates = default_replicates;
    app->add_option("--replicates", c.replicates, "Bootstrap replicates (0 disables intervals where optional)");
    app->add_option("--level", c.level, "Interval level");
    app->add_option("--seed", c.seed, "Seed for all resampling");
}

void add_window(CLI::App* app, Window& w) {
    app->add_option("--window", w.mode, "fixed | adaptive")->check(CLI::IsMember({"fixed", "adaptive"}));
    app->add_option("--halfwidth", w.halfwidth, "Fixed window halfwidth");
    app->add_option("--min-effective-n", w.min_effective_n, "Adaptive window target effective sample size");
    app->add_option("--max-halfwidth", w.max_halfwidth, "Adaptive window halfwidth cap");
}

fa::IngestSchema schema_of(const Common& c) {
    fa::IngestSchema s;
    s.group_columns = c.columns;
    s.null_policy = c.null_policy == "fail" ? fa::NullPolicy::Fail : fa::NullPolicy::RejectRow;
    s.max_rejection_fraction = c.max_reject;
    s.format = c.input_format == "csv"     ? fa::InputFormat::Csv
               : c.input_format == "jsonl" ? fa::InputFormat::Jsonl
                                           : fa::InputFormat::Auto;
    return s;
}

fa::WindowPolicy window_of(const Window& w) {
    if (w.mode == "fixed") return fa::WindowPolicy::fixed(w.halfwidth);
    return fa::WindowPolicy::adaptive(w.min_effective_n, w.max_halfwidth);
}

cli::BootstrapArgs bootstrap_of(const Common& c) { return {c.replicates, c.level, c.seed}; }

cli::OutputOptions output_of(const Common& c) {
    return {c.out, cli::parse_report_format(c.format), c.table, !c.no_timestamp};
}

int emit(const cli::RunResult& run, const cli::OutputOptions& out) {
    const std::string text = cli::render(run.report, out.format);
    if (out.report.empty()) std::cout << text;
    else fa::write_file_atomic(out.report, text);
    if (!out.table.empty()) fa::write_file_atomic(out.table, run.table);
    for (const auto& w : run.report.warnings) std::cerr << "warning: " << w << "\n";
    return run.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audit the decision thresholds implied by model scores and human labels"};
    app.set_version_flag("--version", std::string(fa::kToolVersion));
    app.set_config("--config", "", "Read options from a TOML/INI file");
    app.require_subcommand(1);

    // model-audit
    Common mc;
    Window mw;
    double m_threshold = 0.5;
    std::vector<std::string> m_group_by;
    std::string m_sweep;
    auto* model = app.add_subcommand("model-audit", "Implied threshold per group from scores and outcomes");
    add_io(model, mc);
    add_bootstrap(model, mc, 0);
    add_window(model, mw);
    model->add_option("-t,--threshold", m_threshold, "Decision threshold on the score")->required();
    model->add_option("--group-by", m_group_by, "Dimensions to group by")->delimiter(',');
    model->add_option("--sweep", m_sweep, "Threshold sweep lo:hi:step for the tidy table");

    // label-audit
    Common lc;
    std::string l_mode = "group";
    std::vector<std::string> l_group_by;
    std::string l_correction = "half-count";
    std::size_t l_min_pos = 10, l_min_neg = 10;
    auto* label = app.add_subcommand("label-audit", "SDT criterion, separation and implied cost ratio per group");
    add_io(label, lc);
    add_bootstrap(label, lc, 0);
    label->add_option("--group-mode", l_mode, "group | labeler | group-labeler")
        ->check(CLI::IsMember({"group", "labeler", "group-labeler"}));
    label->add_option("--group-by", l_group_by, "Group dimensions to keep")->delimiter(',');
    label->add_option("--correction", l_correction, "none | half-count")
        ->check(CLI::IsMember({"none", "half-count"}));
    label->add_option("--min-positives", l_min_pos, "Below this many truth positives a group is low_confidence");
    label->add_option("--min-negatives", l_min_neg, "Below this many truth negatives a group is low_confidence");

    // compare
    Common cc;
    Window cw;
    std::string c_mode = "model";
    double c_threshold = 0.5;
    std::vector<std::string> c_group_by;
    std::string c_group_mode = "group";
    std::string c_correction = "half-count";
    std::string c_metric = "implied_threshold";
    std::vector<std::string> c_pairs;
    auto* compare = app.add_subcommand("compare", "Bootstrap intervals on between-group differences");
    add_io(compare, cc);
    add_bootstrap(compare, cc, 1000);
    add_window(compare, cw);
    compare->add_option("--mode", c_mode, "model | labels")->check(CLI::IsMember({"model", "labels"}));
    compare->add_option("-t,--threshold", c_threshold, "Decision threshold (model mode)");
    compare->add_option("--group-by", c_group_by, "Dimensions to group by")->delimiter(',');
    compare->add_option("--group-mode", c_group_mode, "group | labeler | group-labeler (labels mode)")
        ->check(CLI::IsMember({"group", "labeler", "group-labeler"}));
    compare->add_option("--correction", c_correction, "none | half-count")
        ->check(CLI::IsMember({"none", "half-count"}));
    compare->add_option("--metric", c_metric, "implied_threshold | cost_ratio | criterion | separation")
        ->check(CLI::IsMember({"implied_threshold", "cost_ratio", "criterion", "separation"}));
    compare->add_option("--pair", c_pairs, "GROUP_A,GROUP_B (repeatable; default: all pairs)");

    // simulate
    std::string s_kind = "scored";
    std::size_t s_n = 1000;
    std::uint64_t s_seed = 0;
    std::string s_dimension = "group";
    std::vector<std::string> s_groups;
    std::string s_density = "uniform";
    std::string s_calibration = "identity";
    std::string s_sdt = "0.5,1,0.5";
    std::size_t s_labelers = 1;
    std::string s_out;
    std::string s_format = "csv";
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic decision or label dataset");
    simulate->add_option("--kind", s_kind, "scored | labels")->check(CLI::IsMember({"scored", "labels"}));
    simulate->add_option("-n,--n", s_n, "Records per group");
    simulate->add_option("--seed", s_seed, "Generator seed");
    simulate->add_option("--dimension", s_dimension, "Name of the group column");
    simulate->add_option("--groups", s_groups, "VALUE[=FORM] per group; FORM overrides calibration or SDT params")
        ->delimiter(';');
    simulate->add_option("--density", s_density, "uniform | exp:RATE | beta:A,B");
    simulate->add_option("--calibration", s_calibration, "identity | affine:SLOPE,INTERCEPT | logistic:SLOPE,CENTRE");
    simulate->add_option("--sdt", s_sdt, "prevalence,separation,criterion");
    simulate->add_option("--labelers", s_labelers, "Labelers per group, assigned round-robin");
    simulate->add_option("-o,--out", s_out, "Output file (default: stdout)");
    simulate->add_option("--format", s_format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help and version are reported as "errors" with exit code 0
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fa::exit_code(fa::ErrorKind::Input);
    }

    try {
        if (*model) {
            cli::ModelAuditArgs a;
            a.input = mc.input;
            a.schema = schema_of(mc);
            a.threshold = m_threshold;
            a.group_by = m_group_by;
            a.window = window_of(mw);
            a.bootstrap = bootstrap_of(mc);
            if (!m_sweep.empty()) a.sweep = cli::parse_sweep(m_sweep);
            const auto out = output_of(mc);
            return emit(cli::run_model_audit(a, &out), out);
        }
        if (*label) {
            cli::LabelAuditArgs a;
            a.input = lc.input;
            a.schema = schema_of(lc);
            a.grouping = {cli::parse_label_mode(l_mode), l_group_by};
            a.correction = cli::parse_correction(l_correction);
            a.min_counts = {l_min_pos, l_min_neg};
            a.bootstrap = bootstrap_of(lc);
            const auto out = output_of(lc);
            return emit(cli::run_label_audit(a, &out), out);
        }
        if (*compare) {
            cli::CompareArgs a;
            a.mode = c_mode == "labels" ? cli::CompareArgs::Mode::Labels : cli::CompareArgs::Mode::Model;
            a.input = cc.input;
            a.schema = schema_of(cc);
            a.threshold = c_threshold;
            a.group_by = c_group_by;
            a.window = window_of(cw);
            a.label_grouping = {cli::parse_label_mode(c_group_mode), c_group_by};
            a.correction = cli::parse_correction(c_correction);
            a.metric = fa::parse_metric(c_metric);
            a.pairs = c_pairs;
            a.bootstrap = bootstrap_of(cc);
            const auto out = output_of(cc);
            return emit(cli::run_compare(a, &out), out);
        }
        if (*simulate) {
            cli::SimulateArgs a;
            const bool labels = s_kind == "labels";
            a.kind = labels ? cli::SimulateArgs::Kind::Labels : cli::SimulateArgs::Kind::Scored;
            a.n = s_n;
            a.seed = s_seed;
            a.dimension = s_dimension;
            for (const auto& g : s_groups) a.groups.push_back(cli::parse_sim_group(g, labels));
            a.model = {cli::parse_density(s_density), cli::parse_calibration(s_calibration)};
            a.sdt = cli::parse_sdt(s_sdt);
            a.labelers = s_labelers;
            a.format = s_format == "jsonl" ? fa::InputFormat::Jsonl : fa::InputFormat::Csv;
            const auto sim = cli::run_simulate(a);
            if (s_out.empty()) std::cout << sim.data;
            else fa::write_file_atomic(s_out, sim.data);
            std::cerr << "simulate: wrote " << sim.records << " records\n";
            return 0;
        }
    } catch (const fa::Error& e) {
        std::cerr << "error (" << fa::to_string(e.kind()) << "): " << e.what() << "\n";
        return fa::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
