// emix — partition planning, experiment execution, trace comparison, and
// report rendering for the partitioned NoC emulator model.
//
// Exit codes: 0 ok, 1 validation/usage/diff, 3 timeout, 4 link failure,
// 5 peer unreachable, 6 manifest mismatch.
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "emix/config.hpp"
#include "emix/dist.hpp"
#include "emix/log.hpp"
#include "emix/manifest.hpp"
#include "emix/runtime.hpp"
#include "emix/trace.hpp"

using namespace emix;

namespace {

int cmd_partition(const std::string& config_path, const std::string& out_path,
                  uint16_t base_port) {
    ExperimentConfig cfg;
    try {
        cfg = ExperimentConfig::from_json_file(config_path);
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return 1;
    }
    ExperimentPlan plan = ExperimentPlan::build(cfg);
    Manifest m = Manifest::from_plan(plan, base_port);
    std::ofstream os(out_path);
    if (!os) {
        std::cerr << "emix: cannot write " << out_path << "\n";
        return 1;
    }
    os << m.to_json_string() << "\n";
    std::cout << m.human_summary(plan);
    std::cout << "manifest written to " << out_path << "\n";
    return 0;
}

int status_to_exit(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return 0;
        case RunStatus::Timeout: return 3;
        case RunStatus::LinkFailure: return 4;
    }
    return 1;
}

int cmd_run(const std::string& config_path, const std::string& mode,
            std::optional<uint64_t> seed, std::optional<int> node,
            bool as_switch, const std::string& manifest_path,
            uint16_t base_port, bool check) {
    try {
        if (mode == "mono" || mode == "part") {
            ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
            if (seed) cfg.apply_seed_override(*seed);
            cfg.validate();
            ExperimentPlan plan = ExperimentPlan::build(cfg);
            RunOptions opt;
            opt.check_invariants = check;
            opt.validate_streams = check;
            RunResult r = mode == "mono" ? run_monolithic(plan, opt)
                                         : run_partitioned(plan, opt);
            write_run_outputs(plan, r);
            std::cout << r.report.render_table();
            if (check)
                std::cout << "stream violations     " << r.stream_violations
                          << "\ncredit violations     " << r.credit_violations
                          << "\n";
            return status_to_exit(r.report.status);
        }
        if (mode == "dist") {
            Manifest m;
            if (!manifest_path.empty()) {
                m = Manifest::from_json_file(manifest_path);
            } else {
                ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
                if (seed) cfg.apply_seed_override(*seed);
                cfg.validate();
                m = Manifest::from_plan(ExperimentPlan::build(cfg), base_port);
            }
            if (seed && !manifest_path.empty())
                m.config.apply_seed_override(*seed);
            m.config.validate();
            if (!as_switch && !node) {
                std::cerr << "emix: dist mode needs --node N or --switch\n";
                return 1;
            }
            DistExit e = as_switch
                             ? run_distributed_switch(m)
                             : run_distributed_node(m, uint16_t(*node));
            if (e != DistExit::Ok)
                std::cerr << "emix: distributed run ended with code " << int(e)
                          << "\n";
            return int(e);
        }
        std::cerr << "emix: unknown mode \"" << mode << "\"\n";
        return 1;
    } catch (const ManifestMismatch& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return int(DistExit::ManifestMismatch);
    } catch (const PeerUnreachable& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return int(DistExit::PeerUnreachable);
    } catch (const Error& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return 1;
    }
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
    try {
        TraceBuffer a = read_trace_file(a_path);
        TraceBuffer b = read_trace_file(b_path);
        CompareResult r = compare_traces(a, b);
        std::cout << r.summary() << (r.equal ? "\n" : "");
        return r.equal ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return 2;
    }
}

int cmd_report(const std::string& path, const std::string& format) {
    try {
        std::ifstream is(path);
        if (!is) throw Error("cannot read report file " + path);
        std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
        MetricsReport r = MetricsReport::from_json_string(text);
        std::cout << (format == "csv" ? r.render_csv() : r.render_table());
        return 0;
    } catch (const Error& e) {
        std::cerr << "emix: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "emix: bad report file: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emix — partitioned many-core NoC emulation model"};
    app.require_subcommand(1);

    auto* part = app.add_subcommand("partition", "plan a partition, write the manifest");
    std::string part_config, part_out = "manifest.json";
    uint16_t part_port = 9700;
    part->add_option("config", part_config, "experiment config (json)")->required();
    part->add_option("-o,--output", part_out, "manifest output path");
    part->add_option("--base-port", part_port, "first TCP port for endpoints");

    auto* run = app.add_subcommand("run", "execute an experiment");
    std::string run_config, run_mode = "mono", run_manifest;
    std::optional<uint64_t> run_seed;
    std::optional<int> run_node;
    bool run_switch = false, run_check = false;
    uint16_t run_port = 9700;
    run->add_option("config", run_config, "experiment config (json)")->required();
    run->add_option("--mode", run_mode, "mono | part | dist")->required();
    run->add_option("--seed", run_seed, "master seed override (wins over config)");
    run->add_option("--node", run_node, "dist: node index for this process");
    run->add_flag("--switch", run_switch, "dist: run the switch role");
    run->add_option("--manifest", run_manifest, "dist: manifest file (else derived)");
    run->add_option("--base-port", run_port, "dist: base port when deriving");
    run->add_flag("--check", run_check, "enable invariant checking (slower)");

    auto* cmp = app.add_subcommand("compare", "compare two delivery traces");
    std::string cmp_a, cmp_b;
    cmp->add_option("a", cmp_a, "trace A")->required();
    cmp->add_option("b", cmp_b, "trace B")->required();

    auto* rep = app.add_subcommand("report", "render a metrics report");
    std::string rep_path, rep_format = "table";
    rep->add_option("report", rep_path, "report file (json)")->required();
    rep->add_option("--format", rep_format, "table | csv")
        ->check(CLI::IsMember({"table", "csv"}));

    CLI11_PARSE(app, argc, argv);

    if (part->parsed()) return cmd_partition(part_config, part_out, part_port);
    if (run->parsed())
        return cmd_run(run_config, run_mode, run_seed, run_node, run_switch,
                       run_manifest, run_port, run_check);
    if (cmp->parsed()) return cmd_compare(cmp_a, cmp_b);
    if (rep->parsed()) return cmd_report(rep_path, rep_format);
    return 1;
}
