#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "slicewise/backends.hpp"
#include "slicewise/errors.hpp"
#include "slicewise/gpuplan.hpp"
#include "slicewise/netplan.hpp"
#include "slicewise/resmodel.hpp"
#include "slicewise/runner.hpp"
#include "slicewise/simkernel.hpp"
#include "slicewise/timefmt.hpp"
#include "slicewise/workflow.hpp"

namespace {

using namespace slicewise;

struct PlanArgs {
    std::string dataset;
    std::string model;
    std::string mode = "cpu";
    int gpus = 1;
    std::string inventory;
    std::int64_t overhead_s = 60;
    std::string out;
};

int cmd_plan(const PlanArgs& args, bool verbose) {
    const auto manifest = load_dataset_manifest(args.dataset);
    const auto model = load_model(args.model);
    const PlanMode mode = args.mode == "cpu" ? PlanMode::cpu_slice : PlanMode::gpu_group;

    int groups = args.gpus;
    if (!args.inventory.empty()) {
        groups = logical_devices(load_gpu_inventory(args.inventory));
        if (groups < 1)
            throw ValidationError("GPU inventory '" + args.inventory +
                                  "' yields zero logical devices");
        if (verbose) std::cerr << "inventory provides " << groups << " logical devices\n";
    }

    std::error_code ec;
    std::filesystem::create_directories(args.out, ec);
    if (ec) throw IoError("cannot create output directory " + args.out + ": " + ec.message());

    for (const auto& subject : manifest.subjects) {
        std::vector<std::string> warnings;
        auto plan = plan_subject_workflow(subject, mode, model, groups, args.overhead_s, {},
                                          &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        auto violations = validate_plan(plan, static_cast<int>(subject.slices.size()));
        if (!violations.empty())
            throw ValidationError("generated plan for '" + subject.id +
                                  "' failed validation: " + violations.front());
        save_plan(plan, std::filesystem::path(args.out) / (subject.id + ".plan.json"));
    }
    std::cout << "wrote " << manifest.subjects.size() << " plan(s) to " << args.out << '\n';
    return 0;
}

struct EmitArgs {
    std::string plan;
    std::string backend = "auto";
    std::string partition;
    std::string outdir;
};

int cmd_emit(const EmitArgs& args, bool verbose) {
    const auto plan = load_plan(args.plan);
    BackendKind kind;
    if (args.backend == "auto") {
        kind = detect_backend(capture_backend_env());
        if (verbose) std::cerr << "detected backend: " << to_string(kind) << '\n';
    } else {
        kind = parse_backend(args.backend);
    }
    auto files = emit_submission_scripts(plan, kind, args.partition, args.outdir);
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
}

struct RunLocalArgs {
    std::string plan;
    int cores = 1;
    std::int64_t mem_mb = 1024;
};

int cmd_run_local(const RunLocalArgs& args) {
    const auto plan = load_plan(args.plan);
    const auto report = run_local(plan, args.cores, args.mem_mb);
    std::printf("%-28s %10s %10s %6s\n", "task", "start_s", "end_s", "exit");
    for (const auto& r : report.records)
        std::printf("%-28s %10.3f %10.3f %6d\n", r.task_id.c_str(), r.start_s, r.end_s,
                    r.exit_code);
    std::printf("status: %s\n", to_string(report.status).c_str());
    std::printf("peak cores: %d, peak mem: %lld MB\n", report.peak_cores,
                static_cast<long long>(report.peak_mem_mb));
    return report.status == RunStatus::complete ? 0 : 2;
}

struct CalibrateArgs {
    std::string samples;
    std::string out;
    double safety = 1.2;
};

int cmd_calibrate(const CalibrateArgs& args) {
    const auto samples = load_samples_csv(args.samples);
    const auto model = calibrate(samples, args.safety);
    save_model(model, args.out);
    std::printf("mem_mb  = %.6g * data_mb + %.6g\n", model.mem_slope, model.mem_intercept);
    std::printf("time_s  = %.6g * data_mb + %.6g\n", model.time_slope, model.time_intercept);
    std::printf("safety  = %.3g\n", model.safety_factor);
    std::cout << "wrote model to " << args.out << '\n';
    return 0;
}

struct SimulateArgs {
    std::string scenario;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    const auto scenario = load_scenario(args.scenario);
    const auto result = simulate(scenario);
    write_result(result, args.out);
    std::cout << "simulated " << result.records.size() << " jobs, makespan " << result.makespan_s
              << " s (" << format_slurm_time(result.makespan_s) << "), results in " << args.out
              << '\n';
    return 0;
}

struct ReportArgs {
    std::string result;
    std::int64_t serial_baseline_s = 0;
};

int cmd_report(const ReportArgs& args) {
    const auto result = load_result(args.result);
    std::cout << "jobs: " << result.records.size() << '\n';
    std::cout << "makespan: " << result.makespan_s << " s ("
              << format_slurm_time(result.makespan_s) << ")\n";
    if (args.serial_baseline_s > 0) {
        const double ratio = speedup(static_cast<double>(args.serial_baseline_s),
                                     static_cast<double>(result.makespan_s));
        std::cout << "speedup: " << format_speedup(ratio) << " (vs serial baseline "
                  << args.serial_baseline_s << " s)\n";
    }
    std::printf("utilization: %.1f%%\n", 100.0 * result.utilization);
    std::cout << "per-user peaks:\n";
    for (const auto& [user, peak] : result.per_user_peaks)
        std::cout << "  " << user << ": " << peak.peak_cores << " cores, " << peak.peak_mem_mb
                  << " MB\n";
    return 0;
}

struct NetPlanArgs {
    std::string links;
    double client_rate_mbps = 0.0;
    double safety = 0.7;
    double reserved_mbps = 0.0;
};

int cmd_net_plan(const NetPlanArgs& args) {
    const auto path = load_network_path(args.links);
    const auto plan = plan_transfer(path, args.client_rate_mbps, args.safety, args.reserved_mbps);
    std::printf("bottleneck: %s (%g Mbps)\n", plan.bottleneck_link.c_str(), plan.bottleneck_mbps);
    std::printf("saturates: %s\n", plan.saturates ? "yes" : "no");
    std::printf("recommended rate: %g Mbps\n", plan.recommended_rate_mbps);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slicewise: plan, submit, and simulate split/compute/merge batch workflows"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "extra diagnostics on stderr");

    PlanArgs plan_args;
    auto* plan_cmd = app.add_subcommand("plan", "build per-subject task plans from a manifest");
    plan_cmd->add_option("--dataset", plan_args.dataset, "dataset manifest JSON")->required();
    plan_cmd->add_option("--model", plan_args.model, "calibrated resource model JSON")->required();
    plan_cmd->add_option("--mode", plan_args.mode, "cpu (per slice) or gpu (slice groups)")
        ->check(CLI::IsMember({"cpu", "gpu"}));
    auto* gpus_opt = plan_cmd->add_option("--gpus", plan_args.gpus, "GPU group count");
    plan_cmd->add_option("--inventory", plan_args.inventory,
                         "GPU inventory JSON; group count becomes its logical device total")
        ->excludes(gpus_opt);
    plan_cmd->add_option("--overhead-s", plan_args.overhead_s, "split/merge walltime seconds");
    plan_cmd->add_option("--out", plan_args.out, "output directory")->required();

    EmitArgs emit_args;
    auto* emit_cmd = app.add_subcommand("emit", "write submission scripts for a plan");
    emit_cmd->add_option("--plan", emit_args.plan, "plan JSON")->required();
    emit_cmd->add_option("--backend", emit_args.backend, "auto, slurm, or sge")
        ->check(CLI::IsMember({"auto", "slurm", "sge"}));
    emit_cmd->add_option("--partition", emit_args.partition, "partition / queue name")->required();
    emit_cmd->add_option("--outdir", emit_args.outdir, "script output directory")->required();

    RunLocalArgs run_args;
    auto* run_cmd = app.add_subcommand("run-local", "execute a plan on this host");
    run_cmd->add_option("--plan", run_args.plan, "plan JSON")->required();
    run_cmd->add_option("--cores", run_args.cores, "core budget")->required();
    run_cmd->add_option("--mem-mb", run_args.mem_mb, "memory budget in MB")->required();

    CalibrateArgs cal_args;
    auto* cal_cmd = app.add_subcommand("calibrate", "fit the resource model from samples");
    cal_cmd->add_option("--samples", cal_args.samples, "CSV of data_mb,mem_mb,time_s")->required();
    cal_cmd->add_option("--out", cal_args.out, "model JSON to write")->required();
    cal_cmd->add_option("--safety", cal_args.safety, "headroom factor (>= 1)");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "replay a scenario on a simulated cluster");
    sim_cmd->add_option("--scenario", sim_args.scenario, "scenario JSON")->required();
    sim_cmd->add_option("--out", sim_args.out, "result file to write")->required();

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "summarize a simulation result");
    report_cmd->add_option("--result", report_args.result, "result file")->required();
    report_cmd->add_option("--serial-baseline-s", report_args.serial_baseline_s,
                           "serial duration for the speedup line");

    NetPlanArgs net_args;
    auto* net_cmd = app.add_subcommand("net-plan", "bottleneck and rate-cap calculator");
    net_cmd->add_option("--links", net_args.links, "links JSON")->required();
    net_cmd->add_option("--client-rate-mbps", net_args.client_rate_mbps, "client transfer rate")
        ->required();
    net_cmd->add_option("--safety", net_args.safety, "fraction of headroom to use, (0,1]");
    net_cmd->add_option("--reserved-mbps", net_args.reserved_mbps, "bandwidth to leave untouched");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(plan_cmd)) return cmd_plan(plan_args, verbose);
        if (app.got_subcommand(emit_cmd)) return cmd_emit(emit_args, verbose);
        if (app.got_subcommand(run_cmd)) return cmd_run_local(run_args);
        if (app.got_subcommand(cal_cmd)) return cmd_calibrate(cal_args);
        if (app.got_subcommand(sim_cmd)) return cmd_simulate(sim_args);
        if (app.got_subcommand(report_cmd)) return cmd_report(report_args);
        if (app.got_subcommand(net_cmd)) return cmd_net_plan(net_args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
