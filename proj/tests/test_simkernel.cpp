#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "sim_support.hpp"
#include "slicewise/errors.hpp"
#include "slicewise/simkernel.hpp"
#include "slicewise/workflow.hpp"

using namespace slicewise;

namespace {

Scenario two_jobs_one_core() {
    Scenario sc;
    sc.cluster = {{"n1", 1, 1024, 0}};
    sc.policy.algorithm = SchedAlgorithm::fifo;
    sc.jobs = {{1, "a", 0, 10, {1, 64, 10, 0}, {}},
               {2, "a", 0, 5, {1, 64, 5, 0}, {}}};
    return sc;
}

// A split -> compute -> merge subject plan expressed as simulator jobs.
Scenario subject_scenario(int computes, std::int64_t max_compute_s, int node_cores) {
    Scenario sc;
    sc.cluster = {{"node", node_cores, 4194304, 0}};
    sc.policy.algorithm = SchedAlgorithm::fifo;
    SimJob split{1, "lab", 0, 60, {1, 1024, 60, 0}, {}};
    sc.jobs.push_back(split);
    std::vector<std::int64_t> compute_ids;
    for (int i = 0; i < computes; ++i) {
        // Varied durations with the stated maximum.
        const std::int64_t duration = max_compute_s - 100 * ((computes - 1) - i);
        SimJob job{2 + i, "lab", 0, duration, {1, 1024, duration, 0}, {1}};
        sc.jobs.push_back(job);
        compute_ids.push_back(job.id);
    }
    SimJob merge{2 + computes, "lab", 0, 60, {1, 1024, 60, 0}, compute_ids};
    sc.jobs.push_back(merge);
    return sc;
}

const JobRecord& record_of(const SimResult& result, std::int64_t id) {
    for (const auto& r : result.records)
        if (r.job_id == id) return r;
    REQUIRE(false);
    static JobRecord dummy;
    return dummy;
}

}  // namespace

TEST_SUITE("simkernel") {

TEST_CASE("two jobs on one core run back to back") {
    auto result = simulate(two_jobs_one_core());
    REQUIRE(result.records.size() == 2);
    CHECK(record_of(result, 1).start_s == 0);
    CHECK(record_of(result, 1).end_s == 10);
    CHECK(record_of(result, 2).start_s == 10);
    CHECK(record_of(result, 2).end_s == 15);
    CHECK(result.makespan_s == 15);
    CHECK(result.utilization == 1.0);
    CHECK(result.per_user_peaks.at("a").peak_cores == 1);
}

TEST_CASE("147-task subject plan: 7 hours parallel, full sum serial") {
    auto parallel = simulate(subject_scenario(145, 25200, 145));
    CHECK(parallel.makespan_s == 25320);  // 60 + 25200 + 60

    auto serial_sc = subject_scenario(145, 25200, 1);
    auto serial = simulate(serial_sc);
    std::int64_t total = 0;
    for (const auto& j : serial_sc.jobs) total += j.duration_s;
    CHECK(serial.makespan_s == total);
}

TEST_CASE("plan-to-jobs cross-check: serial makespan is the walltime sum") {
    std::vector<ResourceSample> samples = {{0.0, 100.0, 50.0}, {10.0, 300.0, 250.0}};
    auto model = calibrate(samples, 1.0);
    SubjectImage subject{"x1", {}};
    for (int i = 0; i < 12; ++i) subject.slices.push_back({i, 0.7 * i});
    auto plan = plan_subject_workflow(subject, PlanMode::cpu_slice, model);

    Scenario sc;
    sc.policy.algorithm = SchedAlgorithm::fifo;
    std::map<std::string, std::int64_t> id_of;
    std::int64_t next = 1;
    for (const auto& t : plan.tasks) id_of[t.id] = next++;
    for (const auto& t : plan.tasks) {
        SimJob job{id_of[t.id], "u", 0, t.resources.walltime_s, t.resources, {}};
        for (const auto& [from, to] : plan.edges)
            if (to == t.id) job.depends_on.push_back(id_of[from]);
        sc.jobs.push_back(job);
    }

    std::int64_t sum = 0;
    for (const auto& j : sc.jobs) sum += j.duration_s;
    sc.cluster = {{"one", 1, 1 << 20, 0}};
    const auto serial = simulate(sc);
    CHECK(serial.makespan_s == sum);

    // Compute walltimes alone account for the serial makespan minus the
    // split/merge brackets.
    std::int64_t compute_sum = 0;
    for (const auto& t : plan.tasks)
        if (t.kind == TaskKind::compute) compute_sum += t.resources.walltime_s;
    CHECK(serial.makespan_s - 120 == compute_sum);

    // Unbounded cores: the critical path split -> slowest compute -> merge.
    sc.cluster = {{"wide", static_cast<int>(plan.tasks.size()), 1 << 24, 0}};
    CHECK(simulate(sc).makespan_s == 60 + default_walltime(plan) + 60);
}

TEST_CASE("compute_priority formula") {
    SchedulingPolicy policy;
    policy.algorithm = SchedAlgorithm::multifactor;
    policy.w_fairshare = 1000.0;
    policy.w_age = 100.0;
    policy.age_cap_s = 604800;

    const double capacity = 1000000.0;
    CHECK(compute_priority(0.0, capacity, 0, policy) == 1000.0);
    CHECK(compute_priority(capacity, capacity, 0, policy) == 0.0);
    CHECK(compute_priority(capacity / 2, capacity, policy.age_cap_s, policy) == 600.0);
    // Excess usage saturates at the cap.
    CHECK(compute_priority(capacity * 3, capacity, 0, policy) == 0.0);

    policy.algorithm = SchedAlgorithm::fifo;
    CHECK(compute_priority(0.0, capacity, 42, policy) == 42.0);

    CHECK_THROWS_AS(compute_priority(0.0, 0.0, 0, policy), ValidationError);
}

TEST_CASE("priority is monotone in usage") {
    SchedulingPolicy policy;
    policy.algorithm = SchedAlgorithm::multifactor;
    const double capacity = 5000.0;
    double previous = compute_priority(0.0, capacity, 17, policy);
    for (double usage = 100.0; usage <= 6000.0; usage += 100.0) {
        const double p = compute_priority(usage, capacity, 17, policy);
        CHECK(p <= previous);
        previous = p;
    }
}

TEST_CASE("qos_admit core and memory budgets") {
    SchedulingPolicy policy;
    policy.qos_core_frac = 0.15;
    ResourceRequest job{6, 1024, 60, 0};
    CHECK(!qos_admit(342, 0, job, 2300, 1 << 20, policy));
    CHECK(qos_admit(0, 0, job, 2300, 1 << 20, policy));
    CHECK(qos_admit(339, 0, job, 2300, 1 << 20, policy));  // 345 == budget

    SchedulingPolicy open_policy;
    CHECK(qos_admit(1 << 20, 1 << 28, job, 2300, 1 << 20, open_policy));

    SchedulingPolicy mem_policy;
    mem_policy.qos_mem_frac = 0.30;
    ResourceRequest fat{1, 400000, 60, 0};
    CHECK(!qos_admit(0, 0, fat, 2300, 1000000, mem_policy));  // budget 300000
    ResourceRequest slim{1, 1000, 60, 0};
    CHECK(qos_admit(0, 299000, slim, 2300, 1000000, mem_policy));
    CHECK(!qos_admit(0, 299001, slim, 2300, 1000000, mem_policy));
}

TEST_CASE("fleet_makespan wave arithmetic") {
    CHECK(fleet_makespan(800, 7680, 4) == 1536000);
    CHECK(fleet_makespan(1, 7680, 16) == 7680);
    CHECK(fleet_makespan(800, 1800, 68) == 21600);
    CHECK(fleet_makespan(800, 7680, 8) * 2 == fleet_makespan(800, 7680, 4));
    CHECK_THROWS_AS(fleet_makespan(0, 10, 1), ValidationError);
}

TEST_CASE("flood starvation without QoS, instant start with QoS") {
    Scenario flood;
    for (int i = 0; i < 10; ++i) flood.cluster.push_back({"n" + std::to_string(i + 1), 16, 262144, 0});
    flood.policy.algorithm = SchedAlgorithm::fifo;
    for (int i = 0; i < 100; ++i)
        flood.jobs.push_back({i + 1, "hoarder", 0, 600, {6, 14336, 600, 0}, {}});
    flood.jobs.push_back({101, "newcomer", 1, 60, {6, 14336, 60, 0}, {}});

    auto starved = simulate(flood);
    std::int64_t first_a_completion = 1 << 30;
    for (const auto& r : starved.records)
        if (r.user == "hoarder") first_a_completion = std::min(first_a_completion, r.end_s);
    CHECK(record_of(starved, 101).start_s >= first_a_completion);
    CHECK(starved.per_user_peaks.at("hoarder").peak_cores == 120);  // 2 jobs x 10 nodes x 6

    flood.policy.qos_core_frac = 0.15;  // 160 cores -> budget 24 -> 4 jobs
    auto fair = simulate(flood);
    CHECK(record_of(fair, 101).start_s == 1);
    CHECK(fair.per_user_peaks.at("hoarder").peak_cores <= 24);
}

TEST_CASE("multifactor fair-share boosts the idle user after a completion") {
    Scenario sc;
    sc.cluster = {{"n1", 2, 8192, 0}};
    sc.policy.algorithm = SchedAlgorithm::multifactor;
    sc.policy.usage_window_s = 3600;
    sc.policy.age_cap_s = 600;
    // Busy user floods the node; idle user arrives later with zero usage.
    sc.jobs = {{1, "busy", 0, 100, {2, 64, 100, 0}, {}},
               {2, "busy", 0, 100, {2, 64, 100, 0}, {}},
               {3, "idle", 5, 100, {2, 64, 100, 0}, {}}};
    auto result = simulate(sc);
    // At t=100, busy has 200 core-seconds in the window; idle has none and wins.
    CHECK(record_of(result, 3).start_s == 100);
    CHECK(record_of(result, 2).start_s == 200);
}

TEST_CASE("strict fifo blocks behind the head of the queue") {
    Scenario sc;
    sc.cluster = {{"n1", 4, 8192, 0}};
    sc.policy.algorithm = SchedAlgorithm::fifo;
    sc.jobs = {{1, "a", 0, 50, {3, 64, 50, 0}, {}},
               {2, "a", 0, 50, {3, 64, 50, 0}, {}},
               {3, "a", 0, 10, {1, 64, 10, 0}, {}}};

    auto skipping = simulate(sc);
    CHECK(record_of(skipping, 3).start_s == 0);  // skips past the blocked job 2

    sc.policy.strict_fifo = true;
    auto strict = simulate(sc);
    CHECK(record_of(strict, 3).start_s == 50);  // waits for the head of line
}

TEST_CASE("scenario rejection diagnostics") {
    Scenario sc;
    sc.cluster = {{"n1", 4, 4096, 0}};
    sc.jobs = {{1, "a", 0, 10, {8, 64, 10, 0}, {}}};
    CHECK_THROWS_WITH_AS(simulate(sc), doctest::Contains("can never fit"), ValidationError);

    sc.jobs = {{1, "a", 0, 10, {1, 64, 10, 0}, {2}}};
    CHECK_THROWS_AS(simulate(sc), ValidationError);

    sc.jobs = {{1, "a", 0, 10, {1, 64, 10, 0}, {}}, {1, "a", 0, 10, {1, 64, 10, 0}, {}}};
    CHECK_THROWS_WITH_AS(simulate(sc), doctest::Contains("duplicate"), ValidationError);

    sc.jobs = {{1, "a", 0, 10, {4, 64, 10, 0}, {}}};
    sc.policy.qos_core_frac = 0.5;  // budget 2, job alone needs 4
    CHECK_THROWS_WITH_AS(simulate(sc), doctest::Contains("exceeds the per-user"), ValidationError);
}

TEST_CASE("simulation matches the per-second reference on small scenarios") {
    std::mt19937 rng(1234);
    int checked = 0;
    for (int trial = 0; trial < 150; ++trial) {
        auto sc = sim_support::random_scenario(rng, 2, 6);
        CAPTURE(trial);
        auto result = simulate(sc);
        auto expected = sim_support::oracle_simulate(sc);
        REQUIRE(result.records.size() == sc.jobs.size());
        for (std::size_t i = 0; i < sc.jobs.size(); ++i) {
            const auto& r = record_of(result, sc.jobs[i].id);
            CHECK(r.start_s == expected[i].start_s);
            CHECK(r.end_s == expected[i].end_s);
            CHECK(r.node == sc.cluster[expected[i].node].name);
        }
        ++checked;
    }
    CHECK(checked == 150);
}

TEST_CASE("randomized scenarios: determinism and conservation") {
    std::mt19937 rng(777);
    for (int trial = 0; trial < 60; ++trial) {
        auto sc = sim_support::random_scenario(rng, 5, 50);
        CAPTURE(trial);
        auto first = simulate(sc);
        auto second = simulate(sc);
        CHECK(result_to_string(first) == result_to_string(second));
        auto violations = sim_support::check_result_invariants(sc, first);
        const std::string note = violations.empty() ? "ok" : violations.front();
        CHECK_MESSAGE(violations.empty(), note);
    }
}

TEST_CASE("scenario JSON loads with defaults") {
    auto dir = std::filesystem::temp_directory_path() / "slicewise_sim_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / "scenario.json";
    {
        std::ofstream out(path);
        out << R"({
          "cluster": [{"name": "n1", "cores": 16, "mem_mb": 65536, "gpus": 2}],
          "policy": {"algorithm": "multifactor", "qos_core_frac": 0.15},
          "jobs": [
            {"id": 1, "user": "a", "submit_s": 0, "duration_s": 60,
             "cores": 1, "mem_mb": 1024, "gpus": 1, "depends_on": []},
            {"id": 2, "user": "a", "submit_s": 0, "duration_s": 30,
             "cores": 1, "mem_mb": 1024, "depends_on": [1]}
          ]
        })";
    }
    auto sc = load_scenario(path);
    CHECK(sc.cluster.size() == 1);
    CHECK(sc.policy.algorithm == SchedAlgorithm::multifactor);
    REQUIRE(sc.policy.qos_core_frac.has_value());
    CHECK(*sc.policy.qos_core_frac == 0.15);
    CHECK(!sc.policy.qos_mem_frac.has_value());
    CHECK(sc.policy.w_fairshare == 1000.0);  // default
    REQUIRE(sc.jobs.size() == 2);
    CHECK(sc.jobs[1].depends_on == std::vector<std::int64_t>{1});
    CHECK(sc.jobs[1].resources.gpus == 0);

    auto result = simulate(sc);
    CHECK(result.records.size() == 2);
    CHECK_THROWS_AS(load_scenario(dir / "absent.json"), IoError);
}

TEST_CASE("result serialization round trips") {
    auto result = simulate(two_jobs_one_core());
    const auto text = result_to_string(result);
    CHECK(text.find("job_id,user,submit_s,start_s,end_s,wait_s,node") == 0);
    std::istringstream in(text);
    auto back = parse_result(in);
    CHECK(back.makespan_s == result.makespan_s);
    CHECK(back.utilization == result.utilization);
    REQUIRE(back.records.size() == result.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        CHECK(back.records[i].job_id == result.records[i].job_id);
        CHECK(back.records[i].start_s == result.records[i].start_s);
        CHECK(back.records[i].end_s == result.records[i].end_s);
        CHECK(back.records[i].node == result.records[i].node);
    }
    CHECK(back.per_user_peaks.at("a").peak_cores == 1);

    auto dir = std::filesystem::temp_directory_path() / "slicewise_sim_tests";
    std::filesystem::create_directories(dir);
    write_result(result, dir / "result.csv");
    auto loaded = load_result(dir / "result.csv");
    CHECK(result_to_string(loaded) == text);
}

}  // TEST_SUITE
