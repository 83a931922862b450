#include "slicewise/runner.hpp"

#include <sys/wait.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "slicewise/errors.hpp"

namespace slicewise {

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::complete: return "complete";
        case RunStatus::failed: return "failed";
        case RunStatus::merge_skipped: return "merge-skipped";
    }
    throw ValidationError("unknown run status");
}

namespace {

enum class TaskState { not_started, running, done_ok, done_fail };

int decode_exit(int rc) {
    if (rc == -1) return -1;  // spawn failure
    if (WIFEXITED(rc)) return WEXITSTATUS(rc);
    return -1;  // killed by signal
}

}  // namespace

ExecutionReport run_local(const ChunkPlan& plan, int core_budget, std::int64_t mem_budget_mb) {
    if (core_budget < 1) throw ValidationError("core_budget must be >= 1");
    if (mem_budget_mb < 1) throw ValidationError("mem_budget_mb must be >= 1");
    {
        auto violations = validate_plan(plan);
        if (!violations.empty()) {
            std::ostringstream msg;
            msg << "cannot run invalid plan:";
            for (const auto& v : violations) msg << "\n  - " << v;
            throw ValidationError(msg.str());
        }
    }
    const std::size_t n = plan.tasks.size();
    for (const auto& t : plan.tasks) {
        if (t.resources.cores > core_budget || t.resources.mem_mb > mem_budget_mb)
            throw ValidationError("task '" + t.id + "' requests " +
                                  std::to_string(t.resources.cores) + " cores / " +
                                  std::to_string(t.resources.mem_mb) +
                                  " MB, more than the whole budget");
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[plan.tasks[i].id] = i;
    std::vector<std::vector<std::size_t>> dependents(n);
    std::vector<int> pending(n, 0);
    for (const auto& [from, to] : plan.edges) {
        dependents[index[from]].push_back(index[to]);
        ++pending[index[to]];
    }

    std::mutex mu;
    std::condition_variable cv;
    std::vector<TaskState> state(n, TaskState::not_started);
    std::vector<TaskRecord> records(n);
    std::vector<bool> has_record(n, false);
    int free_cores = core_budget;
    std::int64_t free_mem = mem_budget_mb;
    int running = 0;
    std::uint64_t generation = 0;
    ExecutionReport report;

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<std::thread> workers;
    std::unique_lock lock(mu);
    for (;;) {
        bool started_any = true;
        while (started_any) {
            started_any = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (state[i] != TaskState::not_started || pending[i] != 0) continue;
                const auto& req = plan.tasks[i].resources;
                if (req.cores > free_cores || req.mem_mb > free_mem) continue;

                free_cores -= req.cores;
                free_mem -= req.mem_mb;
                report.peak_cores = std::max(report.peak_cores, core_budget - free_cores);
                report.peak_mem_mb = std::max(report.peak_mem_mb, mem_budget_mb - free_mem);
                state[i] = TaskState::running;
                ++running;
                const double start_s = elapsed();
                const std::string command = plan.tasks[i].command;
                workers.emplace_back([&, i, start_s, command] {
                    const int rc = std::system(command.c_str());
                    const int code = decode_exit(rc);
                    const double end_s = elapsed();
                    std::lock_guard guard(mu);
                    records[i] = {plan.tasks[i].id, start_s, end_s, code};
                    has_record[i] = true;
                    free_cores += plan.tasks[i].resources.cores;
                    free_mem += plan.tasks[i].resources.mem_mb;
                    --running;
                    state[i] = code == 0 ? TaskState::done_ok : TaskState::done_fail;
                    if (code == 0)
                        for (std::size_t d : dependents[i]) --pending[d];
                    ++generation;
                    cv.notify_all();
                });
                started_any = true;
            }
        }
        if (running == 0) break;  // nothing left that can make progress
        const std::uint64_t seen = generation;
        cv.wait(lock, [&] { return generation != seen; });
    }
    lock.unlock();
    for (auto& w : workers) w.join();

    bool any_compute_failed = false;
    bool all_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (state[i] != TaskState::done_ok) all_ok = false;
        if (state[i] == TaskState::done_fail && plan.tasks[i].kind == TaskKind::compute)
            any_compute_failed = true;
        if (has_record[i]) report.records.push_back(records[i]);
    }
    report.status = all_ok          ? RunStatus::complete
                    : any_compute_failed ? RunStatus::merge_skipped
                                         : RunStatus::failed;
    return report;
}

}  // namespace slicewise
