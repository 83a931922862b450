#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicewise/workflow.hpp"

namespace slicewise {

enum class RunStatus { complete, failed, merge_skipped };

std::string to_string(RunStatus status);

// Timing is in seconds relative to the start of the run. A record exists only
// for tasks whose dependencies all exited 0. Spawn failures record exit_code -1.
struct TaskRecord {
    std::string task_id;
    double start_s = 0.0;
    double end_s = 0.0;
    int exit_code = 0;
};

struct ExecutionReport {
    std::vector<TaskRecord> records;  // plan task order
    RunStatus status = RunStatus::complete;
    // High-water marks of the declared-resource ledger, for budget auditing.
    int peak_cores = 0;
    std::int64_t peak_mem_mb = 0;
};

// Executes the plan's commands as local processes. A task starts only once all
// dependencies exited 0, and the declared cores/mem of running tasks never
// exceed the budgets. Merge is skipped when any compute task fails.
ExecutionReport run_local(const ChunkPlan& plan, int core_budget, std::int64_t mem_budget_mb);

}  // namespace slicewise
