#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicewise/workflow.hpp"

namespace slicewise {

struct NodeSpec {
    std::string name;
    int cores = 1;
    std::int64_t mem_mb = 1;
    int gpus = 0;  // logical devices
};

enum class SchedAlgorithm { fifo, multifactor };

std::string to_string(SchedAlgorithm algorithm);
SchedAlgorithm parse_sched_algorithm(const std::string& text);

struct SchedulingPolicy {
    SchedAlgorithm algorithm = SchedAlgorithm::fifo;
    double w_fairshare = 1000.0;
    double w_age = 100.0;
    std::int64_t usage_window_s = 30ll * 86400;
    std::int64_t age_cap_s = 7ll * 86400;
    std::optional<double> qos_core_frac;
    std::optional<double> qos_mem_frac;
    bool strict_fifo = false;  // head-of-line blocking instead of skip-scan
};

struct SimJob {
    std::int64_t id = 0;
    std::string user;
    std::int64_t submit_s = 0;
    std::int64_t duration_s = 1;
    ResourceRequest resources;
    std::vector<std::int64_t> depends_on;
};

struct Scenario {
    std::vector<NodeSpec> cluster;
    SchedulingPolicy policy;
    std::vector<SimJob> jobs;
};

struct JobRecord {
    std::int64_t job_id = 0;
    std::string user;
    std::int64_t submit_s = 0;
    std::int64_t start_s = 0;
    std::int64_t end_s = 0;
    std::int64_t wait_s = 0;
    std::string node;
};

struct UserPeak {
    int peak_cores = 0;
    std::int64_t peak_mem_mb = 0;
};

struct SimResult {
    std::vector<JobRecord> records;  // ordered by job id
    std::int64_t makespan_s = 0;     // first start to last end
    double utilization = 0.0;        // busy core-seconds / (total cores x makespan)
    std::map<std::string, UserPeak> per_user_peaks;
};

// Deterministic event-driven execution: at each event time, completions are
// processed first, then eligible jobs (submitted, dependencies done, QoS
// admissible) are placed first-fit over nodes in declaration order, scanned in
// (priority desc, submit asc, id asc) order with skip. Jobs that can never fit
// or that alone exceed a QoS cap are rejected up front.
SimResult simulate(const Scenario& scenario);

// Multifactor blend of a fair-share term (unused capacity share in the usage
// window) and an age term (wait capped at age_cap_s). The fifo algorithm
// orders by arrival, so the wait itself is the priority.
double compute_priority(double user_usage_in_window_s, double window_capacity_s,
                        std::int64_t wait_s, const SchedulingPolicy& policy);

// True when the job fits under the per-user running-resource caps.
bool qos_admit(int user_running_cores, std::int64_t user_running_mem_mb,
               const ResourceRequest& job, int cluster_total_cores,
               std::int64_t cluster_total_mem_mb, const SchedulingPolicy& policy);

// Wave model: ceil(subjects / concurrent_slots) * per_subject_s.
std::int64_t fleet_makespan(std::int64_t subjects, std::int64_t per_subject_s,
                            std::int64_t concurrent_slots);

// JSON: {"cluster": [...], "policy": {...}, "jobs": [...]} per README.
Scenario load_scenario(const std::filesystem::path& path);

// CSV table (job_id,user,submit_s,start_s,end_s,wait_s,node), a blank line,
// then a JSON summary block. parse_result reads the same format back.
std::string result_to_string(const SimResult& result);
void write_result(const SimResult& result, const std::filesystem::path& path);
SimResult parse_result(std::istream& in);
SimResult load_result(const std::filesystem::path& path);

}  // namespace slicewise
