#include "slicewise/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slicewise/errors.hpp"

namespace slicewise {

std::string to_string(SchedAlgorithm algorithm) {
    return algorithm == SchedAlgorithm::fifo ? "fifo" : "multifactor";
}

SchedAlgorithm parse_sched_algorithm(const std::string& text) {
    if (text == "fifo") return SchedAlgorithm::fifo;
    if (text == "multifactor") return SchedAlgorithm::multifactor;
    throw ValidationError("unknown scheduling algorithm: '" + text + "'");
}

double compute_priority(double user_usage_in_window_s, double window_capacity_s,
                        std::int64_t wait_s, const SchedulingPolicy& policy) {
    if (window_capacity_s <= 0.0) throw ValidationError("window_capacity_s must be > 0");
    if (policy.algorithm == SchedAlgorithm::fifo) {
        // Arrival order: at any fixed instant, longer wait means earlier submit.
        return static_cast<double>(wait_s);
    }
    if (policy.age_cap_s <= 0) throw ValidationError("age_cap_s must be > 0");
    const double fairshare = 1.0 - std::min(1.0, user_usage_in_window_s / window_capacity_s);
    const double age =
        std::min(1.0, static_cast<double>(wait_s) / static_cast<double>(policy.age_cap_s));
    return policy.w_fairshare * fairshare + policy.w_age * age;
}

namespace {

std::int64_t core_budget_of(double frac, int total_cores) {
    return static_cast<std::int64_t>(std::floor(frac * total_cores));
}

std::int64_t mem_budget_of(double frac, std::int64_t total_mem) {
    return static_cast<std::int64_t>(std::floor(frac * static_cast<double>(total_mem)));
}

}  // namespace

bool qos_admit(int user_running_cores, std::int64_t user_running_mem_mb,
               const ResourceRequest& job, int cluster_total_cores,
               std::int64_t cluster_total_mem_mb, const SchedulingPolicy& policy) {
    if (cluster_total_cores <= 0 || cluster_total_mem_mb <= 0)
        throw ValidationError("cluster totals must be > 0");
    if (policy.qos_core_frac &&
        user_running_cores + job.cores > core_budget_of(*policy.qos_core_frac, cluster_total_cores))
        return false;
    if (policy.qos_mem_frac &&
        user_running_mem_mb + job.mem_mb >
            mem_budget_of(*policy.qos_mem_frac, cluster_total_mem_mb))
        return false;
    return true;
}

std::int64_t fleet_makespan(std::int64_t subjects, std::int64_t per_subject_s,
                            std::int64_t concurrent_slots) {
    if (subjects <= 0 || per_subject_s <= 0 || concurrent_slots <= 0)
        throw ValidationError("fleet_makespan arguments must be > 0");
    const std::int64_t waves = (subjects + concurrent_slots - 1) / concurrent_slots;
    return waves * per_subject_s;
}

namespace {

void validate_scenario(const Scenario& sc, int& total_cores, std::int64_t& total_mem) {
    if (sc.cluster.empty()) throw ValidationError("scenario has no nodes");
    std::set<std::string> node_names;
    total_cores = 0;
    total_mem = 0;
    for (const auto& node : sc.cluster) {
        if (node.name.empty() || node.name.find_first_of(",\n") != std::string::npos)
            throw ValidationError("node names must be nonempty and free of commas");
        if (!node_names.insert(node.name).second)
            throw ValidationError("duplicate node name '" + node.name + "'");
        if (node.cores < 1 || node.mem_mb < 1 || node.gpus < 0)
            throw ValidationError("node '" + node.name + "' has an invalid capacity");
        total_cores += node.cores;
        total_mem += node.mem_mb;
    }

    const auto& p = sc.policy;
    if (p.w_fairshare < 0.0 || p.w_age < 0.0)
        throw ValidationError("priority weights must be >= 0");
    if (p.usage_window_s < 1) throw ValidationError("usage_window_s must be >= 1");
    if (p.age_cap_s < 1) throw ValidationError("age_cap_s must be >= 1");
    for (const auto& frac : {p.qos_core_frac, p.qos_mem_frac})
        if (frac && (*frac < 0.0 || *frac > 1.0))
            throw ValidationError("QoS fractions must be in [0, 1]");

    std::set<std::int64_t> seen_ids;
    for (std::size_t i = 0; i < sc.jobs.size(); ++i) {
        const auto& job = sc.jobs[i];
        const std::string tag = "job " + std::to_string(job.id);
        if (!seen_ids.insert(job.id).second)
            throw ValidationError("duplicate job id " + std::to_string(job.id));
        if (job.user.empty() || job.user.find_first_of(",\n") != std::string::npos)
            throw ValidationError(tag + ": user must be nonempty and free of commas");
        if (job.submit_s < 0) throw ValidationError(tag + ": submit_s must be >= 0");
        if (job.duration_s < 1) throw ValidationError(tag + ": duration_s must be >= 1");
        if (job.resources.cores < 1 || job.resources.mem_mb < 1 || job.resources.gpus < 0)
            throw ValidationError(tag + ": invalid resource request");
        for (auto dep : job.depends_on) {
            bool earlier = false;
            for (std::size_t k = 0; k < i; ++k)
                if (sc.jobs[k].id == dep) earlier = true;
            if (!earlier)
                throw ValidationError(tag + ": dependency " + std::to_string(dep) +
                                      " does not precede it in the scenario");
        }
        bool fits = false;
        for (const auto& node : sc.cluster)
            if (job.resources.cores <= node.cores && job.resources.mem_mb <= node.mem_mb &&
                job.resources.gpus <= node.gpus)
                fits = true;
        if (!fits) throw ValidationError(tag + " can never fit any node in the cluster");
        if (p.qos_core_frac &&
            job.resources.cores > core_budget_of(*p.qos_core_frac, total_cores))
            throw ValidationError(tag + " alone exceeds the per-user core cap of " +
                                  std::to_string(core_budget_of(*p.qos_core_frac, total_cores)) +
                                  " cores");
        if (p.qos_mem_frac && job.resources.mem_mb > mem_budget_of(*p.qos_mem_frac, total_mem))
            throw ValidationError(tag + " alone exceeds the per-user memory cap of " +
                                  std::to_string(mem_budget_of(*p.qos_mem_frac, total_mem)) +
                                  " MB");
    }
}

}  // namespace

SimResult simulate(const Scenario& sc) {
    int total_cores = 0;
    std::int64_t total_mem = 0;
    validate_scenario(sc, total_cores, total_mem);

    const std::size_t n = sc.jobs.size();
    std::map<std::int64_t, std::size_t> index_of;
    for (std::size_t i = 0; i < n; ++i) index_of[sc.jobs[i].id] = i;

    struct NodeState {
        int free_cores;
        std::int64_t free_mem;
        int free_gpus;
    };
    std::vector<NodeState> nodes;
    for (const auto& node : sc.cluster) nodes.push_back({node.cores, node.mem_mb, node.gpus});

    struct JobState {
        bool started = false;
        bool completed = false;
        std::int64_t start = 0;
        std::int64_t end = 0;
        int node = -1;
    };
    std::vector<JobState> state(n);
    std::map<std::string, int> user_cores;
    std::map<std::string, std::int64_t> user_mem;
    std::map<std::string, UserPeak> peaks;

    const double window_capacity = static_cast<double>(total_cores) *
                                   static_cast<double>(sc.policy.usage_window_s);
    auto usage_in_window = [&](const std::string& user, std::int64_t now) {
        std::int64_t usage = 0;
        const std::int64_t window_start = now - sc.policy.usage_window_s;
        for (std::size_t k = 0; k < n; ++k) {
            if (!state[k].started || sc.jobs[k].user != user) continue;
            const std::int64_t lo = std::max(state[k].start, window_start);
            const std::int64_t hi = std::min(state[k].end, now);
            if (hi > lo) usage += sc.jobs[k].resources.cores * (hi - lo);
        }
        return static_cast<double>(usage);
    };

    std::set<std::int64_t> events;
    for (const auto& job : sc.jobs) events.insert(job.submit_s);

    std::size_t completed = 0;
    while (!events.empty()) {
        const std::int64_t now = *events.begin();
        events.erase(events.begin());

        // Completions first, so freed resources are visible to placements at
        // the same instant.
        for (std::size_t i = 0; i < n; ++i) {
            if (!state[i].started || state[i].completed || state[i].end != now) continue;
            state[i].completed = true;
            ++completed;
            nodes[state[i].node].free_cores += sc.jobs[i].resources.cores;
            nodes[state[i].node].free_mem += sc.jobs[i].resources.mem_mb;
            nodes[state[i].node].free_gpus += sc.jobs[i].resources.gpus;
            user_cores[sc.jobs[i].user] -= sc.jobs[i].resources.cores;
            user_mem[sc.jobs[i].user] -= sc.jobs[i].resources.mem_mb;
        }

        struct Candidate {
            double priority;
            std::int64_t submit;
            std::int64_t id;
            std::size_t idx;
        };
        std::vector<Candidate> eligible;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& job = sc.jobs[i];
            if (state[i].started || job.submit_s > now) continue;
            bool deps_done = true;
            for (auto dep : job.depends_on)
                if (!state[index_of.at(dep)].completed) deps_done = false;
            if (!deps_done) continue;
            const double priority = compute_priority(usage_in_window(job.user, now),
                                                     window_capacity, now - job.submit_s,
                                                     sc.policy);
            eligible.push_back({priority, job.submit_s, job.id, i});
        }
        std::sort(eligible.begin(), eligible.end(), [](const Candidate& a, const Candidate& b) {
            if (a.priority != b.priority) return a.priority > b.priority;
            if (a.submit != b.submit) return a.submit < b.submit;
            return a.id < b.id;
        });

        for (const auto& c : eligible) {
            const auto& job = sc.jobs[c.idx];
            if (!qos_admit(user_cores[job.user], user_mem[job.user], job.resources, total_cores,
                           total_mem, sc.policy)) {
                if (sc.policy.strict_fifo) break;
                continue;
            }
            int placed = -1;
            for (std::size_t node = 0; node < nodes.size(); ++node) {
                if (nodes[node].free_cores >= job.resources.cores &&
                    nodes[node].free_mem >= job.resources.mem_mb &&
                    nodes[node].free_gpus >= job.resources.gpus) {
                    placed = static_cast<int>(node);
                    break;
                }
            }
            if (placed < 0) {
                if (sc.policy.strict_fifo) break;
                continue;
            }

            auto& target = nodes[placed];
            target.free_cores -= job.resources.cores;
            target.free_mem -= job.resources.mem_mb;
            target.free_gpus -= job.resources.gpus;
            if (target.free_cores < 0 || target.free_mem < 0 || target.free_gpus < 0)
                throw std::logic_error("node capacity conservation violated");

            state[c.idx].started = true;
            state[c.idx].start = now;
            state[c.idx].end = now + job.duration_s;
            state[c.idx].node = placed;
            events.insert(state[c.idx].end);

            user_cores[job.user] += job.resources.cores;
            user_mem[job.user] += job.resources.mem_mb;
            auto& peak = peaks[job.user];
            peak.peak_cores = std::max(peak.peak_cores, user_cores[job.user]);
            peak.peak_mem_mb = std::max(peak.peak_mem_mb, user_mem[job.user]);
        }

        // Per-user QoS bound must hold after every placement pass.
        if (sc.policy.qos_core_frac) {
            const auto budget = core_budget_of(*sc.policy.qos_core_frac, total_cores);
            for (const auto& [user, cores] : user_cores)
                if (cores > budget) throw std::logic_error("QoS core bound violated for " + user);
        }
        if (sc.policy.qos_mem_frac) {
            const auto budget = mem_budget_of(*sc.policy.qos_mem_frac, total_mem);
            for (const auto& [user, mem] : user_mem)
                if (mem > budget) throw std::logic_error("QoS memory bound violated for " + user);
        }
    }
    if (completed != n) throw std::logic_error("simulator failed to drain the scenario");

    SimResult result;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sc.jobs[a].id < sc.jobs[b].id; });
    std::int64_t first_start = 0, last_end = 0;
    bool any = false;
    std::int64_t busy_core_seconds = 0;
    for (std::size_t i : order) {
        const auto& job = sc.jobs[i];
        JobRecord record{job.id,
                         job.user,
                         job.submit_s,
                         state[i].start,
                         state[i].end,
                         state[i].start - job.submit_s,
                         sc.cluster[state[i].node].name};
        if (!any) {
            first_start = record.start_s;
            last_end = record.end_s;
            any = true;
        }
        first_start = std::min(first_start, record.start_s);
        last_end = std::max(last_end, record.end_s);
        busy_core_seconds += static_cast<std::int64_t>(job.resources.cores) * job.duration_s;
        result.records.push_back(std::move(record));
    }
    result.makespan_s = any ? last_end - first_start : 0;
    result.utilization =
        result.makespan_s > 0
            ? static_cast<double>(busy_core_seconds) /
                  (static_cast<double>(total_cores) * static_cast<double>(result.makespan_s))
            : 0.0;
    result.per_user_peaks = std::move(peaks);
    return result;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed scenario file " + path.string() + ": " + e.what());
    }
    Scenario sc;
    try {
        for (const auto& nj : j.at("cluster")) {
            NodeSpec node;
            node.name = nj.at("name").get<std::string>();
            node.cores = nj.at("cores").get<int>();
            node.mem_mb = nj.at("mem_mb").get<std::int64_t>();
            node.gpus = nj.value("gpus", 0);
            sc.cluster.push_back(std::move(node));
        }
        if (j.contains("policy")) {
            const auto& pj = j.at("policy");
            auto& p = sc.policy;
            p.algorithm = parse_sched_algorithm(pj.value("algorithm", std::string("fifo")));
            p.w_fairshare = pj.value("w_fairshare", p.w_fairshare);
            p.w_age = pj.value("w_age", p.w_age);
            p.usage_window_s = pj.value("usage_window_s", p.usage_window_s);
            p.age_cap_s = pj.value("age_cap_s", p.age_cap_s);
            if (pj.contains("qos_core_frac") && !pj.at("qos_core_frac").is_null())
                p.qos_core_frac = pj.at("qos_core_frac").get<double>();
            if (pj.contains("qos_mem_frac") && !pj.at("qos_mem_frac").is_null())
                p.qos_mem_frac = pj.at("qos_mem_frac").get<double>();
            p.strict_fifo = pj.value("strict_fifo", false);
        }
        for (const auto& jj : j.at("jobs")) {
            SimJob job;
            job.id = jj.at("id").get<std::int64_t>();
            job.user = jj.at("user").get<std::string>();
            job.submit_s = jj.at("submit_s").get<std::int64_t>();
            job.duration_s = jj.at("duration_s").get<std::int64_t>();
            job.resources.cores = jj.at("cores").get<int>();
            job.resources.mem_mb = jj.at("mem_mb").get<std::int64_t>();
            job.resources.gpus = jj.value("gpus", 0);
            job.resources.walltime_s = job.duration_s;
            if (jj.contains("depends_on"))
                job.depends_on = jj.at("depends_on").get<std::vector<std::int64_t>>();
            sc.jobs.push_back(std::move(job));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("scenario " + path.string() + ": " + e.what());
    }
    return sc;
}

std::string result_to_string(const SimResult& result) {
    std::ostringstream out;
    out << "job_id,user,submit_s,start_s,end_s,wait_s,node\n";
    for (const auto& r : result.records) {
        out << r.job_id << ',' << r.user << ',' << r.submit_s << ',' << r.start_s << ','
            << r.end_s << ',' << r.wait_s << ',' << r.node << '\n';
    }
    nlohmann::ordered_json summary;
    summary["makespan_s"] = result.makespan_s;
    summary["utilization"] = result.utilization;
    summary["per_user_peaks"] = nlohmann::ordered_json::object();
    for (const auto& [user, peak] : result.per_user_peaks) {
        summary["per_user_peaks"][user] = {{"peak_cores", peak.peak_cores},
                                           {"peak_mem_mb", peak.peak_mem_mb}};
    }
    out << '\n' << summary.dump(2) << '\n';
    return out.str();
}

void write_result(const SimResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write result file: " + path.string());
    out << result_to_string(result);
}

SimResult parse_result(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "job_id,user,submit_s,start_s,end_s,wait_s,node")
        throw ValidationError("result file must start with the job CSV header");
    SimResult result;
    while (std::getline(in, line) && !line.empty()) {
        std::istringstream fields(line);
        JobRecord r;
        std::string token;
        auto next = [&](const char* what) {
            if (!std::getline(fields, token, ','))
                throw ValidationError(std::string("result row missing ") + what + ": '" + line +
                                      "'");
            return token;
        };
        try {
            r.job_id = std::stoll(next("job_id"));
            r.user = next("user");
            r.submit_s = std::stoll(next("submit_s"));
            r.start_s = std::stoll(next("start_s"));
            r.end_s = std::stoll(next("end_s"));
            r.wait_s = std::stoll(next("wait_s"));
            r.node = next("node");
        } catch (const std::logic_error&) {  // stoll: invalid_argument, out_of_range
            throw ValidationError("malformed result row: '" + line + "'");
        }
        result.records.push_back(std::move(r));
    }
    nlohmann::json summary;
    try {
        in >> summary;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed result summary: ") + e.what());
    }
    try {
        result.makespan_s = summary.at("makespan_s").get<std::int64_t>();
        result.utilization = summary.at("utilization").get<double>();
        for (const auto& [user, pj] : summary.at("per_user_peaks").items()) {
            result.per_user_peaks[user] = {pj.at("peak_cores").get<int>(),
                                           pj.at("peak_mem_mb").get<std::int64_t>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("result summary: ") + e.what());
    }
    return result;
}

SimResult load_result(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open result file: " + path.string());
    return parse_result(in);
}

}  // namespace slicewise
