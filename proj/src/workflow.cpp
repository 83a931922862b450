#include "slicewise/workflow.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "slicewise/errors.hpp"
#include "slicewise/gpuplan.hpp"

namespace slicewise {

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::split: return "split";
        case TaskKind::compute: return "compute";
        case TaskKind::merge: return "merge";
    }
    throw ValidationError("unknown task kind");
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "split") return TaskKind::split;
    if (text == "compute") return TaskKind::compute;
    if (text == "merge") return TaskKind::merge;
    throw ValidationError("unknown task kind: '" + text + "'");
}

std::string to_string(PlanMode mode) {
    return mode == PlanMode::cpu_slice ? "cpu-slice" : "gpu-group";
}

PlanMode parse_plan_mode(const std::string& text) {
    if (text == "cpu-slice") return PlanMode::cpu_slice;
    if (text == "gpu-group") return PlanMode::gpu_group;
    throw ValidationError("unknown plan mode: '" + text + "'");
}

void validate_manifest(const DatasetManifest& manifest) {
    std::set<std::string> ids;
    for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
        const auto& subject = manifest.subjects[s];
        const std::string where = "subjects[" + std::to_string(s) + "]";
        if (subject.id.empty()) throw ValidationError(where + ".id: empty subject id");
        if (subject.id.find_first_of(" \t\n\r/") != std::string::npos)
            throw ValidationError(where + ".id: subject id '" + subject.id +
                                  "' contains whitespace or '/'");
        if (!ids.insert(subject.id).second)
            throw ValidationError(where + ".id: duplicate subject id '" + subject.id + "'");
        if (subject.slices.empty())
            throw ValidationError(where + ".slices: subject '" + subject.id + "' has no slices");
        for (std::size_t i = 0; i < subject.slices.size(); ++i) {
            const auto& slice = subject.slices[i];
            if (slice.index != static_cast<int>(i))
                throw ValidationError(where + ".slices[" + std::to_string(i) +
                                      "].index: non-contiguous slice indices (expected " +
                                      std::to_string(i) + ", got " + std::to_string(slice.index) +
                                      ")");
            if (!(slice.data_mb >= 0.0))
                throw ValidationError(where + ".slices[" + std::to_string(i) +
                                      "].data_mb: must be >= 0");
        }
    }
}

namespace {

nlohmann::json parse_json_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed ") + what + " file " + path.string() + ": " +
                              e.what());
    }
}

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(where + ": missing field '" + key + "'");
    return *it;
}

}  // namespace

DatasetManifest load_dataset_manifest(const std::filesystem::path& path) {
    auto j = parse_json_file(path, "dataset manifest");
    DatasetManifest manifest;
    try {
        manifest.dataset = require_field(j, "dataset", "manifest").get<std::string>();
        const auto& subjects = require_field(j, "subjects", "manifest");
        for (std::size_t s = 0; s < subjects.size(); ++s) {
            const std::string where = "subjects[" + std::to_string(s) + "]";
            const auto& sj = subjects[s];
            SubjectImage subject;
            subject.id = require_field(sj, "id", where).get<std::string>();
            const auto& slices = require_field(sj, "slices", where);
            for (std::size_t i = 0; i < slices.size(); ++i) {
                const std::string slice_where = where + ".slices[" + std::to_string(i) + "]";
                SliceInfo info;
                info.index = require_field(slices[i], "index", slice_where).get<int>();
                info.data_mb = require_field(slices[i], "data_mb", slice_where).get<double>();
                subject.slices.push_back(info);
            }
            manifest.subjects.push_back(std::move(subject));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest " + path.string() + ": " + e.what());
    }
    validate_manifest(manifest);
    return manifest;
}

ChunkPlan plan_subject_workflow(const SubjectImage& subject, PlanMode mode,
                                const ResourceModel& model, int gpu_groups,
                                std::int64_t overhead_s, const PlanOptions& options,
                                std::vector<std::string>* warnings) {
    validate_manifest({"", {subject}});
    if (overhead_s < 0) throw ValidationError("overhead_s must be >= 0");
    const int slice_count = static_cast<int>(subject.slices.size());
    const std::int64_t stage_walltime = overhead_s > 0 ? overhead_s : 1;

    ChunkPlan plan;
    plan.subject_id = subject.id;
    plan.mode = mode;

    Task split;
    split.id = subject.id + "_split";
    split.kind = TaskKind::split;
    split.subject_id = subject.id;
    split.command = "split-subject --subject " + subject.id;
    split.resources = {1, options.stage_mem_mb, stage_walltime, 0};
    plan.tasks.push_back(split);

    if (mode == PlanMode::cpu_slice) {
        if (!model.calibrated)
            throw ValidationError("cpu-slice planning requires a calibrated resource model");
        for (int i = 0; i < slice_count; ++i) {
            const auto est = estimate(model, subject.slices[i].data_mb);
            Task t;
            t.id = subject.id + "_compute_" + std::to_string(i + 1);
            t.kind = TaskKind::compute;
            t.subject_id = subject.id;
            t.chunk = {i};
            t.command = "process-slices --subject " + subject.id + " --slices " + std::to_string(i);
            t.resources = {1, est.mem_mb, est.time_s, 0};
            plan.tasks.push_back(std::move(t));
        }
    } else {
        if (gpu_groups < 1) throw ValidationError("gpu_groups must be >= 1");
        int groups = gpu_groups;
        if (groups > slice_count) {
            if (warnings)
                warnings->push_back("gpu_groups " + std::to_string(gpu_groups) +
                                    " clamped to slice count " + std::to_string(slice_count) +
                                    " for subject " + subject.id);
            groups = slice_count;
        }
        const auto ranges = split_slices(slice_count, groups);
        for (std::size_t g = 0; g < ranges.size(); ++g) {
            Task t;
            t.id = subject.id + "_compute_" + std::to_string(g + 1);
            t.kind = TaskKind::compute;
            t.subject_id = subject.id;
            std::int64_t chunk_time = 0;
            for (int i = ranges[g].begin; i < ranges[g].end; ++i) {
                t.chunk.push_back(i);
                if (model.calibrated) chunk_time += estimate(model, subject.slices[i].data_mb).time_s;
            }
            if (!model.calibrated) chunk_time = options.gpu_walltime_s;
            t.command = "process-slices --subject " + subject.id + " --slices " +
                        std::to_string(ranges[g].begin) + "-" + std::to_string(ranges[g].end - 1);
            t.resources = {1, options.gpu_mem_mb, chunk_time, 1};
            plan.tasks.push_back(std::move(t));
        }
    }

    Task merge;
    merge.id = subject.id + "_merge";
    merge.kind = TaskKind::merge;
    merge.subject_id = subject.id;
    merge.command = "merge-subject --subject " + subject.id;
    merge.resources = {1, options.stage_mem_mb, stage_walltime, 0};
    plan.tasks.push_back(merge);

    for (const auto& t : plan.tasks)
        if (t.kind == TaskKind::compute) plan.edges.push_back({split.id, t.id});
    for (const auto& t : plan.tasks)
        if (t.kind == TaskKind::compute) plan.edges.push_back({t.id, merge.id});

    const std::int64_t raised = default_walltime(plan);
    for (auto& t : plan.tasks)
        if (t.kind == TaskKind::compute) t.resources.walltime_s = raised;
    return plan;
}

std::vector<std::string> validate_plan(const ChunkPlan& plan,
                                       std::optional<int> expected_slice_count) {
    std::vector<std::string> violations;

    std::map<std::string, const Task*> by_id;
    std::string split_id, merge_id;
    int splits = 0, merges = 0, computes = 0;
    for (const auto& t : plan.tasks) {
        if (!by_id.emplace(t.id, &t).second)
            violations.push_back("duplicate task id '" + t.id + "'");
        if (t.subject_id != plan.subject_id)
            violations.push_back("task '" + t.id + "' belongs to subject '" + t.subject_id +
                                 "', plan is for '" + plan.subject_id + "'");
        if (t.resources.cores < 1 || t.resources.mem_mb < 1 || t.resources.walltime_s < 1 ||
            t.resources.gpus < 0)
            violations.push_back("task '" + t.id + "' has a nonpositive resource request");
        switch (t.kind) {
            case TaskKind::split:
                ++splits;
                split_id = t.id;
                if (!t.chunk.empty())
                    violations.push_back("split task '" + t.id + "' has a nonempty chunk");
                break;
            case TaskKind::merge:
                ++merges;
                merge_id = t.id;
                if (!t.chunk.empty())
                    violations.push_back("merge task '" + t.id + "' has a nonempty chunk");
                break;
            case TaskKind::compute:
                ++computes;
                if (t.chunk.empty())
                    violations.push_back("compute task '" + t.id + "' has an empty chunk");
                break;
        }
    }
    if (splits != 1)
        violations.push_back("expected exactly one split task, found " + std::to_string(splits));
    if (merges != 1)
        violations.push_back("expected exactly one merge task, found " + std::to_string(merges));
    if (computes == 0) violations.push_back("plan has no compute tasks");

    // Edge shape: split -> compute and compute -> merge only, each exactly once.
    std::set<std::string> computes_after_split, computes_before_merge;
    for (const auto& [from, to] : plan.edges) {
        auto from_it = by_id.find(from);
        auto to_it = by_id.find(to);
        if (from_it == by_id.end() || to_it == by_id.end()) {
            violations.push_back("edge " + from + " -> " + to + " references an unknown task");
            continue;
        }
        const Task& a = *from_it->second;
        const Task& b = *to_it->second;
        if (a.kind == TaskKind::split && b.kind == TaskKind::compute) {
            if (!computes_after_split.insert(to).second)
                violations.push_back("duplicate edge " + from + " -> " + to);
        } else if (a.kind == TaskKind::compute && b.kind == TaskKind::merge) {
            if (!computes_before_merge.insert(from).second)
                violations.push_back("duplicate edge " + from + " -> " + to);
        } else {
            violations.push_back("unexpected edge " + from + " -> " + to);
        }
    }
    if (splits == 1 && merges == 1) {
        for (const auto& t : plan.tasks) {
            if (t.kind != TaskKind::compute) continue;
            if (!computes_after_split.count(t.id))
                violations.push_back("compute task '" + t.id + "' does not depend on split");
            if (!computes_before_merge.count(t.id))
                violations.push_back("merge does not depend on compute task '" + t.id + "'");
        }
    }

    // Acyclicity via Kahn's algorithm.
    {
        std::map<std::string, int> indegree;
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& t : plan.tasks) indegree[t.id];
        for (const auto& [from, to] : plan.edges) {
            if (!indegree.count(from) || !indegree.count(to)) continue;
            ++indegree[to];
            out[from].push_back(to);
        }
        std::deque<std::string> ready;
        for (const auto& [id, deg] : indegree)
            if (deg == 0) ready.push_back(id);
        std::size_t processed = 0;
        while (!ready.empty()) {
            auto id = ready.front();
            ready.pop_front();
            ++processed;
            for (const auto& next : out[id])
                if (--indegree[next] == 0) ready.push_back(next);
        }
        if (processed != indegree.size()) violations.push_back("cycle detected");
    }

    // Chunk partition: disjoint and covering [0, N).
    {
        std::map<int, int> coverage;
        int max_index = -1;
        for (const auto& t : plan.tasks) {
            if (t.kind != TaskKind::compute) continue;
            for (int idx : t.chunk) {
                if (idx < 0) {
                    violations.push_back("task '" + t.id + "' references negative slice " +
                                         std::to_string(idx));
                    continue;
                }
                ++coverage[idx];
                max_index = std::max(max_index, idx);
            }
        }
        const int universe = expected_slice_count ? *expected_slice_count : max_index + 1;
        for (int idx = 0; idx < universe; ++idx) {
            auto it = coverage.find(idx);
            if (it == coverage.end())
                violations.push_back("slice " + std::to_string(idx) + " not covered");
            else if (it->second > 1)
                violations.push_back("slice " + std::to_string(idx) + " covered by " +
                                     std::to_string(it->second) + " compute tasks");
        }
        if (expected_slice_count && max_index >= *expected_slice_count)
            violations.push_back("slice " + std::to_string(max_index) +
                                 " is outside the expected range of " +
                                 std::to_string(*expected_slice_count));
    }

    return violations;
}

std::int64_t default_walltime(const ChunkPlan& plan) {
    std::int64_t max_walltime = -1;
    for (const auto& t : plan.tasks)
        if (t.kind == TaskKind::compute)
            max_walltime = std::max(max_walltime, t.resources.walltime_s);
    if (max_walltime < 0)
        throw ValidationError("plan for '" + plan.subject_id + "' has no compute tasks");
    return max_walltime;
}

ChunkPlan load_plan(const std::filesystem::path& path) {
    auto j = parse_json_file(path, "plan");
    ChunkPlan plan;
    try {
        plan.subject_id = require_field(j, "subject_id", "plan").get<std::string>();
        plan.mode = parse_plan_mode(require_field(j, "mode", "plan").get<std::string>());
        const auto& tasks = require_field(j, "tasks", "plan");
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const std::string where = "tasks[" + std::to_string(i) + "]";
            const auto& tj = tasks[i];
            Task t;
            t.id = require_field(tj, "id", where).get<std::string>();
            t.kind = parse_task_kind(require_field(tj, "kind", where).get<std::string>());
            t.subject_id = plan.subject_id;
            t.chunk = require_field(tj, "chunk", where).get<std::vector<int>>();
            t.command = require_field(tj, "command", where).get<std::string>();
            t.resources.cores = require_field(tj, "cores", where).get<int>();
            t.resources.mem_mb = require_field(tj, "mem_mb", where).get<std::int64_t>();
            t.resources.walltime_s = require_field(tj, "walltime_s", where).get<std::int64_t>();
            t.resources.gpus = require_field(tj, "gpus", where).get<int>();
            plan.tasks.push_back(std::move(t));
        }
        for (const auto& ej : require_field(j, "edges", "plan")) {
            if (!ej.is_array() || ej.size() != 2)
                throw ValidationError("plan edges must be [from, to] pairs");
            plan.edges.emplace_back(ej[0].get<std::string>(), ej[1].get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("plan " + path.string() + ": " + e.what());
    }
    return plan;
}

void save_plan(const ChunkPlan& plan, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["subject_id"] = plan.subject_id;
    j["mode"] = to_string(plan.mode);
    j["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : plan.tasks) {
        nlohmann::ordered_json tj;
        tj["id"] = t.id;
        tj["kind"] = to_string(t.kind);
        tj["chunk"] = t.chunk;
        tj["command"] = t.command;
        tj["cores"] = t.resources.cores;
        tj["mem_mb"] = t.resources.mem_mb;
        tj["walltime_s"] = t.resources.walltime_s;
        tj["gpus"] = t.resources.gpus;
        j["tasks"].push_back(std::move(tj));
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [from, to] : plan.edges) j["edges"].push_back({from, to});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write plan file: " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace slicewise
