#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slicewise/resmodel.hpp"

namespace slicewise {

// One 2-D plane of a subject volume; data_mb of 0 means an all-mask slice.
struct SliceInfo {
    int index = 0;
    double data_mb = 0.0;
};

struct SubjectImage {
    std::string id;
    std::vector<SliceInfo> slices;
};

struct DatasetManifest {
    std::string dataset;
    std::vector<SubjectImage> subjects;
};

// The cores/memory/walltime/gpus quadruple of one batch job request.
struct ResourceRequest {
    int cores = 1;
    std::int64_t mem_mb = 1;
    std::int64_t walltime_s = 1;
    int gpus = 0;
};

enum class TaskKind { split, compute, merge };

struct Task {
    std::string id;
    TaskKind kind = TaskKind::compute;
    std::string subject_id;
    std::vector<int> chunk;  // slice indices; empty for split/merge
    std::string command;
    ResourceRequest resources;
};

enum class PlanMode { cpu_slice, gpu_group };

// Split -> parallel compute -> merge task DAG for one subject.
struct ChunkPlan {
    std::string subject_id;
    PlanMode mode = PlanMode::cpu_slice;
    std::vector<Task> tasks;
    std::vector<std::pair<std::string, std::string>> edges;
};

struct PlanOptions {
    std::int64_t gpu_mem_mb = 8192;       // per GPU compute job
    std::int64_t gpu_walltime_s = 3600;   // fallback when no calibrated model
    std::int64_t stage_mem_mb = 1024;     // split and merge requests
};

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);
std::string to_string(PlanMode mode);
PlanMode parse_plan_mode(const std::string& text);

// Throws ValidationError naming the offending field on any invariant breach.
void validate_manifest(const DatasetManifest& manifest);

// JSON: {"dataset": ..., "subjects": [{"id", "slices": [{"index", "data_mb"}]}]}
DatasetManifest load_dataset_manifest(const std::filesystem::path& path);

// Build the split -> compute -> merge DAG for one subject. cpu-slice mode
// creates one compute task per slice sized by the calibrated model; gpu-group
// mode creates one task per contiguous slice group with one GPU each.
// gpu_groups larger than the slice count is clamped, with a note appended to
// `warnings` when provided. Every compute walltime is raised to the plan's
// default walltime (the largest estimate).
ChunkPlan plan_subject_workflow(const SubjectImage& subject, PlanMode mode,
                                const ResourceModel& model, int gpu_groups = 1,
                                std::int64_t overhead_s = 60, const PlanOptions& options = {},
                                std::vector<std::string>* warnings = nullptr);

// All invariant violations, empty when the plan is well-formed. When
// expected_slice_count is given, coverage is checked against it instead of the
// largest index seen in the chunks.
std::vector<std::string> validate_plan(const ChunkPlan& plan,
                                       std::optional<int> expected_slice_count = std::nullopt);

// Largest compute walltime in the plan; the value every compute request is
// raised to. Throws if the plan has no compute tasks.
std::int64_t default_walltime(const ChunkPlan& plan);

// JSON: {"subject_id", "mode", "tasks": [{"id","kind","chunk","command",
// "cores","mem_mb","walltime_s","gpus"}], "edges": [["a","b"], ...]}
ChunkPlan load_plan(const std::filesystem::path& path);
void save_plan(const ChunkPlan& plan, const std::filesystem::path& path);

}  // namespace slicewise
