#include "slicewise/backends.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "slicewise/errors.hpp"
#include "slicewise/timefmt.hpp"

namespace slicewise {

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::sge: return "sge";
        case BackendKind::slurm: return "slurm";
        case BackendKind::local: return "local";
    }
    throw ValidationError("unknown backend kind");
}

BackendKind parse_backend(const std::string& text) {
    if (text == "sge") return BackendKind::sge;
    if (text == "slurm") return BackendKind::slurm;
    if (text == "local") return BackendKind::local;
    throw ValidationError("unknown backend: '" + text + "'");
}

namespace {

bool env_set(const std::map<std::string, std::string>& env, const char* name) {
    auto it = env.find(name);
    return it != env.end() && !it->second.empty();
}

}  // namespace

BackendKind detect_backend(const std::map<std::string, std::string>& env,
                           std::optional<BackendKind> override) {
    if (override) return *override;
    if (env_set(env, "SLICEWISE_BACKEND")) return parse_backend(env.at("SLICEWISE_BACKEND"));
    if (env_set(env, "SLURM_CONF") || env_set(env, "SLURM_CLUSTER_NAME")) return BackendKind::slurm;
    if (env_set(env, "SGE_ROOT")) return BackendKind::sge;
    return BackendKind::local;
}

std::map<std::string, std::string> capture_backend_env() {
    std::map<std::string, std::string> env;
    for (const char* name : {"SLICEWISE_BACKEND", "SLURM_CONF", "SLURM_CLUSTER_NAME", "SGE_ROOT"}) {
        if (const char* value = std::getenv(name)) env[name] = value;
    }
    return env;
}

namespace {

struct PlanParts {
    const Task* split = nullptr;
    const Task* merge = nullptr;
    std::vector<const Task*> computes;
};

PlanParts dissect(const ChunkPlan& plan) {
    auto violations = validate_plan(plan);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "plan for '" << plan.subject_id << "' is invalid:";
        for (const auto& v : violations) msg << "\n  - " << v;
        throw ValidationError(msg.str());
    }
    PlanParts parts;
    for (const auto& t : plan.tasks) {
        switch (t.kind) {
            case TaskKind::split: parts.split = &t; break;
            case TaskKind::merge: parts.merge = &t; break;
            case TaskKind::compute: parts.computes.push_back(&t); break;
        }
    }
    return parts;
}

// An array job carries one request for every element: take the max per field.
ResourceRequest array_request(const std::vector<const Task*>& computes) {
    ResourceRequest req = computes.front()->resources;
    for (const Task* t : computes) {
        req.cores = std::max(req.cores, t->resources.cores);
        req.mem_mb = std::max(req.mem_mb, t->resources.mem_mb);
        req.walltime_s = std::max(req.walltime_s, t->resources.walltime_s);
        req.gpus = std::max(req.gpus, t->resources.gpus);
    }
    return req;
}

void slurm_directives(std::ostream& out, const std::string& job_name, const std::string& partition,
                      const ResourceRequest& req) {
    out << "#SBATCH --job-name=" << job_name << '\n';
    out << "#SBATCH --partition=" << partition << '\n';
    out << "#SBATCH --ntasks=1\n";
    out << "#SBATCH --cpus-per-task=" << req.cores << '\n';
    out << "#SBATCH --mem=" << req.mem_mb << "M\n";
    out << "#SBATCH --time=" << format_slurm_time(req.walltime_s) << '\n';
    if (req.gpus > 0) out << "#SBATCH --gres=gpu:" << req.gpus << '\n';
}

void sge_directives(std::ostream& out, const std::string& job_name, const std::string& partition,
                    const ResourceRequest& req) {
    out << "#$ -N " << job_name << '\n';
    out << "#$ -q " << partition << '\n';
    out << "#$ -pe smp " << req.cores << '\n';
    out << "#$ -l h_vmem=" << req.mem_mb << "M\n";
    out << "#$ -l h_rt=" << format_sge_time(req.walltime_s) << '\n';
}

std::string stage_script(BackendKind backend, const Task& task, const std::string& partition,
                         const char* dependency_placeholder) {
    std::ostringstream out;
    out << "#!/bin/bash\n";
    if (backend == BackendKind::slurm) {
        slurm_directives(out, task.id, partition, task.resources);
        if (dependency_placeholder)
            out << "#SBATCH --dependency=afterok:" << dependency_placeholder << '\n';
    } else {
        sge_directives(out, task.id, partition, task.resources);
        if (dependency_placeholder) out << "#$ -hold_jid " << dependency_placeholder << '\n';
    }
    out << "set -euo pipefail\n";
    out << task.command << '\n';
    return out.str();
}

std::string compute_script(BackendKind backend, const ChunkPlan& plan,
                           const std::vector<const Task*>& computes,
                           const std::string& partition) {
    const auto req = array_request(computes);
    std::ostringstream out;
    out << "#!/bin/bash\n";
    if (backend == BackendKind::slurm) {
        slurm_directives(out, plan.subject_id + "_compute", partition, req);
        out << "#SBATCH --array=1-" << computes.size() << '\n';
        out << "#SBATCH --dependency=afterok:$SPLIT_JOB_ID\n";
        out << "set -euo pipefail\n";
        out << "exec bash -c \"$(sed -n \"${SLURM_ARRAY_TASK_ID}p\" commands.txt)\"\n";
    } else {
        sge_directives(out, plan.subject_id + "_compute", partition, req);
        out << "#$ -t 1-" << computes.size() << '\n';
        out << "#$ -hold_jid $SPLIT_JOB_ID\n";
        out << "set -euo pipefail\n";
        out << "exec bash -c \"$(sed -n \"${SGE_TASK_ID}p\" commands.txt)\"\n";
    }
    return out.str();
}

std::string submit_driver(BackendKind backend) {
    std::ostringstream out;
    out << "#!/bin/bash\n";
    out << "set -euo pipefail\n";
    out << "cd \"$(dirname \"$0\")\"\n";
    if (backend == BackendKind::slurm) {
        out << "SPLIT_JOB_ID=$(sbatch --parsable split.sh)\n";
        out << "sed \"s/\\$SPLIT_JOB_ID/${SPLIT_JOB_ID}/\" compute.sh > .compute.resolved.sh\n";
        out << "COMPUTE_JOB_ID=$(sbatch --parsable .compute.resolved.sh)\n";
        out << "sed \"s/\\$COMPUTE_JOB_ID/${COMPUTE_JOB_ID}/\" merge.sh > .merge.resolved.sh\n";
        out << "MERGE_JOB_ID=$(sbatch --parsable .merge.resolved.sh)\n";
    } else {
        out << "SPLIT_JOB_ID=$(qsub -terse split.sh)\n";
        out << "SPLIT_JOB_ID=${SPLIT_JOB_ID%%.*}\n";
        out << "sed \"s/\\$SPLIT_JOB_ID/${SPLIT_JOB_ID}/\" compute.sh > .compute.resolved.sh\n";
        out << "COMPUTE_JOB_ID=$(qsub -terse .compute.resolved.sh)\n";
        out << "COMPUTE_JOB_ID=${COMPUTE_JOB_ID%%.*}\n";
        out << "sed \"s/\\$COMPUTE_JOB_ID/${COMPUTE_JOB_ID}/\" merge.sh > .merge.resolved.sh\n";
        out << "MERGE_JOB_ID=$(qsub -terse .merge.resolved.sh)\n";
        out << "MERGE_JOB_ID=${MERGE_JOB_ID%%.*}\n";
    }
    out << "echo \"submitted split=${SPLIT_JOB_ID} compute=${COMPUTE_JOB_ID} "
           "merge=${MERGE_JOB_ID}\"\n";
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string write_commands_manifest(const ChunkPlan& plan) {
    std::string text;
    for (const auto& t : plan.tasks) {
        if (t.kind != TaskKind::compute) continue;
        if (t.command.find('\n') != std::string::npos)
            throw ValidationError("command of task '" + t.id + "' contains a newline");
        text += t.command;
        text += '\n';
    }
    return text;
}

std::vector<std::filesystem::path> emit_submission_scripts(const ChunkPlan& plan,
                                                           BackendKind backend,
                                                           const std::string& partition,
                                                           const std::filesystem::path& outdir) {
    if (backend == BackendKind::local)
        throw ValidationError("the local backend has no submission scripts; use run-local");
    if (partition.empty()) throw ValidationError("partition name must not be empty");
    const auto parts = dissect(plan);
    const std::string manifest = write_commands_manifest(plan);

    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory " + outdir.string() + ": " + ec.message());

    const std::vector<std::filesystem::path> files = {
        outdir / "split.sh", outdir / "compute.sh", outdir / "merge.sh", outdir / "commands.txt",
        outdir / "submit_all.sh"};
    write_text(files[0], stage_script(backend, *parts.split, partition, nullptr));
    write_text(files[1], compute_script(backend, plan, parts.computes, partition));
    write_text(files[2], stage_script(backend, *parts.merge, partition, "$COMPUTE_JOB_ID"));
    write_text(files[3], manifest);
    write_text(files[4], submit_driver(backend));

    std::filesystem::permissions(files[4],
                                 std::filesystem::perms::owner_exec |
                                     std::filesystem::perms::group_exec,
                                 std::filesystem::perm_options::add, ec);
    return files;
}

}  // namespace slicewise
