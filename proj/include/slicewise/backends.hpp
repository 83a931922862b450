#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicewise/workflow.hpp"

namespace slicewise {

enum class BackendKind { sge, slurm, local };

std::string to_string(BackendKind kind);
BackendKind parse_backend(const std::string& text);

// Detection precedence: explicit override, then SLICEWISE_BACKEND, then Slurm
// markers (SLURM_CONF or SLURM_CLUSTER_NAME), then SGE_ROOT, else local.
// Variables set to the empty string count as absent.
BackendKind detect_backend(const std::map<std::string, std::string>& env,
                           std::optional<BackendKind> override = std::nullopt);

// Reads the process environment for the variables detection cares about.
std::map<std::string, std::string> capture_backend_env();

// One compute command per line, line N = compute task N in plan order,
// newline terminated. Array submissions index into this text.
std::string write_commands_manifest(const ChunkPlan& plan);

// Writes split.sh, compute.sh, merge.sh, commands.txt, and a submit_all.sh
// driver into outdir. Returns the paths in that order. Directive syntax is
// fixed per dialect; the compute script is an array job over the manifest.
std::vector<std::filesystem::path> emit_submission_scripts(const ChunkPlan& plan,
                                                           BackendKind backend,
                                                           const std::string& partition,
                                                           const std::filesystem::path& outdir);

}  // namespace slicewise
