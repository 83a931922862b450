#pragma once

#include <cstdint>
#include <string>

namespace slicewise {

// Slurm walltime syntax, always in the D-HH:MM:SS form (540000 -> "6-06:00:00").
std::string format_slurm_time(std::int64_t seconds);

// SGE h_rt syntax, HH:MM:SS with hours unbounded (540000 -> "150:00:00").
std::string format_sge_time(std::int64_t seconds);

// Floored integer ratio with an "x" suffix (236.25 -> "236x").
std::string format_speedup(double ratio);

}  // namespace slicewise
