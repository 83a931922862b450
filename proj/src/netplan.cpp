#include "slicewise/netplan.hpp"

#include <fstream>

#include "json.hpp"
#include "slicewise/errors.hpp"

namespace slicewise {

TransferPlan plan_transfer(const NetworkPath& path, double client_rate_mbps,
                           double safety_fraction, double reserved_mbps) {
    if (path.links.empty()) throw ValidationError("network path has no links");
    if (client_rate_mbps <= 0.0) throw ValidationError("client_rate_mbps must be > 0");
    if (safety_fraction <= 0.0 || safety_fraction > 1.0)
        throw ValidationError("safety_fraction must be in (0, 1]");
    if (reserved_mbps < 0.0) throw ValidationError("reserved_mbps must be >= 0");

    TransferPlan plan;
    plan.bottleneck_mbps = path.links[0].capacity_mbps;
    plan.bottleneck_link = path.links[0].name;
    for (const auto& link : path.links) {
        if (link.capacity_mbps <= 0.0)
            throw ValidationError("link '" + link.name + "' has nonpositive capacity");
        if (link.capacity_mbps < plan.bottleneck_mbps) {
            plan.bottleneck_mbps = link.capacity_mbps;
            plan.bottleneck_link = link.name;
        }
    }
    if (reserved_mbps >= plan.bottleneck_mbps)
        throw ValidationError("reserved_mbps (" + std::to_string(reserved_mbps) +
                              ") is at or above the bottleneck capacity (" +
                              std::to_string(plan.bottleneck_mbps) + ")");

    const double usable = plan.bottleneck_mbps - reserved_mbps;
    plan.saturates = client_rate_mbps >= usable;
    plan.recommended_rate_mbps = plan.saturates ? safety_fraction * usable : client_rate_mbps;
    return plan;
}

NetworkPath load_network_path(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open links file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed links file " + file.string() + ": " + e.what());
    }
    NetworkPath path;
    try {
        for (const auto& lj : j.at("links")) {
            path.links.push_back(
                {lj.at("name").get<std::string>(), lj.at("capacity_mbps").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("links file " + file.string() + ": " + e.what());
    }
    return path;
}

}  // namespace slicewise
