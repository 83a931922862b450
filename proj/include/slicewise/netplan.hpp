#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace slicewise {

struct NetworkLink {
    std::string name;
    double capacity_mbps = 0.0;
};

// Links along the transfer path, client side first.
struct NetworkPath {
    std::vector<NetworkLink> links;
};

struct TransferPlan {
    double bottleneck_mbps = 0.0;
    std::string bottleneck_link;
    bool saturates = false;
    double recommended_rate_mbps = 0.0;
};

// Bottleneck = minimum link capacity (first minimal link named). The flow
// saturates when client_rate >= bottleneck - reserved; only then is the rate
// throttled, to safety_fraction of the usable headroom.
TransferPlan plan_transfer(const NetworkPath& path, double client_rate_mbps,
                           double safety_fraction = 0.7, double reserved_mbps = 0.0);

// JSON: {"links": [{"name": "login-10g", "capacity_mbps": 10000}, ...]}
NetworkPath load_network_path(const std::filesystem::path& path);

}  // namespace slicewise
