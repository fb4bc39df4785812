#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace llnsim {

using NodeId = std::int32_t;
inline constexpr NodeId kBroadcast = -1;

// Routing control messages. Fields the protocol logic does not consult
// (prefix contents and the like) are carried symbolically.
namespace msg {

struct Dio {
    std::uint8_t instance_id = 0;
    NodeId dodag_id = 0;       // sink node id
    std::uint16_t version = 1;
    std::uint16_t rank = 0;    // sender's rank at send time
    std::uint8_t ocp = 1;      // 0 = OF0, 1 = MRHOF
};

struct Dao {
    std::uint8_t instance_id = 0;
    NodeId target = 0;         // prefix owner being advertised
    std::uint32_t dao_seq = 0;
};

struct Dis {};

struct Rs {};

struct Ra {
    std::string prefix = "fd00::/64";  // PIO; CO and ABRO are implied by it
};

struct Ns {
    NodeId aro_node = 0;       // address registration: node id doubles as link address
};

struct Na {
    bool cache_full = false;   // registration status
};

}  // namespace msg

using ControlMsg = std::variant<msg::Dio, msg::Dao, msg::Dis, msg::Rs, msg::Ra, msg::Ns, msg::Na>;

// Application payload header riding on data frames.
struct DataHeader {
    NodeId origin = 0;
    std::uint32_t seq = 0;
    std::uint32_t hops = 0;  // links traversed so far
};

}  // namespace llnsim
