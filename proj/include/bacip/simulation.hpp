#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bacip/consensus.hpp"

namespace bacip {

enum class ByzantineBehavior { Silent, EquivocateLeader, RandomVotes };

std::string to_string(ByzantineBehavior behavior);
std::optional<ByzantineBehavior> parse_byzantine_behavior(std::string_view name);

struct EdgeDelay {
    uint32_t from = 0;
    uint32_t to = 0;
    uint32_t delay = 1;
};

// Everything that determines a run; together with the seed it makes runs
// bit-reproducible.
struct Scenario {
    uint32_t n = 4;
    std::vector<std::pair<uint32_t, ByzantineBehavior>> byzantine;
    uint64_t seed = 1;
    uint32_t roundTimeout = 12;
    uint32_t defaultDelay = 1;
    std::vector<EdgeDelay> edges;
    double dropRate = 0.0;
    uint32_t txCount = 0;
    uint32_t targetHeights = 8;  // engines stop here; the run ends when all honest arrive
    uint32_t maxTicks = 4000;
    size_t blockLimit = 8;

    nlohmann::json to_json() const;
    static std::optional<Scenario> from_json(const nlohmann::json& j);
};

struct NodeReport {
    uint32_t node = 0;
    bool byzantine = false;
    std::string behavior;  // empty for honest nodes
    uint64_t heightsFinalized = 0;
    std::string chainDigest;  // hex digest over the finalized hash sequence
    uint64_t livenessPer1000Ticks = 0;
};

struct SimReport {
    uint32_t n = 0;
    uint32_t f = 0;
    uint32_t quorum = 0;
    uint64_t seed = 0;
    bool expectUnsafe = false;  // declared faults exceed the tolerated bound
    uint64_t safetyViolations = 0;
    uint64_t ticksElapsed = 0;
    uint64_t messagesSent = 0;
    uint64_t messagesDropped = 0;
    uint64_t messagesDiscarded = 0;  // bad signature / stale coordinates
    bool honestNonEquivocation = true;
    std::vector<NodeReport> perNode;

    nlohmann::json to_json() const;
};

SimReport run_simulation(const Scenario& scenario);

// Report plus the honest nodes' full finalized chains, for replay checks.
struct SimResult {
    SimReport report;
    std::map<uint32_t, std::vector<Block>> honestChains;
};

SimResult run_simulation_full(const Scenario& scenario);

// The genesis and schedule a simulation runs against, exposed so tests can
// replay finalized chains independently.
struct SimFixture {
    Genesis genesis;
    std::vector<KeyPair> validatorKeys;
    KeyPair issuerKey;
    std::vector<Transaction> txSchedule;
};

SimFixture build_sim_fixture(const Scenario& scenario);

}  // namespace bacip
