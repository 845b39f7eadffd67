#include "bacip/simulation.hpp"

#include <algorithm>
#include <deque>

namespace bacip {

using nlohmann::json;

std::string to_string(ByzantineBehavior behavior) {
    switch (behavior) {
        case ByzantineBehavior::Silent: return "Silent";
        case ByzantineBehavior::EquivocateLeader: return "EquivocateLeader";
        case ByzantineBehavior::RandomVotes: return "RandomVotes";
    }
    return "unknown";
}

std::optional<ByzantineBehavior> parse_byzantine_behavior(std::string_view name) {
    for (auto b : {ByzantineBehavior::Silent, ByzantineBehavior::EquivocateLeader,
                   ByzantineBehavior::RandomVotes}) {
        if (to_string(b) == name) return b;
    }
    return std::nullopt;
}

json Scenario::to_json() const {
    json j;
    j["n"] = n;
    json byz = json::array();
    for (const auto& [node, behavior] : byzantine) {
        json entry;
        entry["node"] = node;
        entry["behavior"] = to_string(behavior);
        byz.push_back(std::move(entry));
    }
    j["byzantine"] = std::move(byz);
    j["seed"] = seed;
    j["roundTimeout"] = roundTimeout;
    json delays;
    delays["default"] = defaultDelay;
    json edgeList = json::array();
    for (const auto& e : edges) {
        json entry;
        entry["from"] = e.from;
        entry["to"] = e.to;
        entry["delay"] = e.delay;
        edgeList.push_back(std::move(entry));
    }
    delays["edges"] = std::move(edgeList);
    j["delays"] = std::move(delays);
    j["dropRate"] = dropRate;
    j["txCount"] = txCount;
    j["targetHeights"] = targetHeights;
    j["maxTicks"] = maxTicks;
    j["blockLimit"] = blockLimit;
    return j;
}

std::optional<Scenario> Scenario::from_json(const json& j) {
    if (!j.is_object() || !j.contains("n") || !j["n"].is_number_unsigned()) return std::nullopt;
    Scenario s;
    s.n = j["n"].get<uint32_t>();
    if (s.n == 0) return std::nullopt;
    if (auto it = j.find("byzantine"); it != j.end()) {
        if (!it->is_array()) return std::nullopt;
        for (const auto& entry : *it) {
            if (!entry.is_object() || !entry.contains("node")) return std::nullopt;
            auto behavior = parse_byzantine_behavior(entry.value("behavior", ""));
            if (!behavior) return std::nullopt;
            uint32_t node = entry["node"].get<uint32_t>();
            if (node >= s.n) return std::nullopt;
            s.byzantine.emplace_back(node, *behavior);
        }
    }
    s.seed = j.value("seed", 1u);
    s.roundTimeout = j.value("roundTimeout", 12u);
    if (auto it = j.find("delays"); it != j.end() && it->is_object()) {
        s.defaultDelay = it->value("default", 1u);
        if (auto edges = it->find("edges"); edges != it->end() && edges->is_array()) {
            for (const auto& entry : *edges) {
                EdgeDelay e;
                e.from = entry.value("from", 0u);
                e.to = entry.value("to", 0u);
                e.delay = entry.value("delay", 1u);
                if (e.from >= s.n || e.to >= s.n) return std::nullopt;
                s.edges.push_back(e);
            }
        }
    }
    if (s.defaultDelay == 0) s.defaultDelay = 1;
    s.dropRate = j.value("dropRate", 0.0);
    if (s.dropRate < 0.0 || s.dropRate > 1.0) return std::nullopt;
    s.txCount = j.value("txCount", 0u);
    s.targetHeights = j.value("targetHeights", 8u);
    s.maxTicks = j.value("maxTicks", 4000u);
    s.blockLimit = j.value("blockLimit", size_t{8});
    return s;
}

json SimReport::to_json() const {
    json j;
    j["n"] = n;
    j["f"] = f;
    j["quorum"] = quorum;
    j["seed"] = seed;
    j["expectUnsafe"] = expectUnsafe;
    j["safetyViolations"] = safetyViolations;
    j["ticksElapsed"] = ticksElapsed;
    j["messagesSent"] = messagesSent;
    j["messagesDropped"] = messagesDropped;
    j["messagesDiscarded"] = messagesDiscarded;
    j["honestNonEquivocation"] = honestNonEquivocation;
    json nodes = json::array();
    for (const auto& node : perNode) {
        json entry;
        entry["node"] = node.node;
        entry["byzantine"] = node.byzantine;
        if (!node.behavior.empty()) entry["behavior"] = node.behavior;
        entry["heightsFinalized"] = node.heightsFinalized;
        entry["chainDigest"] = node.chainDigest;
        entry["livenessPer1000Ticks"] = node.livenessPer1000Ticks;
        nodes.push_back(std::move(entry));
    }
    j["perNode"] = std::move(nodes);
    return j;
}

namespace {

constexpr const char* kIssuerDid = "did:bacip:sim-issuer";

CredentialDocument make_sim_document(RandomSource& rng, uint32_t index) {
    CredentialDocument doc;
    doc.context = "https://schema.org";
    doc.type = "EducationalOccupationalCredential";
    doc.id = generate_credential_id(rng).uuid;
    doc.issuer = kIssuerDid;
    doc.recipient.id = "did:bacip:student-" + std::to_string(index);
    doc.recipient.name = "Sim Student " + std::to_string(index);
    doc.credentialSubject["degree"] = "BSc Simulation " + std::to_string(index);
    doc.issueDate = "2024-01-01";
    doc.expirationDate = "2034-01-01";
    return doc;
}

}  // namespace

SimFixture build_sim_fixture(const Scenario& scenario) {
    SimFixture fixture;
    DeterministicRng keyRng(scenario.seed * 2654435761u + 17);

    fixture.issuerKey =
        generate_keypair(SignatureAlgorithm::Ed25519, keyRng, std::string(kIssuerDid) + "#key-1");
    for (uint32_t i = 0; i < scenario.n; ++i) {
        std::string did = "did:bacip:validator-" + std::to_string(i);
        fixture.validatorKeys.push_back(
            generate_keypair(SignatureAlgorithm::Ed25519, keyRng, did + "#key-1"));
    }

    fixture.genesis.admin = "did:bacip:admin";
    IdentityRecord issuer;
    issuer.did = kIssuerDid;
    issuer.keyId = fixture.issuerKey.keyId;
    issuer.algorithm = SignatureAlgorithm::Ed25519;
    issuer.publicKey = fixture.issuerKey.publicKey;
    fixture.genesis.identities.push_back(issuer);
    fixture.genesis.roles[kIssuerDid] = permissions::kIssue | permissions::kRevoke;

    DeterministicRng txRng(scenario.seed * 0x9e3779b97f4a7c15ull + 3);
    for (uint32_t i = 0; i < scenario.txCount; ++i) {
        CredentialDocument doc = make_sim_document(txRng, i);
        doc.proof = sign_message(canonicalize(doc, true), fixture.issuerKey, doc.issueDate);
        IssuePayload payload;
        payload.storedRef = StoredRef{content_hash(canonicalize(doc, false)), true};
        payload.document = std::move(doc);
        fixture.txSchedule.push_back(make_signed_transaction(
            TxKind::IssueCredential, kIssuerDid, std::move(payload), fixture.issuerKey));
    }
    return fixture;
}

namespace {

struct PendingDelivery {
    uint64_t dueTick = 0;
    uint64_t seq = 0;
    uint32_t to = 0;
    int toBrain = 0;  // split-brain routing for equivocating nodes
    ConsensusMessage msg;

    bool operator<(const PendingDelivery& other) const {
        return std::tie(dueTick, seq) < std::tie(other.dueTick, other.seq);
    }
};

class Simulator {
public:
    explicit Simulator(const Scenario& scenario)
        : scenario_(scenario), fixture_(build_sim_fixture(scenario)), rng_(scenario.seed) {
        dropThreshold_ = static_cast<uint64_t>(
            scenario.dropRate * static_cast<double>(UINT64_MAX));
        for (uint32_t from = 0; from < scenario_.n; ++from) {
            delays_.emplace_back(scenario_.n, scenario_.defaultDelay);
        }
        for (const auto& e : scenario_.edges) delays_[e.from][e.to] = std::max(1u, e.delay);

        ConsensusConfig config;
        config.n = scenario_.n;
        config.roundTimeout = scenario_.roundTimeout;
        config.blockLimit = scenario_.blockLimit;
        config.proposeEmptyBlocks = true;
        config.stopHeight = scenario_.targetHeights;
        for (uint32_t i = 0; i < scenario_.n; ++i) {
            config.validators.push_back({fixture_.validatorKeys[i].keyId,
                                         SignatureAlgorithm::Ed25519,
                                         fixture_.validatorKeys[i].publicKey});
        }

        behaviors_.assign(scenario_.n, std::nullopt);
        for (const auto& [node, behavior] : scenario_.byzantine) behaviors_[node] = behavior;

        for (uint32_t i = 0; i < scenario_.n; ++i) {
            auto behavior = behaviors_[i];
            if (behavior == ByzantineBehavior::EquivocateLeader) {
                // Split brain: two engines share the key; each half of the
                // network sees a consistent but conflicting validator.
                brains_[i].emplace_back(config, i, fixture_.validatorKeys[i], fixture_.genesis);
                brains_[i].emplace_back(config, i, fixture_.validatorKeys[i], fixture_.genesis);
            } else if (!behavior) {
                brains_[i].emplace_back(config, i, fixture_.validatorKeys[i], fixture_.genesis);
            }
            // Silent and RandomVotes nodes run no engine.
        }
    }

    SimResult run_full() {
        SimResult result;
        result.report = run();
        result.honestChains = finalizedBlocks_;
        return result;
    }

    SimReport run() {
        // Seed mempools and kick off the first proposals.
        for (uint32_t i = 0; i < scenario_.n; ++i) {
            for (size_t b = 0; b < brains_[i].size(); ++b) {
                route_output(i, static_cast<int>(b),
                             brains_[i][b].submit_transactions(fixture_.txSchedule));
                route_output(i, static_cast<int>(b), brains_[i][b].start());
            }
        }

        uint64_t tick = 0;
        for (; tick < scenario_.maxTicks; ++tick) {
            now_ = tick;
            deliver_due(tick);
            for (uint32_t i = 0; i < scenario_.n; ++i) {
                if (behaviors_[i] == ByzantineBehavior::RandomVotes) {
                    random_votes(i);
                    continue;
                }
                for (size_t b = 0; b < brains_[i].size(); ++b) {
                    route_output(i, static_cast<int>(b), brains_[i][b].on_tick());
                }
            }
            if (all_honest_done()) {
                ++tick;
                break;
            }
        }
        return build_report(tick);
    }

private:
    bool is_honest(uint32_t node) const { return !behaviors_[node].has_value(); }

    bool all_honest_done() const {
        for (uint32_t i = 0; i < scenario_.n; ++i) {
            if (!is_honest(i)) continue;
            auto it = finalizedHashes_.find(i);
            if (it == finalizedHashes_.end() || it->second.size() < scenario_.targetHeights) {
                return false;
            }
        }
        return true;
    }

    void deliver_due(uint64_t tick) {
        // queue_ is kept sorted by (dueTick, seq).
        while (!queue_.empty() && queue_.begin()->dueTick <= tick) {
            PendingDelivery delivery = *queue_.begin();
            queue_.erase(queue_.begin());
            uint32_t to = delivery.to;
            if (behaviors_[to] == ByzantineBehavior::Silent ||
                behaviors_[to] == ByzantineBehavior::RandomVotes) {
                continue;  // no engine to deliver to
            }
            size_t brain = std::min<size_t>(delivery.toBrain, brains_[to].size() - 1);
            route_output(to, static_cast<int>(brain),
                         brains_[to][brain].handle_message(delivery.msg));
        }
    }

    // Which brain of an equivocating node a peer talks to: the low half of
    // the network reaches brain 0, the high half brain 1.
    int brain_for_peer(uint32_t peer) const { return peer < scenario_.n / 2 ? 0 : 1; }

    void schedule(uint32_t from, int fromBrain, uint32_t to, const ConsensusMessage& msg) {
        ++messagesSent_;
        if (dropThreshold_ > 0 && rng_.next_u64() < dropThreshold_) {
            ++messagesDropped_;
            return;
        }
        PendingDelivery delivery;
        delivery.dueTick = now_ + delays_[from][to];
        delivery.seq = nextSeq_++;
        delivery.to = to;
        delivery.toBrain = brain_for_peer(from);
        delivery.msg = msg;
        queue_.insert(delivery);
        (void)fromBrain;
    }

    void route_output(uint32_t from, int fromBrain, ConsensusEngine::Output output) {
        for (const auto& finalized : output.finalized) {
            if (brains_[from].size() > 1 && fromBrain > 0) continue;  // count one brain's chain
            record_finalized(from, finalized.block);
        }
        for (const auto& msg : output.outbound) {
            log_sent(from, msg);
            if (brains_[from].size() > 1) {
                // Each brain only speaks to its own half.
                for (uint32_t to = 0; to < scenario_.n; ++to) {
                    if (to == from) continue;
                    if (brain_for_peer(to) != fromBrain) continue;
                    schedule(from, fromBrain, to, msg);
                }
            } else {
                for (uint32_t to = 0; to < scenario_.n; ++to) {
                    if (to == from) continue;
                    schedule(from, fromBrain, to, msg);
                }
            }
        }
    }

    void record_finalized(uint32_t node, const Block& block) {
        finalizedHashes_[node].push_back(block_hash(block));
        if (is_honest(node)) finalizedBlocks_[node].push_back(block);
    }

    void log_sent(uint32_t from, const ConsensusMessage& msg) {
        if (msg.kind == MsgKind::Prepare && is_honest(from)) {
            auto key = std::make_pair(msg.height, msg.round);
            auto [it, inserted] = honestPrepares_[from].emplace(key, msg.blockHash);
            if (!inserted && it->second != msg.blockHash) honestNonEquivocation_ = false;
        }
        msgLog_.push_back({from, msg.kind});
    }

    void random_votes(uint32_t node) {
        // Fires sporadically: properly signed votes with arbitrary contents.
        if (rng_.next_u64() % 4 != 0) return;
        ConsensusMessage msg;
        uint64_t pick = rng_.next_u64();
        msg.kind = pick % 3 == 0   ? MsgKind::Prepare
                   : pick % 3 == 1 ? MsgKind::Commit
                                   : MsgKind::RoundChange;
        msg.height = 1 + rng_.next_u64() % (scenario_.targetHeights + 1);
        msg.round = static_cast<uint32_t>(rng_.next_u64() % 3);
        rng_.fill(msg.blockHash);
        msg.sender = node;
        ConsensusMessage signedMsg = make_signed_message(std::move(msg), fixture_.validatorKeys[node]);
        log_sent(node, signedMsg);
        uint32_t to = static_cast<uint32_t>(rng_.next_u64() % scenario_.n);
        if (to != node) schedule(node, 0, to, signedMsg);
    }

    SimReport build_report(uint64_t ticks) {
        SimReport report;
        report.n = scenario_.n;
        report.f = (scenario_.n - 1) / 3;
        report.quorum = quorum_size(scenario_.n);
        report.seed = scenario_.seed;
        report.expectUnsafe = scenario_.byzantine.size() > report.f;
        report.ticksElapsed = ticks;
        report.messagesSent = messagesSent_;
        report.messagesDropped = messagesDropped_;
        report.honestNonEquivocation = honestNonEquivocation_;
        for (uint32_t i = 0; i < scenario_.n; ++i) {
            for (const auto& brain : brains_[i]) {
                report.messagesDiscarded += brain.discarded_messages();
            }
        }

        // Safety: at each height, all honest finalized hashes must agree.
        uint64_t maxHeight = 0;
        for (uint32_t i = 0; i < scenario_.n; ++i) {
            if (is_honest(i)) maxHeight = std::max<uint64_t>(maxHeight, finalizedHashes_[i].size());
        }
        for (uint64_t h = 0; h < maxHeight; ++h) {
            std::set<Hash32> hashes;
            for (uint32_t i = 0; i < scenario_.n; ++i) {
                if (!is_honest(i)) continue;
                if (h < finalizedHashes_[i].size()) hashes.insert(finalizedHashes_[i][h]);
            }
            if (hashes.size() > 1) ++report.safetyViolations;
        }

        for (uint32_t i = 0; i < scenario_.n; ++i) {
            NodeReport node;
            node.node = i;
            node.byzantine = !is_honest(i);
            if (behaviors_[i]) node.behavior = to_string(*behaviors_[i]);
            node.heightsFinalized = finalizedHashes_[i].size();
            Bytes digestInput;
            for (const auto& h : finalizedHashes_[i]) {
                digestInput.insert(digestInput.end(), h.begin(), h.end());
            }
            node.chainDigest = hash_hex(sha256(digestInput));
            node.livenessPer1000Ticks =
                ticks == 0 ? 0 : node.heightsFinalized * 1000 / ticks;
            report.perNode.push_back(std::move(node));
        }
        return report;
    }

    Scenario scenario_;
    SimFixture fixture_;
    DeterministicRng rng_;
    uint64_t dropThreshold_ = 0;
    std::vector<std::vector<uint32_t>> delays_;
    std::vector<std::optional<ByzantineBehavior>> behaviors_;
    std::map<uint32_t, std::vector<ConsensusEngine>> brains_;
    std::multiset<PendingDelivery> queue_;
    std::map<uint32_t, std::vector<Hash32>> finalizedHashes_;
    std::map<uint32_t, std::vector<Block>> finalizedBlocks_;
    std::map<uint32_t, std::map<std::pair<uint64_t, uint32_t>, Hash32>> honestPrepares_;
    std::vector<std::pair<uint32_t, MsgKind>> msgLog_;
    bool honestNonEquivocation_ = true;
    uint64_t messagesSent_ = 0;
    uint64_t messagesDropped_ = 0;
    uint64_t nextSeq_ = 0;
    uint64_t now_ = 0;
};

}  // namespace

SimReport run_simulation(const Scenario& scenario) {
    Simulator sim(scenario);
    return sim.run();
}

SimResult run_simulation_full(const Scenario& scenario) {
    Simulator sim(scenario);
    return sim.run_full();
}

}  // namespace bacip
