#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "bacip/consensus.hpp"
#include "bacip/simulation.hpp"
#include "support.hpp"

using namespace bacip;

namespace {

// n validators plus a registered issuer whose transactions seed blocks.
struct Net {
    Scenario scenario;
    SimFixture fixture;
    ConsensusConfig config;
    std::vector<ConsensusEngine> engines;

    explicit Net(uint32_t n, uint32_t txCount = 0, uint64_t stopHeight = 1) {
        scenario.n = n;
        scenario.seed = 7;
        scenario.txCount = txCount;
        fixture = build_sim_fixture(scenario);
        config.n = n;
        config.roundTimeout = 10;
        config.proposeEmptyBlocks = true;
        config.stopHeight = stopHeight;
        for (uint32_t i = 0; i < n; ++i) {
            config.validators.push_back({fixture.validatorKeys[i].keyId,
                                         SignatureAlgorithm::Ed25519,
                                         fixture.validatorKeys[i].publicKey});
        }
        for (uint32_t i = 0; i < n; ++i) {
            engines.emplace_back(config, i, fixture.validatorKeys[i], fixture.genesis);
        }
    }

    ConsensusMessage signed_msg(ConsensusMessage msg) {
        return make_signed_message(std::move(msg), fixture.validatorKeys[msg.sender]);
    }
};

// Smallest quorum with pairwise intersection of at least f+1, found by
// enumerating all pairs of q-subsets.
uint32_t brute_force_quorum(uint32_t n) {
    uint32_t f = (n - 1) / 3;
    for (uint32_t q = 1; q <= n; ++q) {
        std::vector<std::vector<uint32_t>> subsets;
        std::vector<uint32_t> indices(q);
        // enumerate q-subsets of [0, n)
        std::function<void(uint32_t, uint32_t)> gen = [&](uint32_t start, uint32_t depth) {
            if (depth == q) {
                subsets.emplace_back(indices.begin(), indices.end());
                return;
            }
            for (uint32_t v = start; v < n; ++v) {
                indices[depth] = v;
                gen(v + 1, depth + 1);
            }
        };
        gen(0, 0);
        bool ok = true;
        for (const auto& a : subsets) {
            for (const auto& b : subsets) {
                std::vector<uint32_t> common;
                std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                      std::back_inserter(common));
                if (common.size() < f + 1) ok = false;
            }
        }
        if (ok) return q;
    }
    return n;
}

}  // namespace

TEST_CASE("quorum size formula") {
    CHECK(quorum_size(1) == 1);
    CHECK(quorum_size(4) == 3);
    CHECK(quorum_size(7) == 5);
    CHECK(quorum_size(10) == 7);
    // Brute-force intersection oracle at the 3f+1 sizes.
    for (uint32_t n : {1u, 4u, 7u}) {
        CHECK(quorum_size(n) == brute_force_quorum(n));
    }
}

TEST_CASE("leader rotation") {
    CHECK(leader_index(1, 0, 4) == 1);
    CHECK(leader_index(1, 1, 4) == 2);
    CHECK(leader_index(4, 0, 4) == 0);
    CHECK(leader_index(1, 0, 1) == 0);
}

TEST_CASE("leader filters invalid transactions out of proposals") {
    Net net(4, 3);  // three valid issue transactions
    std::vector<Transaction> pending = net.fixture.txSchedule;
    Transaction bad = pending[0];
    bad.sender = "did:bacip:unregistered";  // fails validation
    pending.push_back(bad);

    // Height 1 leader is validator (1 + 0) % 4 = 1.
    auto out = net.engines[1].submit_transactions(pending);
    REQUIRE(out.outbound.size() >= 1);
    const ConsensusMessage& preprepare = out.outbound.front();
    CHECK(preprepare.kind == MsgKind::PrePrepare);
    REQUIRE(preprepare.block);
    CHECK(preprepare.block->transactions.size() == 3);
    for (const auto& tx : preprepare.block->transactions) {
        CHECK(tx.sender == "did:bacip:sim-issuer");
    }
}

TEST_CASE("non-leader does not propose") {
    Net net(4, 2);
    auto out = net.engines[2].submit_transactions(net.fixture.txSchedule);
    CHECK(out.outbound.empty());
    CHECK(net.engines[2].mempool_size() == 2);
}

TEST_CASE("empty mempool proposes a heartbeat block") {
    Net net(4);
    auto out = net.engines[1].start();
    REQUIRE(!out.outbound.empty());
    REQUIRE(out.outbound[0].block);
    CHECK(out.outbound[0].block->transactions.empty());
}

TEST_CASE("messages with bad signatures are discarded without effect") {
    Net net(4);
    auto proposal = net.engines[1].start();
    ConsensusMessage tampered = proposal.outbound[0];
    tampered.signature.signatureValue = base64_encode(Bytes(64, 0xab));
    uint64_t before = net.engines[0].discarded_messages();
    auto out = net.engines[0].handle_message(tampered);
    CHECK(out.outbound.empty());
    CHECK(out.finalized.empty());
    CHECK(net.engines[0].phase() == Phase::Idle);
    CHECK(net.engines[0].discarded_messages() == before + 1);

    SUBCASE("out-of-range sender index is discarded") {
        ConsensusMessage alien = proposal.outbound[0];
        alien.sender = 99;
        CHECK(net.engines[0].handle_message(alien).outbound.empty());
    }
}

TEST_CASE("duplicate messages are idempotent") {
    Net net(4);
    auto proposal = net.engines[1].start();
    const ConsensusMessage& preprepare = proposal.outbound[0];
    Hash32 bh = preprepare.blockHash;

    auto out1 = net.engines[0].handle_message(preprepare);
    REQUIRE(out1.outbound.size() == 1);  // our Prepare
    auto out2 = net.engines[0].handle_message(preprepare);
    CHECK(out2.outbound.empty());

    // Two identical Commits from one sender count once: with quorum 3, the
    // pair (own commit + repeated peer commit) must not finalize.
    ConsensusMessage prepare2 = net.signed_msg([&] {
        ConsensusMessage m;
        m.kind = MsgKind::Prepare;
        m.height = 1;
        m.round = 0;
        m.blockHash = bh;
        m.sender = 2;
        return m;
    }());
    net.engines[0].handle_message(prepare2);  // self + leader-less: still 2 prepares
    ConsensusMessage commit3 = net.signed_msg([&] {
        ConsensusMessage m;
        m.kind = MsgKind::Commit;
        m.height = 1;
        m.round = 0;
        m.blockHash = bh;
        m.sender = 3;
        return m;
    }());
    auto c1 = net.engines[0].handle_message(commit3);
    auto c2 = net.engines[0].handle_message(commit3);
    CHECK(c1.finalized.empty());
    CHECK(c2.finalized.empty());
    CHECK(net.engines[0].chain().empty());
}

TEST_CASE("non-leader pre-prepare is rejected") {
    Net net(4);
    Block block;  // contents are irrelevant; the sender check fires first
    block.height = 1;
    block.proposer = 2;
    ConsensusMessage msg;
    msg.kind = MsgKind::PrePrepare;
    msg.height = 1;
    msg.round = 0;
    msg.block = block;
    msg.blockHash = block_hash(block);
    msg.sender = 2;  // leader for (1, 0) is 1
    auto out = net.engines[0].handle_message(net.signed_msg(msg));
    CHECK(out.outbound.empty());
    CHECK(net.engines[0].phase() == Phase::Idle);
}

TEST_CASE("three-phase happy path finalizes on every honest node") {
    Net net(4, 2);

    // Deliver every outbound message to every peer until quiet.
    std::vector<ConsensusMessage> wire;
    auto pump = [&](ConsensusEngine::Output out) {
        for (auto& msg : out.outbound) wire.push_back(std::move(msg));
    };
    for (auto& engine : net.engines) pump(engine.submit_transactions(net.fixture.txSchedule));
    size_t cursor = 0;
    while (cursor < wire.size()) {
        ConsensusMessage msg = wire[cursor++];
        for (uint32_t i = 0; i < 4; ++i) {
            if (i == msg.sender) continue;
            pump(net.engines[i].handle_message(msg));
        }
    }

    Hash32 expected{};
    for (uint32_t i = 0; i < 4; ++i) {
        REQUIRE(net.engines[i].chain().size() == 1);
        Hash32 h = block_hash(net.engines[i].chain()[0]);
        if (i == 0) expected = h;
        CHECK(h == expected);
        CHECK(net.engines[i].chain()[0].transactions.size() == 2);
    }
}

TEST_CASE("exhaustive message-order enumeration: n=4, one height, agreement always") {
    // Fault-free single height. A node's behavior depends only on its own
    // delivery order, and in a full-delivery run every node eventually sends
    // its one Prepare and one Commit regardless of interleaving, so each
    // node's inbox is a fixed message set. Enumerating every permutation of
    // every node's inbox therefore covers the restriction of every global
    // delivery order to each node; if all of them finalize the same block,
    // no global order can produce disagreement.
    Net net(4, 1, 1);

    // One full run collects the complete wire traffic.
    std::vector<ConsensusMessage> wire;
    {
        Net probe(4, 1, 1);
        auto pump = [&](ConsensusEngine::Output out) {
            for (auto& msg : out.outbound) wire.push_back(std::move(msg));
        };
        for (auto& engine : probe.engines) {
            pump(engine.submit_transactions(probe.fixture.txSchedule));
        }
        size_t cursor = 0;
        while (cursor < wire.size()) {
            ConsensusMessage msg = wire[cursor++];
            for (uint32_t i = 0; i < 4; ++i) {
                if (i != msg.sender) pump(probe.engines[i].handle_message(msg));
            }
        }
    }
    REQUIRE(wire.size() == 9);  // PrePrepare + 4 Prepares + 4 Commits
    Hash32 agreed = wire[0].blockHash;
    for (const auto& msg : wire) CHECK(msg.blockHash == agreed);

    uint64_t permutations = 0;
    for (uint32_t node = 0; node < 4; ++node) {
        std::vector<ConsensusMessage> inbox;
        for (const auto& msg : wire) {
            if (msg.sender != node) inbox.push_back(msg);
        }
        std::sort(inbox.begin(), inbox.end(), [](const auto& a, const auto& b) {
            return consensus_signing_bytes(a) < consensus_signing_bytes(b);
        });

        // Template engine with the mempool already seeded.
        ConsensusEngine seeded(net.config, node, net.fixture.validatorKeys[node],
                               net.fixture.genesis);
        seeded.submit_transactions(net.fixture.txSchedule);

        std::vector<size_t> order(inbox.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        do {
            ConsensusEngine engine = seeded;
            for (size_t pick : order) engine.handle_message(inbox[pick]);
            REQUIRE(engine.chain().size() == 1);
            REQUIRE(block_hash(engine.chain()[0]) == agreed);
            ++permutations;
        } while (std::next_permutation(order.begin(), order.end()));
    }
    CHECK(permutations == 3 * 5040 + 720);
}

TEST_CASE("locking rule: a locked node refuses a conflicting proposal") {
    Net net(4, 2, 2);
    // Drive node 0 to lock on the height-1 proposal from leader 1.
    for (auto& engine : net.engines) engine.submit_transactions(net.fixture.txSchedule);
    auto proposal = net.engines[1].start();
    const ConsensusMessage& preprepareA = proposal.outbound[0];
    Hash32 hashA = preprepareA.blockHash;

    auto outA = net.engines[0].handle_message(preprepareA);
    REQUIRE(outA.outbound.size() == 1);  // Prepare(A)
    ConsensusMessage prep2 = net.signed_msg([&] {
        ConsensusMessage m;
        m.kind = MsgKind::Prepare;
        m.height = 1;
        m.round = 0;
        m.blockHash = hashA;
        m.sender = 2;
        return m;
    }());
    auto lockOut = net.engines[0].handle_message(prep2);
    // self + leader's implicit + node2: but the leader's Prepare never arrived,
    // so feed node3's too to cross quorum = 3.
    if (lockOut.outbound.empty()) {
        ConsensusMessage prep3 = net.signed_msg([&] {
            ConsensusMessage m;
            m.kind = MsgKind::Prepare;
            m.height = 1;
            m.round = 0;
            m.blockHash = hashA;
            m.sender = 3;
            return m;
        }());
        lockOut = net.engines[0].handle_message(prep3);
    }
    REQUIRE(lockOut.outbound.size() == 1);
    CHECK(lockOut.outbound[0].kind == MsgKind::Commit);
    CHECK(net.engines[0].phase() == Phase::Prepared);

    // Move node 0 into round 1 via a round-change quorum.
    for (uint32_t sender : {1u, 2u, 3u}) {
        ConsensusMessage rc;
        rc.kind = MsgKind::RoundChange;
        rc.height = 1;
        rc.round = 1;
        rc.sender = sender;
        net.engines[0].handle_message(net.signed_msg(rc));
    }
    CHECK(net.engines[0].current_round() == 1);

    // A conflicting (but individually valid) proposal from the round-1
    // leader, node 2: an empty block instead of the two-transaction one.
    Block conflicting;
    conflicting.height = 1;
    conflicting.parentHash = preprepareA.block->parentHash;
    conflicting.proposer = 2;
    conflicting.stateRoot = state_commitment(LedgerState::from_genesis(net.fixture.genesis));
    ConsensusMessage preprepareB;
    preprepareB.kind = MsgKind::PrePrepare;
    preprepareB.height = 1;
    preprepareB.round = 1;
    preprepareB.block = conflicting;
    preprepareB.blockHash = block_hash(conflicting);
    preprepareB.sender = 2;
    auto outB = net.engines[0].handle_message(net.signed_msg(preprepareB));
    for (const auto& msg : outB.outbound) {
        CHECK(!(msg.kind == MsgKind::Prepare && msg.blockHash == preprepareB.blockHash));
    }

    // Re-proposing the locked hash in the new round is accepted.
    ConsensusMessage preprepareA1 = preprepareA;
    preprepareA1.round = 1;
    preprepareA1.sender = 2;
    auto outA1 = net.engines[0].handle_message(net.signed_msg(preprepareA1));
    bool preparedA = false;
    for (const auto& msg : outA1.outbound) {
        if (msg.kind == MsgKind::Prepare && msg.blockHash == hashA) preparedA = true;
    }
    CHECK(preparedA);
}

TEST_CASE("single-validator deployment finalizes through the same path") {
    Net net(1, 3, 1);
    auto out = net.engines[0].submit_transactions(net.fixture.txSchedule);
    REQUIRE(out.finalized.size() >= 1);
    CHECK(net.engines[0].chain().size() == 1);
    CHECK(net.engines[0].state().credentials.size() == 3);
    // Chain is append-only: replaying the chain against a fresh state
    // reproduces the same root.
    LedgerState fresh = LedgerState::from_genesis(net.fixture.genesis);
    for (const auto& block : net.engines[0].chain()) {
        for (const auto& tx : block.transactions) {
            REQUIRE(validate_transaction(tx, fresh, 0).valid);
        }
        apply_block(fresh, block);
    }
    CHECK(state_commitment(fresh) == state_commitment(net.engines[0].state()));
}
