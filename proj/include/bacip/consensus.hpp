#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "bacip/ledger.hpp"

namespace bacip {

using ValidatorIndex = uint32_t;

struct ValidatorKey {
    std::string did;
    SignatureAlgorithm algorithm = SignatureAlgorithm::Ed25519;
    Bytes publicKey;
};

struct ConsensusConfig {
    uint32_t n = 1;
    std::vector<ValidatorKey> validators;  // ordered; index is the validator id
    uint32_t roundTimeout = 10;            // logical ticks without progress
    size_t blockLimit = 8;                 // max transactions per proposal
    bool proposeEmptyBlocks = true;        // heartbeat proposals keep height advancing
    uint64_t stopHeight = 0;               // 0 = unbounded; engines go quiescent past it

    uint32_t f() const { return (n - 1) / 3; }
};

// Smallest count such that any two quorums overlap in f+1 validators when
// n = 3f+1.
uint32_t quorum_size(uint32_t n);
ValidatorIndex leader_index(uint64_t height, uint32_t round, uint32_t n);

enum class MsgKind { PrePrepare, Prepare, Commit, RoundChange };

std::string to_string(MsgKind kind);

struct ConsensusMessage {
    MsgKind kind = MsgKind::Prepare;
    uint64_t height = 0;
    uint32_t round = 0;
    Hash32 blockHash{};
    std::optional<Block> block;  // PrePrepare proposal; RoundChange carried lock
    bool hasLock = false;        // RoundChange only
    uint32_t lockedRound = 0;    // round the carried lock was acquired in
    ValidatorIndex sender = 0;
    Proof signature;
};

Bytes consensus_signing_bytes(const ConsensusMessage& msg);
ConsensusMessage make_signed_message(ConsensusMessage msg, const KeyPair& key);

struct FinalizedBlock {
    Block block;
    std::vector<AuditEvent> events;
    std::vector<Effect> effects;
};

enum class Phase { Idle, PrePrepared, Prepared, Committed };

// One validator's three-phase automaton. Byzantine input is tolerated:
// messages with bad signatures or stale coordinates are discarded (counted),
// duplicates are idempotent, and nothing here ever throws on wire input.
// A node locks on the first hash it gathers a prepare quorum for and will
// not prepare a conflicting hash until the lock is superseded; commits from
// any round can finalize once a commit quorum exists for a known block.
class ConsensusEngine {
public:
    struct Output {
        std::vector<ConsensusMessage> outbound;  // for peers; self-delivery is internal
        std::vector<FinalizedBlock> finalized;
    };

    ConsensusEngine(ConsensusConfig config, ValidatorIndex self, KeyPair selfKey,
                    const Genesis& genesis);

    // Proposes when this node leads (height, round 0).
    Output start();
    Output handle_message(const ConsensusMessage& msg);
    Output on_tick();
    Output submit_transactions(std::vector<Transaction> txs);

    // Trusted local replay of already-finalized blocks (journal restore).
    void restore_chain(const std::vector<Block>& blocks);
    // Admission-time rejection, recorded in the audit trail.
    void record_rejection(const Transaction& tx, TxInvalidReason reason);

    const ConsensusConfig& config() const { return config_; }
    const LedgerState& state() const { return state_; }
    const std::vector<Block>& chain() const { return chain_; }
    uint64_t current_height() const { return height_; }
    uint32_t current_round() const { return round_; }
    Phase phase() const { return phase_; }
    uint64_t discarded_messages() const { return discarded_; }
    size_t mempool_size() const { return mempool_.size(); }
    Hash32 tip_hash() const;

private:
    struct RoundChangeInfo {
        std::set<ValidatorIndex> senders;
        // Strongest lock carried so far (highest lockedRound wins).
        std::optional<Block> lockedBlock;
        Hash32 lockedHash{};
        uint32_t lockedRound = 0;
        bool hasLock = false;
    };

    void process(const ConsensusMessage& msg, Output& out);
    void on_pre_prepare(const ConsensusMessage& msg, Output& out);
    void on_prepare(const ConsensusMessage& msg, Output& out);
    void on_commit(const ConsensusMessage& msg, Output& out);
    void on_round_change(const ConsensusMessage& msg, Output& out);

    void broadcast(ConsensusMessage msg, Output& out);
    void propose(Output& out);
    void enter_round(uint32_t round, Output& out);
    void try_finalize(Output& out);
    void finalize(const Block& block, Output& out);
    bool check_proposal(const Block& block, uint32_t round) const;
    Block build_block() ;
    bool quiescent() const;

    ConsensusConfig config_;
    ValidatorIndex self_;
    KeyPair selfKey_;
    Hash32 genesisHash_{};

    LedgerState state_;
    std::vector<Block> chain_;
    uint64_t height_ = 1;  // next height to finalize
    uint32_t round_ = 0;
    Phase phase_ = Phase::Idle;

    bool locked_ = false;
    Hash32 lockedHash_{};
    uint32_t lockedRound_ = 0;

    std::map<Hash32, Block> proposals_;                               // current height
    std::map<std::pair<uint32_t, Hash32>, std::set<ValidatorIndex>> prepares_;
    std::map<std::pair<uint32_t, Hash32>, std::set<ValidatorIndex>> commits_;
    std::map<uint32_t, RoundChangeInfo> roundChanges_;
    std::map<uint32_t, Hash32> sentPrepare_;  // own votes, per round
    std::set<uint32_t> sentCommit_;
    std::set<uint32_t> sentRoundChange_;

    std::vector<Transaction> mempool_;
    std::set<Hash32> mempoolIds_;
    std::vector<ConsensusMessage> buffered_;  // future height/round messages
    std::set<Hash32> seen_;                   // processed message digests
    uint32_t ticksInRound_ = 0;
    uint64_t discarded_ = 0;
};

}  // namespace bacip
