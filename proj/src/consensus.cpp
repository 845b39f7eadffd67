#include "bacip/consensus.hpp"

#include <algorithm>

namespace bacip {

using nlohmann::json;

uint32_t quorum_size(uint32_t n) {
    return 2 * ((n - 1) / 3) + 1;
}

ValidatorIndex leader_index(uint64_t height, uint32_t round, uint32_t n) {
    return static_cast<ValidatorIndex>((height + round) % n);
}

std::string to_string(MsgKind kind) {
    switch (kind) {
        case MsgKind::PrePrepare: return "PrePrepare";
        case MsgKind::Prepare: return "Prepare";
        case MsgKind::Commit: return "Commit";
        case MsgKind::RoundChange: return "RoundChange";
    }
    return "unknown";
}

Bytes consensus_signing_bytes(const ConsensusMessage& msg) {
    json j;
    j["kind"] = to_string(msg.kind);
    j["height"] = msg.height;
    j["round"] = msg.round;
    j["blockHash"] = hash_hex(msg.blockHash);
    if (msg.block) j["block"] = block_to_json(*msg.block);
    if (msg.hasLock) j["lockedRound"] = msg.lockedRound;
    j["sender"] = msg.sender;
    return to_bytes(j.dump());
}

ConsensusMessage make_signed_message(ConsensusMessage msg, const KeyPair& key) {
    msg.signature = sign_message(consensus_signing_bytes(msg), key);
    return msg;
}

ConsensusEngine::ConsensusEngine(ConsensusConfig config, ValidatorIndex self, KeyPair selfKey,
                                 const Genesis& genesis)
    : config_(std::move(config)),
      self_(self),
      selfKey_(std::move(selfKey)),
      genesisHash_(genesis.hash()),
      state_(LedgerState::from_genesis(genesis)) {}

Hash32 ConsensusEngine::tip_hash() const {
    return chain_.empty() ? genesisHash_ : block_hash(chain_.back());
}

void ConsensusEngine::restore_chain(const std::vector<Block>& blocks) {
    for (const auto& block : blocks) {
        apply_block(state_, block);
        chain_.push_back(block);
        height_ = block.height + 1;
    }
}

void ConsensusEngine::record_rejection(const Transaction& tx, TxInvalidReason reason) {
    append_rejection_event(state_, tx, reason);
}

bool ConsensusEngine::quiescent() const {
    return config_.stopHeight != 0 && height_ > config_.stopHeight;
}

ConsensusEngine::Output ConsensusEngine::start() {
    Output out;
    if (!quiescent() && leader_index(height_, round_, config_.n) == self_) propose(out);
    return out;
}

ConsensusEngine::Output ConsensusEngine::submit_transactions(std::vector<Transaction> txs) {
    Output out;
    for (auto& tx : txs) {
        if (mempoolIds_.insert(tx.txId).second) mempool_.push_back(std::move(tx));
    }
    // A leader idling on an empty proposal slot picks the work up directly.
    if (!quiescent() && phase_ == Phase::Idle && !mempool_.empty() &&
        leader_index(height_, round_, config_.n) == self_ && !sentPrepare_.count(round_)) {
        propose(out);
    }
    return out;
}

ConsensusEngine::Output ConsensusEngine::handle_message(const ConsensusMessage& msg) {
    Output out;
    process(msg, out);
    return out;
}

ConsensusEngine::Output ConsensusEngine::on_tick() {
    Output out;
    if (quiescent()) return out;
    ++ticksInRound_;
    if (ticksInRound_ >= config_.roundTimeout) {
        ticksInRound_ = 0;
        uint32_t target = round_ + 1;
        ConsensusMessage rc;
        rc.kind = MsgKind::RoundChange;
        rc.height = height_;
        rc.round = target;
        rc.sender = self_;
        if (locked_) {
            rc.hasLock = true;
            rc.lockedRound = lockedRound_;
            rc.blockHash = lockedHash_;
            auto it = proposals_.find(lockedHash_);
            if (it != proposals_.end()) rc.block = it->second;
        }
        sentRoundChange_.insert(target);
        broadcast(std::move(rc), out);
    }
    return out;
}

void ConsensusEngine::broadcast(ConsensusMessage msg, Output& out) {
    ConsensusMessage signedMsg = make_signed_message(std::move(msg), selfKey_);
    out.outbound.push_back(signedMsg);
    process(signedMsg, out);  // a broadcast includes ourselves
}

void ConsensusEngine::process(const ConsensusMessage& msg, Output& out) {
    if (msg.sender >= config_.n) {
        ++discarded_;
        return;
    }
    Bytes signingBytes = consensus_signing_bytes(msg);
    Hash32 digest = sha256(signingBytes);
    if (seen_.count(digest)) return;  // duplicate: idempotent
    const ValidatorKey& senderKey = config_.validators[msg.sender];
    if (!verify_signature(signingBytes, msg.signature, senderKey.publicKey)) {
        ++discarded_;
        return;
    }
    seen_.insert(digest);

    if (msg.height < height_) return;  // settled height
    if (msg.height > height_) {
        buffered_.push_back(msg);
        return;
    }
    switch (msg.kind) {
        case MsgKind::PrePrepare: on_pre_prepare(msg, out); break;
        case MsgKind::Prepare: on_prepare(msg, out); break;
        case MsgKind::Commit: on_commit(msg, out); break;
        case MsgKind::RoundChange: on_round_change(msg, out); break;
    }
}

bool ConsensusEngine::check_proposal(const Block& block, uint32_t /*round*/) const {
    // block.proposer names the original builder; a locked block re-proposed
    // in a later round keeps it. The sender-is-leader rule is enforced on
    // the PrePrepare message itself.
    if (block.height != height_) return false;
    if (block.parentHash != tip_hash()) return false;
    if (block.proposer >= config_.n) return false;
    if (block.transactions.size() > config_.blockLimit) return false;
    // Every transaction must be valid against the rolling pre-state, and the
    // declared root must match the replayed result.
    LedgerState scratch = state_;
    for (const auto& tx : block.transactions) {
        if (!validate_transaction(tx, scratch, 0).valid) return false;
        apply_transaction(scratch, tx, block.height);
    }
    scratch.height = block.height;
    return state_commitment(scratch) == block.stateRoot;
}

void ConsensusEngine::on_pre_prepare(const ConsensusMessage& msg, Output& out) {
    if (msg.round > round_) {
        buffered_.push_back(msg);
        return;
    }
    if (msg.round < round_) return;
    if (msg.sender != leader_index(height_, round_, config_.n)) {
        ++discarded_;
        return;
    }
    if (!msg.block || block_hash(*msg.block) != msg.blockHash ||
        !check_proposal(*msg.block, msg.round)) {
        ++discarded_;
        return;
    }
    proposals_[msg.blockHash] = *msg.block;
    try_finalize(out);  // commits may have been waiting for the block body

    // The locking rule: once prepared for a hash, never prepare another.
    if (locked_ && lockedHash_ != msg.blockHash) return;
    if (sentPrepare_.count(round_)) return;
    if (phase_ == Phase::Idle) phase_ = Phase::PrePrepared;

    ConsensusMessage prepare;
    prepare.kind = MsgKind::Prepare;
    prepare.height = height_;
    prepare.round = round_;
    prepare.blockHash = msg.blockHash;
    prepare.sender = self_;
    sentPrepare_[round_] = msg.blockHash;
    broadcast(std::move(prepare), out);
}

void ConsensusEngine::on_prepare(const ConsensusMessage& msg, Output& out) {
    if (msg.round > round_) {
        buffered_.push_back(msg);
        return;
    }
    if (msg.round < round_) return;
    auto& senders = prepares_[{msg.round, msg.blockHash}];
    senders.insert(msg.sender);
    if (senders.size() < quorum_size(config_.n)) return;
    if (locked_ && lockedHash_ != msg.blockHash) return;
    if (sentCommit_.count(round_)) return;

    locked_ = true;
    lockedHash_ = msg.blockHash;
    lockedRound_ = round_;
    phase_ = Phase::Prepared;

    ConsensusMessage commit;
    commit.kind = MsgKind::Commit;
    commit.height = height_;
    commit.round = round_;
    commit.blockHash = msg.blockHash;
    commit.sender = self_;
    sentCommit_.insert(round_);
    broadcast(std::move(commit), out);
}

void ConsensusEngine::on_commit(const ConsensusMessage& msg, Output& out) {
    // Commits from any round at the current height may complete a quorum;
    // a node that changed rounds late must still adopt the network's choice.
    commits_[{msg.round, msg.blockHash}].insert(msg.sender);
    try_finalize(out);
}

void ConsensusEngine::try_finalize(Output& out) {
    for (const auto& [key, senders] : commits_) {
        if (senders.size() < quorum_size(config_.n)) continue;
        auto proposal = proposals_.find(key.second);
        if (proposal == proposals_.end()) continue;  // body not seen yet
        Block block = proposal->second;
        finalize(block, out);
        return;
    }
}

void ConsensusEngine::on_round_change(const ConsensusMessage& msg, Output& out) {
    if (msg.round <= round_) return;
    auto& info = roundChanges_[msg.round];
    info.senders.insert(msg.sender);
    if (msg.hasLock && msg.block &&
        (!info.hasLock || msg.lockedRound > info.lockedRound)) {
        info.hasLock = true;
        info.lockedRound = msg.lockedRound;
        info.lockedHash = msg.blockHash;
        info.lockedBlock = msg.block;
    }

    uint32_t f = config_.f();
    // Catch-up: f+1 validators already gave up on this round.
    if (info.senders.size() >= f + 1 && !sentRoundChange_.count(msg.round)) {
        ConsensusMessage rc;
        rc.kind = MsgKind::RoundChange;
        rc.height = height_;
        rc.round = msg.round;
        rc.sender = self_;
        if (locked_) {
            rc.hasLock = true;
            rc.lockedRound = lockedRound_;
            rc.blockHash = lockedHash_;
            auto it = proposals_.find(lockedHash_);
            if (it != proposals_.end()) rc.block = it->second;
        }
        sentRoundChange_.insert(msg.round);
        broadcast(std::move(rc), out);
        return;  // our own round-change re-enters here with the count bumped
    }
    if (info.senders.size() >= quorum_size(config_.n)) {
        enter_round(msg.round, out);
    }
}

void ConsensusEngine::enter_round(uint32_t round, Output& out) {
    round_ = round;
    phase_ = Phase::Idle;
    ticksInRound_ = 0;

    if (!quiescent() && leader_index(height_, round_, config_.n) == self_) {
        // Re-propose the strongest carried lock, then our own, else fresh.
        auto info = roundChanges_.find(round);
        std::optional<Block> carried;
        if (info != roundChanges_.end() && info->second.hasLock) {
            carried = info->second.lockedBlock;
        }
        if (!carried && locked_) {
            auto it = proposals_.find(lockedHash_);
            if (it != proposals_.end()) carried = it->second;
        }
        Block block = carried ? *carried : build_block();
        ConsensusMessage preprepare;
        preprepare.kind = MsgKind::PrePrepare;
        preprepare.height = height_;
        preprepare.round = round_;
        preprepare.block = block;
        preprepare.blockHash = block_hash(block);
        preprepare.sender = self_;
        broadcast(std::move(preprepare), out);
    }

    // Messages parked for this round become deliverable.
    std::vector<ConsensusMessage> parked;
    parked.swap(buffered_);
    for (const auto& msg : parked) {
        if (msg.height == height_ && msg.round <= round_) {
            switch (msg.kind) {
                case MsgKind::PrePrepare: on_pre_prepare(msg, out); break;
                case MsgKind::Prepare: on_prepare(msg, out); break;
                case MsgKind::Commit: on_commit(msg, out); break;
                case MsgKind::RoundChange: on_round_change(msg, out); break;
            }
        } else {
            buffered_.push_back(msg);
        }
    }
}

Block ConsensusEngine::build_block() {
    Block block;
    block.height = height_;
    block.parentHash = tip_hash();
    block.proposer = self_;
    LedgerState scratch = state_;
    for (const auto& tx : mempool_) {
        if (block.transactions.size() >= config_.blockLimit) break;
        if (!validate_transaction(tx, scratch, 0).valid) continue;
        apply_transaction(scratch, tx, block.height);
        block.transactions.push_back(tx);
    }
    scratch.height = block.height;
    block.stateRoot = state_commitment(scratch);
    return block;
}

void ConsensusEngine::propose(Output& out) {
    if (!config_.proposeEmptyBlocks && mempool_.empty()) return;
    Block block = build_block();
    ConsensusMessage preprepare;
    preprepare.kind = MsgKind::PrePrepare;
    preprepare.height = height_;
    preprepare.round = round_;
    preprepare.block = block;
    preprepare.blockHash = block_hash(block);
    preprepare.sender = self_;
    broadcast(std::move(preprepare), out);
}

void ConsensusEngine::finalize(const Block& block, Output& out) {
    FinalizedBlock finalized;
    finalized.block = block;
    ApplyResult applied = apply_block(state_, block);
    finalized.events = std::move(applied.events);
    finalized.effects = std::move(applied.effects);
    chain_.push_back(block);
    out.finalized.push_back(std::move(finalized));

    for (const auto& tx : block.transactions) {
        mempoolIds_.erase(tx.txId);
        std::erase_if(mempool_, [&](const Transaction& t) { return t.txId == tx.txId; });
    }

    ++height_;
    round_ = 0;
    phase_ = Phase::Idle;
    locked_ = false;
    lockedRound_ = 0;
    ticksInRound_ = 0;
    proposals_.clear();
    prepares_.clear();
    commits_.clear();
    roundChanges_.clear();
    sentPrepare_.clear();
    sentCommit_.clear();
    sentRoundChange_.clear();

    if (quiescent()) {
        buffered_.clear();
        return;
    }

    if (leader_index(height_, round_, config_.n) == self_ &&
        (config_.proposeEmptyBlocks || !mempool_.empty())) {
        propose(out);
    }

    // Wake messages parked for the new height.
    std::vector<ConsensusMessage> parked;
    parked.swap(buffered_);
    for (const auto& msg : parked) {
        if (msg.height == height_) {
            switch (msg.kind) {
                case MsgKind::PrePrepare: on_pre_prepare(msg, out); break;
                case MsgKind::Prepare: on_prepare(msg, out); break;
                case MsgKind::Commit: on_commit(msg, out); break;
                case MsgKind::RoundChange: on_round_change(msg, out); break;
            }
        } else if (msg.height > height_) {
            buffered_.push_back(msg);
        }
    }
}

}  // namespace bacip
