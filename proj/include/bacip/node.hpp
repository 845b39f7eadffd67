#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "bacip/anchor.hpp"
#include "bacip/consensus.hpp"
#include "bacip/content_store.hpp"
#include "bacip/keystore.hpp"
#include "bacip/ledger.hpp"

namespace bacip {

using Clock = std::function<int64_t()>;

int64_t system_clock_now();

struct NodeOptions {
    std::filesystem::path keystorePath;
    std::filesystem::path storeRoot;
    std::filesystem::path journalPath;
    std::filesystem::path anchorLogPath;
    std::string passphrase;
    // Optional genesis override (validator/identity config). When absent and
    // the journal is fresh, a genesis is derived from the keystore: every key
    // becomes an identity with issue/revoke/verify permissions and the first
    // key's DID is admin.
    std::optional<Genesis> genesis;
    Clock clock = system_clock_now;
};

// A full registry node: keystore, sealed off-chain store, journaled ledger
// driven by a single-validator consensus instance, and the public anchor
// log. Mutations run through the same propose/prepare/commit path a
// multi-validator deployment uses, with n = 1.
class Node {
public:
    explicit Node(NodeOptions options);

    struct SubmitOutcome {
        bool accepted = false;
        bool finalized = false;
        TxValidity validity;
        Hash32 txId{};
        uint64_t height = 0;
    };
    SubmitOutcome submit(Transaction tx);

    struct IssueOutcome {
        bool ok = false;
        std::string error;  // empty on success
        std::vector<Violation> violations;
        CredentialDocument document;
        Hash32 txId{};
        uint64_t height = 0;
        ContentAddress contentAddress;
    };
    IssueOutcome issue(const IssueRequest& request, const std::string& issuerKeyId,
                       RandomSource& rng);

    struct RevokeOutcome {
        enum class Status { Revoked, AlreadyRevoked, UnknownId, Rejected, Unavailable };
        Status status = Status::Rejected;
        TxValidity validity;
        Hash32 txId{};
        uint64_t auditSeq = 0;
    };
    RevokeOutcome revoke(const std::string& credentialId, const std::string& signerKeyId);

    enum class ConsentAction { Give, Withdraw, Delete };
    struct ConsentOutcome {
        bool ok = false;
        TxValidity validity;
        Hash32 txId{};
        uint64_t height = 0;
    };
    ConsentOutcome consent(ConsentAction action, const std::string& subjectKeyId);

    struct VerifyResult {
        VerificationOutcome outcome = VerificationOutcome::Malformed;
        std::string credentialId;
        std::optional<InclusionProof> anchorProof;
        std::optional<Hash32> docHash;
        bool revoked = false;
        bool known = false;  // id present in the ledger index
    };
    VerifyResult verify_document(std::span<const uint8_t> rawJson);
    VerifyResult verify_by_id(const std::string& credentialId);

    // Sealed off-chain payloads (fresh random data key per blob, key held in
    // the keystore so erasure can crypto-shred it).
    ContentAddress seal_and_store(std::span<const uint8_t> plaintext, RandomSource& rng);
    std::optional<Bytes> fetch_and_open(const ContentAddress& address) const;

    const LedgerState& state() const { return engine_->state(); }
    const std::vector<Block>& chain() const { return engine_->chain(); }
    Keystore& keystore() { return keystore_; }
    ContentStore& store() { return store_; }
    AnchorLog& anchors() { return anchorLog_; }
    const Genesis& genesis() const { return genesis_; }
    int64_t now() const { return clock_(); }

    // Consensus availability toggle (maps to HTTP 503 upstream).
    void set_consensus_available(bool available) { consensusAvailable_ = available; }
    bool consensus_available() const { return consensusAvailable_; }

    const IdentityRecord* identity_for_key(const std::string& keyId) const;

private:
    void execute_effects(const std::vector<Effect>& effects);
    Genesis default_genesis() const;

    Keystore keystore_;
    ContentStore store_;
    Journal journal_;
    AnchorLog anchorLog_;
    Genesis genesis_;
    KeyPair validatorKey_;
    std::unique_ptr<ConsensusEngine> engine_;
    Clock clock_;
    bool consensusAvailable_ = true;
};

std::string did_from_key_id(const std::string& keyId);

}  // namespace bacip
