#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bacip/content_store.hpp"
#include "bacip/credential.hpp"
#include "bacip/crypto.hpp"
#include "bacip/merkle.hpp"

namespace bacip {

// --- Permissions ------------------------------------------------------------

namespace permissions {
constexpr uint32_t kIssue = 1u << 0;
constexpr uint32_t kRevoke = 1u << 1;
constexpr uint32_t kVerify = 1u << 2;
constexpr uint32_t kAdmin = 1u << 3;
constexpr uint32_t kAll = kIssue | kRevoke | kVerify | kAdmin;

inline bool known_bits(uint32_t bits) { return (bits & ~kAll) == 0; }
}  // namespace permissions

// --- Identities -------------------------------------------------------------

using RevocationKey = Hash32;

RevocationKey revocation_key(const std::string& credentialId);

// One registered principal: the DID signs transactions, the key id names the
// key in document proofs, sub names the JWT subject, issuerUri is the HTTP
// identity a document's issuer field may carry.
struct IdentityRecord {
    std::string did;
    std::string keyId;
    std::string sub;        // optional
    std::string issuerUri;  // optional
    SignatureAlgorithm algorithm = SignatureAlgorithm::Ed25519;
    Bytes publicKey;

    bool operator==(const IdentityRecord&) const = default;
};

class KeyRegistry {
public:
    void add(IdentityRecord record);
    const IdentityRecord* by_did(const std::string& did) const;
    const IdentityRecord* by_key_id(const std::string& keyId) const;
    const IdentityRecord* by_sub(const std::string& sub) const;
    // Resolves an issuer field: a DID, key id, or issuer URI.
    const IdentityRecord* by_issuer(const std::string& issuer) const;
    const std::vector<IdentityRecord>& records() const { return records_; }

private:
    std::vector<IdentityRecord> records_;
    std::map<std::string, size_t> byDid_, byKeyId_, bySub_, byIssuer_;
};

struct Genesis {
    std::string admin;  // DID
    std::vector<IdentityRecord> identities;
    std::map<std::string, uint32_t> roles;  // DID -> permission bits

    nlohmann::json to_json() const;
    static std::optional<Genesis> from_json(const nlohmann::json& j);
    Hash32 hash() const;
};

// --- Transactions -----------------------------------------------------------

enum class TxKind {
    IssueCredential,
    RevokeCredential,
    GiveConsent,
    WithdrawConsent,
    DeleteData,
    SetPermissions,
};

std::string to_string(TxKind kind);
std::optional<TxKind> parse_tx_kind(std::string_view name);

struct IssuePayload {
    CredentialDocument document;
    StoredRef storedRef;

    bool operator==(const IssuePayload&) const = default;
};

struct RevokePayload {
    RevocationKey key{};

    bool operator==(const RevokePayload&) const = default;
};

struct ConsentPayload {
    std::string subject;  // DID

    bool operator==(const ConsentPayload&) const = default;
};

struct PermissionsPayload {
    std::string user;  // DID
    uint32_t permissionBits = 0;

    bool operator==(const PermissionsPayload&) const = default;
};

struct Transaction {
    TxKind kind = TxKind::IssueCredential;
    std::string sender;  // DID
    std::variant<IssuePayload, RevokePayload, ConsentPayload, PermissionsPayload> payload;
    Proof senderSignature;
    Hash32 txId{};  // hash of the canonical bytes (signature excluded)

    bool operator==(const Transaction&) const = default;
};

// Canonical bytes covered by the sender signature; txId hashes these too.
Bytes transaction_signing_bytes(const Transaction& tx);
Transaction make_signed_transaction(TxKind kind, const std::string& senderDid,
                                    std::variant<IssuePayload, RevokePayload, ConsentPayload,
                                                 PermissionsPayload>
                                        payload,
                                    const KeyPair& senderKey);

nlohmann::json transaction_to_json(const Transaction& tx);
std::optional<Transaction> transaction_from_json(const nlohmann::json& j);

// --- Audit ------------------------------------------------------------------

enum class AuditEventName {
    CredentialIssued,
    CertificateRevoked,
    ConsentGiven,
    ConsentWithdrawn,
    DataDeleted,
    PermissionsSet,
    TxRejected,
};

std::string to_string(AuditEventName name);
std::optional<AuditEventName> parse_audit_event_name(std::string_view name);

struct AuditEvent {
    uint64_t seq = 0;
    uint64_t height = 0;
    Hash32 txId{};
    AuditEventName eventName = AuditEventName::CredentialIssued;
    std::string subject;
    int64_t timestamp = 0;  // logical: the block height that produced it

    bool operator==(const AuditEvent&) const = default;
};

nlohmann::json audit_event_to_json(const AuditEvent& e);

struct AuditFilter {
    std::optional<AuditEventName> eventName;
    std::optional<std::string> subject;
    std::optional<uint64_t> fromHeight;
    std::optional<uint64_t> toHeight;  // inclusive
};

// --- State ------------------------------------------------------------------

struct CredentialRecord {
    std::string issuer;  // DID of the issuing sender
    std::string holder;  // recipient DID
    ContentAddress contentAddress;
    Hash32 docHash{};  // hash of the full canonical document (proof included)

    bool operator==(const CredentialRecord&) const = default;
};

struct LedgerState {
    std::map<std::string, CredentialRecord> credentials;  // by credential id
    std::set<RevocationKey> revoked;
    std::map<RevocationKey, std::string> revocationIndex;  // key -> credential id
    std::map<std::string, bool> consentGiven;              // DID -> flag; absent = never set
    std::map<std::string, uint32_t> roles;                 // DID -> permission bits
    std::string admin;                                     // DID
    KeyRegistry registry;
    std::vector<AuditEvent> auditLog;
    uint64_t height = 0;
    uint64_t nextAuditSeq = 0;

    static LedgerState from_genesis(const Genesis& genesis);
};

// --- Validation & application ------------------------------------------------

enum class TxInvalidReason {
    UnknownSender,
    BadSignature,
    SchemaViolation,
    InvalidDocumentProof,
    MissingPermission,
    DuplicateId,
    UnknownCredential,
    SubjectMismatch,
    ConsentNotGiven,
    ConsentStillGiven,
    NotAdmin,
    UnknownPermissionBits,
};

std::string to_string(TxInvalidReason reason);

struct TxValidity {
    bool valid = false;
    TxInvalidReason reason = TxInvalidReason::SchemaViolation;
    std::string detail;

    static TxValidity ok() { return {true, {}, {}}; }
    static TxValidity invalid(TxInvalidReason r, std::string d = "") {
        return {false, r, std::move(d)};
    }
};

// Checks, in order: sender signature; then the kind-specific rules
// (issue: schema, document proof, ISSUE permission, fresh id; revoke: REVOKE
// permission, known target; consent ops: subject-signed plus the consent
// guards; permissions: admin only, known bits). The first failure is the
// reason. `clock` is accepted for interface stability; no temporal admission
// rule exists today.
TxValidity validate_transaction(const Transaction& tx, const LedgerState& state, int64_t clock);

// Off-chain side effects of a transition, returned to the caller so the
// state machine itself stays pure and replayable.
struct Effect {
    enum class Kind { EraseBlob, InvalidatePointer };
    Kind kind = Kind::EraseBlob;
    ContentAddress address;  // EraseBlob
    std::string pointerId;   // InvalidatePointer
};

struct ApplyResult {
    std::vector<AuditEvent> events;
    std::vector<Effect> effects;
};

// Precondition: validate_transaction returned Valid against this state.
// Throws std::logic_error otherwise. `height` stamps the emitted events.
ApplyResult apply_transaction(LedgerState& state, const Transaction& tx, uint64_t height);

void append_rejection_event(LedgerState& state, const Transaction& tx, TxInvalidReason reason);

bool is_revoked(const LedgerState& state, const RevocationKey& key);
bool authorize_action(const LedgerState& state, const std::string& userDid, uint32_t required);

// Leaf for credential id (lexical order): SHA-256(id || docHash || revoked
// flag byte). Empty state commits to SHA-256 of the empty string.
Hash32 credential_leaf(const std::string& id, const Hash32& docHash, bool revoked);
Hash32 state_commitment(const LedgerState& state);
std::vector<Hash32> state_leaves(const LedgerState& state);

std::vector<AuditEvent> audit_query(const LedgerState& state, const AuditFilter& filter);

enum class VerificationOutcome {
    Malformed,
    UnknownIssuer,
    InvalidSignature,
    Revoked,
    Expired,
    NotYetValid,
    Valid,
};

std::string to_string(VerificationOutcome outcome);

VerificationOutcome verify_credential(const LedgerState& state, const CredentialDocument& doc,
                                      int64_t now);
VerificationOutcome verify_credential_raw(const LedgerState& state,
                                          std::span<const uint8_t> rawJson, int64_t now);

// --- Blocks & journal ---------------------------------------------------------

struct Block {
    uint64_t height = 0;
    Hash32 parentHash{};
    std::vector<Transaction> transactions;
    Hash32 stateRoot{};  // commitment after applying
    uint32_t proposer = 0;

    bool operator==(const Block&) const = default;
};

Hash32 block_hash(const Block& block);
nlohmann::json block_to_json(const Block& block);
std::optional<Block> block_from_json(const nlohmann::json& j);

// Applies every transaction of a finalized block in order and bumps height.
// All transactions must be valid against the running pre-state.
ApplyResult apply_block(LedgerState& state, const Block& block);

// Append-only JSON-lines journal: a genesis record, then one record per
// finalized block, interleaved with admission-rejection records. Replaying
// the file reproduces stateRoot and the audit log bit-exactly.
class Journal {
public:
    explicit Journal(std::filesystem::path path);

    bool exists() const;
    void append_genesis(const Genesis& genesis);
    void append_block(const Block& block);
    void append_rejection(const Transaction& tx, TxInvalidReason reason);

    struct Replay {
        Genesis genesis;
        LedgerState state;
        std::vector<Block> blocks;
    };
    std::optional<Replay> replay() const;

    const std::filesystem::path& path() const { return path_; }

private:
    void append_line(const nlohmann::json& record);
    std::filesystem::path path_;
};

}  // namespace bacip
