#include "bacip/ledger.hpp"

#include <fstream>

#include "bacip/iso8601.hpp"

namespace bacip {

using nlohmann::json;

// --- Identities -------------------------------------------------------------

RevocationKey revocation_key(const std::string& credentialId) {
    return sha256(to_bytes(credentialId));
}

void KeyRegistry::add(IdentityRecord record) {
    size_t index = records_.size();
    if (!record.did.empty()) byDid_[record.did] = index;
    if (!record.keyId.empty()) byKeyId_[record.keyId] = index;
    if (!record.sub.empty()) bySub_[record.sub] = index;
    if (!record.issuerUri.empty()) byIssuer_[record.issuerUri] = index;
    records_.push_back(std::move(record));
}

namespace {
const IdentityRecord* lookup(const std::vector<IdentityRecord>& records,
                             const std::map<std::string, size_t>& index,
                             const std::string& key) {
    auto it = index.find(key);
    return it == index.end() ? nullptr : &records[it->second];
}
}  // namespace

const IdentityRecord* KeyRegistry::by_did(const std::string& did) const {
    return lookup(records_, byDid_, did);
}
const IdentityRecord* KeyRegistry::by_key_id(const std::string& keyId) const {
    return lookup(records_, byKeyId_, keyId);
}
const IdentityRecord* KeyRegistry::by_sub(const std::string& sub) const {
    return lookup(records_, bySub_, sub);
}
const IdentityRecord* KeyRegistry::by_issuer(const std::string& issuer) const {
    if (const auto* r = lookup(records_, byIssuer_, issuer)) return r;
    if (const auto* r = lookup(records_, byDid_, issuer)) return r;
    return lookup(records_, byKeyId_, issuer);
}

namespace {

json identity_to_json(const IdentityRecord& r) {
    json j;
    j["did"] = r.did;
    j["keyId"] = r.keyId;
    if (!r.sub.empty()) j["sub"] = r.sub;
    if (!r.issuerUri.empty()) j["issuer"] = r.issuerUri;
    j["algorithm"] = to_string(r.algorithm);
    j["publicKey"] = base64_encode(r.publicKey);
    return j;
}

std::optional<IdentityRecord> identity_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    IdentityRecord r;
    r.did = j.value("did", "");
    r.keyId = j.value("keyId", "");
    r.sub = j.value("sub", "");
    r.issuerUri = j.value("issuer", "");
    auto alg = parse_signature_algorithm(j.value("algorithm", ""));
    auto key = base64_decode(j.value("publicKey", ""));
    if (r.did.empty() || !alg || !key) return std::nullopt;
    r.algorithm = *alg;
    r.publicKey = std::move(*key);
    return r;
}

}  // namespace

json Genesis::to_json() const {
    json j;
    j["admin"] = admin;
    json ids = json::array();
    for (const auto& r : identities) ids.push_back(identity_to_json(r));
    j["identities"] = std::move(ids);
    json roleMap = json::object();
    for (const auto& [did, bits] : roles) roleMap[did] = bits;
    j["roles"] = std::move(roleMap);
    return j;
}

std::optional<Genesis> Genesis::from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    Genesis g;
    g.admin = j.value("admin", "");
    if (auto it = j.find("identities"); it != j.end() && it->is_array()) {
        for (const auto& entry : *it) {
            auto record = identity_from_json(entry);
            if (!record) return std::nullopt;
            g.identities.push_back(std::move(*record));
        }
    }
    if (auto it = j.find("roles"); it != j.end() && it->is_object()) {
        for (auto kv = it->begin(); kv != it->end(); ++kv) {
            if (!kv.value().is_number_unsigned()) return std::nullopt;
            g.roles[kv.key()] = kv.value().get<uint32_t>();
        }
    }
    return g;
}

Hash32 Genesis::hash() const {
    return sha256(to_bytes(to_json().dump()));
}

LedgerState LedgerState::from_genesis(const Genesis& genesis) {
    LedgerState state;
    state.admin = genesis.admin;
    for (const auto& record : genesis.identities) state.registry.add(record);
    for (const auto& [did, bits] : genesis.roles) state.roles[did] = bits;
    return state;
}

// --- Transactions -----------------------------------------------------------

std::string to_string(TxKind kind) {
    switch (kind) {
        case TxKind::IssueCredential: return "IssueCredential";
        case TxKind::RevokeCredential: return "RevokeCredential";
        case TxKind::GiveConsent: return "GiveConsent";
        case TxKind::WithdrawConsent: return "WithdrawConsent";
        case TxKind::DeleteData: return "DeleteData";
        case TxKind::SetPermissions: return "SetPermissions";
    }
    return "unknown";
}

std::optional<TxKind> parse_tx_kind(std::string_view name) {
    for (TxKind kind : {TxKind::IssueCredential, TxKind::RevokeCredential, TxKind::GiveConsent,
                        TxKind::WithdrawConsent, TxKind::DeleteData, TxKind::SetPermissions}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

namespace {

json payload_to_json(const Transaction& tx) {
    json j;
    switch (tx.kind) {
        case TxKind::IssueCredential: {
            const auto& p = std::get<IssuePayload>(tx.payload);
            j["document"] = document_to_json(p.document);
            j["contentAddress"] = p.storedRef.address.hex();
            j["sealed"] = p.storedRef.sealed;
            break;
        }
        case TxKind::RevokeCredential:
            j["revocationKey"] = hash_hex(std::get<RevokePayload>(tx.payload).key);
            break;
        case TxKind::GiveConsent:
        case TxKind::WithdrawConsent:
        case TxKind::DeleteData:
            j["subject"] = std::get<ConsentPayload>(tx.payload).subject;
            break;
        case TxKind::SetPermissions: {
            const auto& p = std::get<PermissionsPayload>(tx.payload);
            j["user"] = p.user;
            j["permissionBits"] = p.permissionBits;
            break;
        }
    }
    return j;
}

json proof_to_json(const Proof& proof) {
    json j;
    j["proofType"] = to_string(proof.proofType);
    if (!proof.created.empty()) j["created"] = proof.created;
    if (!proof.verificationMethod.empty()) j["verificationMethod"] = proof.verificationMethod;
    j["signatureValue"] = proof.signatureValue;
    return j;
}

std::optional<Proof> proof_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    Proof p;
    auto alg = parse_signature_algorithm(j.value("proofType", ""));
    if (!alg) return std::nullopt;
    p.proofType = *alg;
    p.created = j.value("created", "");
    p.verificationMethod = j.value("verificationMethod", "");
    p.signatureValue = j.value("signatureValue", "");
    return p;
}

}  // namespace

Bytes transaction_signing_bytes(const Transaction& tx) {
    json j;
    j["kind"] = to_string(tx.kind);
    j["sender"] = tx.sender;
    j["payload"] = payload_to_json(tx);
    return to_bytes(j.dump());
}

Transaction make_signed_transaction(TxKind kind, const std::string& senderDid,
                                    std::variant<IssuePayload, RevokePayload, ConsentPayload,
                                                 PermissionsPayload>
                                        payload,
                                    const KeyPair& senderKey) {
    Transaction tx;
    tx.kind = kind;
    tx.sender = senderDid;
    tx.payload = std::move(payload);
    Bytes signingBytes = transaction_signing_bytes(tx);
    tx.senderSignature = sign_message(signingBytes, senderKey);
    tx.txId = sha256(signingBytes);
    return tx;
}

json transaction_to_json(const Transaction& tx) {
    json j;
    j["kind"] = to_string(tx.kind);
    j["sender"] = tx.sender;
    j["payload"] = payload_to_json(tx);
    j["senderSignature"] = proof_to_json(tx.senderSignature);
    j["txId"] = hash_hex(tx.txId);
    return j;
}

std::optional<Transaction> transaction_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    auto kind = parse_tx_kind(j.value("kind", ""));
    if (!kind) return std::nullopt;
    Transaction tx;
    tx.kind = *kind;
    tx.sender = j.value("sender", "");
    const auto payload = j.find("payload");
    if (payload == j.end() || !payload->is_object()) return std::nullopt;
    switch (tx.kind) {
        case TxKind::IssueCredential: {
            IssuePayload p;
            auto doc = payload->find("document");
            if (doc == payload->end()) return std::nullopt;
            auto parsed = validate_document_json(*doc);
            if (!parsed.ok()) return std::nullopt;
            p.document = std::move(*parsed.document);
            auto address = ContentAddress::from_hex(payload->value("contentAddress", ""));
            if (!address) return std::nullopt;
            p.storedRef = StoredRef{*address, payload->value("sealed", false)};
            tx.payload = std::move(p);
            break;
        }
        case TxKind::RevokeCredential: {
            auto key = hash_from_hex(payload->value("revocationKey", ""));
            if (!key) return std::nullopt;
            tx.payload = RevokePayload{*key};
            break;
        }
        case TxKind::GiveConsent:
        case TxKind::WithdrawConsent:
        case TxKind::DeleteData:
            tx.payload = ConsentPayload{payload->value("subject", "")};
            break;
        case TxKind::SetPermissions: {
            PermissionsPayload p;
            p.user = payload->value("user", "");
            if (auto bits = payload->find("permissionBits");
                bits != payload->end() && bits->is_number_unsigned()) {
                p.permissionBits = bits->get<uint32_t>();
            } else {
                return std::nullopt;
            }
            tx.payload = std::move(p);
            break;
        }
    }
    auto signature = proof_from_json(j.value("senderSignature", json::object()));
    if (!signature) return std::nullopt;
    tx.senderSignature = std::move(*signature);
    auto txId = hash_from_hex(j.value("txId", ""));
    if (!txId) return std::nullopt;
    tx.txId = *txId;
    return tx;
}

// --- Audit ------------------------------------------------------------------

std::string to_string(AuditEventName name) {
    switch (name) {
        case AuditEventName::CredentialIssued: return "CredentialIssued";
        case AuditEventName::CertificateRevoked: return "CertificateRevoked";
        case AuditEventName::ConsentGiven: return "ConsentGiven";
        case AuditEventName::ConsentWithdrawn: return "ConsentWithdrawn";
        case AuditEventName::DataDeleted: return "DataDeleted";
        case AuditEventName::PermissionsSet: return "PermissionsSet";
        case AuditEventName::TxRejected: return "TxRejected";
    }
    return "unknown";
}

std::optional<AuditEventName> parse_audit_event_name(std::string_view name) {
    for (AuditEventName e :
         {AuditEventName::CredentialIssued, AuditEventName::CertificateRevoked,
          AuditEventName::ConsentGiven, AuditEventName::ConsentWithdrawn,
          AuditEventName::DataDeleted, AuditEventName::PermissionsSet,
          AuditEventName::TxRejected}) {
        if (to_string(e) == name) return e;
    }
    return std::nullopt;
}

json audit_event_to_json(const AuditEvent& e) {
    json j;
    j["seq"] = e.seq;
    j["height"] = e.height;
    j["txId"] = hash_hex(e.txId);
    j["eventName"] = to_string(e.eventName);
    j["subject"] = e.subject;
    j["timestamp"] = e.timestamp;
    return j;
}

// --- Validation -------------------------------------------------------------

std::string to_string(TxInvalidReason reason) {
    switch (reason) {
        case TxInvalidReason::UnknownSender: return "UnknownSender";
        case TxInvalidReason::BadSignature: return "BadSignature";
        case TxInvalidReason::SchemaViolation: return "SchemaViolation";
        case TxInvalidReason::InvalidDocumentProof: return "InvalidDocumentProof";
        case TxInvalidReason::MissingPermission: return "MissingPermission";
        case TxInvalidReason::DuplicateId: return "DuplicateId";
        case TxInvalidReason::UnknownCredential: return "UnknownCredential";
        case TxInvalidReason::SubjectMismatch: return "SubjectMismatch";
        case TxInvalidReason::ConsentNotGiven: return "ConsentNotGiven";
        case TxInvalidReason::ConsentStillGiven: return "ConsentStillGiven";
        case TxInvalidReason::NotAdmin: return "NotAdmin";
        case TxInvalidReason::UnknownPermissionBits: return "UnknownPermissionBits";
    }
    return "unknown";
}

bool is_revoked(const LedgerState& state, const RevocationKey& key) {
    return state.revoked.count(key) > 0;
}

bool authorize_action(const LedgerState& state, const std::string& userDid, uint32_t required) {
    auto it = state.roles.find(userDid);
    uint32_t held = it == state.roles.end() ? 0 : it->second;
    return (held & required) == required;
}

TxValidity validate_transaction(const Transaction& tx, const LedgerState& state,
                                int64_t /*clock*/) {
    // 1. Sender signature against the registered key.
    const IdentityRecord* sender = state.registry.by_did(tx.sender);
    if (!sender) return TxValidity::invalid(TxInvalidReason::UnknownSender, tx.sender);
    if (!verify_signature(transaction_signing_bytes(tx), tx.senderSignature, sender->publicKey)) {
        return TxValidity::invalid(TxInvalidReason::BadSignature);
    }

    switch (tx.kind) {
        case TxKind::IssueCredential: {
            const auto& p = std::get<IssuePayload>(tx.payload);
            // 2a. Schema compliance, including a well-formed credential id.
            auto reparsed = validate_document_json(document_to_json(p.document));
            if (!reparsed.ok()) {
                return TxValidity::invalid(TxInvalidReason::SchemaViolation,
                                           reparsed.violations.empty()
                                               ? ""
                                               : reparsed.violations.front().path);
            }
            if (!CredentialId::is_valid(p.document.id)) {
                return TxValidity::invalid(TxInvalidReason::SchemaViolation, "/id");
            }
            // 2b. The document proof must verify against the issuer's key.
            if (!p.document.proof) {
                return TxValidity::invalid(TxInvalidReason::InvalidDocumentProof, "missing");
            }
            const IdentityRecord* issuerKey =
                state.registry.by_key_id(p.document.proof->verificationMethod);
            if (!issuerKey) issuerKey = state.registry.by_issuer(p.document.issuer);
            if (!issuerKey ||
                !verify_signature(canonicalize(p.document, true), *p.document.proof,
                                  issuerKey->publicKey)) {
                return TxValidity::invalid(TxInvalidReason::InvalidDocumentProof);
            }
            // 2c. Sender holds ISSUE.
            if (!authorize_action(state, tx.sender, permissions::kIssue)) {
                return TxValidity::invalid(TxInvalidReason::MissingPermission, "ISSUE");
            }
            // 2d. Id not already issued.
            if (state.credentials.count(p.document.id)) {
                return TxValidity::invalid(TxInvalidReason::DuplicateId, p.document.id);
            }
            return TxValidity::ok();
        }
        case TxKind::RevokeCredential: {
            const auto& p = std::get<RevokePayload>(tx.payload);
            if (!authorize_action(state, tx.sender, permissions::kRevoke)) {
                return TxValidity::invalid(TxInvalidReason::MissingPermission, "REVOKE");
            }
            if (!state.revocationIndex.count(p.key)) {
                return TxValidity::invalid(TxInvalidReason::UnknownCredential);
            }
            return TxValidity::ok();
        }
        case TxKind::GiveConsent:
        case TxKind::WithdrawConsent:
        case TxKind::DeleteData: {
            const auto& p = std::get<ConsentPayload>(tx.payload);
            // Consent transactions must be signed by the subject itself.
            if (p.subject != tx.sender) {
                return TxValidity::invalid(TxInvalidReason::SubjectMismatch, p.subject);
            }
            auto it = state.consentGiven.find(p.subject);
            bool given = it != state.consentGiven.end() && it->second;
            if (tx.kind == TxKind::WithdrawConsent && !given) {
                return TxValidity::invalid(TxInvalidReason::ConsentNotGiven, p.subject);
            }
            if (tx.kind == TxKind::DeleteData && given) {
                return TxValidity::invalid(TxInvalidReason::ConsentStillGiven, p.subject);
            }
            return TxValidity::ok();
        }
        case TxKind::SetPermissions: {
            const auto& p = std::get<PermissionsPayload>(tx.payload);
            if (tx.sender != state.admin) {
                return TxValidity::invalid(TxInvalidReason::NotAdmin, tx.sender);
            }
            if (!permissions::known_bits(p.permissionBits)) {
                return TxValidity::invalid(TxInvalidReason::UnknownPermissionBits);
            }
            return TxValidity::ok();
        }
    }
    return TxValidity::invalid(TxInvalidReason::SchemaViolation, "unknown kind");
}

// --- Application ------------------------------------------------------------

namespace {

AuditEvent make_event(LedgerState& state, uint64_t height, const Hash32& txId,
                      AuditEventName name, std::string subject) {
    AuditEvent event;
    event.seq = state.nextAuditSeq++;
    event.height = height;
    event.txId = txId;
    event.eventName = name;
    event.subject = std::move(subject);
    event.timestamp = static_cast<int64_t>(height);
    state.auditLog.push_back(event);
    return event;
}

}  // namespace

ApplyResult apply_transaction(LedgerState& state, const Transaction& tx, uint64_t height) {
    TxValidity validity = validate_transaction(tx, state, 0);
    if (!validity.valid) {
        throw std::logic_error("apply_transaction on invalid tx: " +
                               to_string(validity.reason));
    }
    ApplyResult result;
    switch (tx.kind) {
        case TxKind::IssueCredential: {
            const auto& p = std::get<IssuePayload>(tx.payload);
            CredentialRecord record;
            record.issuer = tx.sender;
            record.holder = p.document.recipient.id;
            record.contentAddress = p.storedRef.address;
            record.docHash = sha256(canonicalize(p.document, false));
            state.credentials[p.document.id] = record;
            state.revocationIndex[revocation_key(p.document.id)] = p.document.id;
            result.events.push_back(make_event(state, height, tx.txId,
                                               AuditEventName::CredentialIssued, p.document.id));
            break;
        }
        case TxKind::RevokeCredential: {
            const auto& p = std::get<RevokePayload>(tx.payload);
            state.revoked.insert(p.key);
            result.events.push_back(make_event(state, height, tx.txId,
                                               AuditEventName::CertificateRevoked,
                                               state.revocationIndex.at(p.key)));
            break;
        }
        case TxKind::GiveConsent: {
            const auto& p = std::get<ConsentPayload>(tx.payload);
            state.consentGiven[p.subject] = true;
            result.events.push_back(
                make_event(state, height, tx.txId, AuditEventName::ConsentGiven, p.subject));
            break;
        }
        case TxKind::WithdrawConsent: {
            const auto& p = std::get<ConsentPayload>(tx.payload);
            state.consentGiven[p.subject] = false;
            result.events.push_back(
                make_event(state, height, tx.txId, AuditEventName::ConsentWithdrawn, p.subject));
            break;
        }
        case TxKind::DeleteData: {
            const auto& p = std::get<ConsentPayload>(tx.payload);
            // The off-chain blobs and pointers of every credential held by
            // the subject are scheduled for destruction; the ledger records
            // themselves stay.
            for (const auto& [id, record] : state.credentials) {
                if (record.holder != p.subject) continue;
                result.effects.push_back(
                    {Effect::Kind::EraseBlob, record.contentAddress, {}});
                result.effects.push_back({Effect::Kind::InvalidatePointer, {}, id});
            }
            result.events.push_back(
                make_event(state, height, tx.txId, AuditEventName::DataDeleted, p.subject));
            break;
        }
        case TxKind::SetPermissions: {
            const auto& p = std::get<PermissionsPayload>(tx.payload);
            state.roles[p.user] = p.permissionBits;
            result.events.push_back(
                make_event(state, height, tx.txId, AuditEventName::PermissionsSet, p.user));
            break;
        }
    }
    return result;
}

void append_rejection_event(LedgerState& state, const Transaction& tx, TxInvalidReason reason) {
    make_event(state, state.height, tx.txId, AuditEventName::TxRejected,
               tx.sender + ":" + to_string(reason));
}

// --- Commitment ---------------------------------------------------------------

Hash32 credential_leaf(const std::string& id, const Hash32& docHash, bool revoked) {
    Bytes buf;
    buf.reserve(id.size() + 33);
    buf.insert(buf.end(), id.begin(), id.end());
    buf.insert(buf.end(), docHash.begin(), docHash.end());
    buf.push_back(revoked ? 1 : 0);
    return sha256(buf);
}

std::vector<Hash32> state_leaves(const LedgerState& state) {
    std::vector<Hash32> leaves;
    leaves.reserve(state.credentials.size());
    // std::map iterates in lexical id order.
    for (const auto& [id, record] : state.credentials) {
        bool revoked = is_revoked(state, revocation_key(id));
        leaves.push_back(credential_leaf(id, record.docHash, revoked));
    }
    return leaves;
}

Hash32 state_commitment(const LedgerState& state) {
    auto leaves = state_leaves(state);
    return merkle_root(leaves);
}

// --- Audit query ----------------------------------------------------------------

std::vector<AuditEvent> audit_query(const LedgerState& state, const AuditFilter& filter) {
    std::vector<AuditEvent> out;
    for (const auto& event : state.auditLog) {
        if (filter.eventName && event.eventName != *filter.eventName) continue;
        if (filter.subject && event.subject != *filter.subject) continue;
        if (filter.fromHeight && event.height < *filter.fromHeight) continue;
        if (filter.toHeight && event.height > *filter.toHeight) continue;
        out.push_back(event);
    }
    return out;
}

// --- Verification ----------------------------------------------------------------

std::string to_string(VerificationOutcome outcome) {
    switch (outcome) {
        case VerificationOutcome::Malformed: return "malformed";
        case VerificationOutcome::UnknownIssuer: return "unknown_issuer";
        case VerificationOutcome::InvalidSignature: return "invalid_signature";
        case VerificationOutcome::Revoked: return "revoked";
        case VerificationOutcome::Expired: return "expired";
        case VerificationOutcome::NotYetValid: return "not_yet_valid";
        case VerificationOutcome::Valid: return "valid";
    }
    return "unknown";
}

VerificationOutcome verify_credential(const LedgerState& state, const CredentialDocument& doc,
                                      int64_t now) {
    // Outcomes are evaluated in a fixed order; the first failing class wins.
    auto reparsed = validate_document_json(document_to_json(doc));
    if (!reparsed.ok() || doc.id.empty()) return VerificationOutcome::Malformed;

    const IdentityRecord* issuer = nullptr;
    if (doc.proof && !doc.proof->verificationMethod.empty()) {
        issuer = state.registry.by_key_id(doc.proof->verificationMethod);
    }
    if (!issuer) issuer = state.registry.by_issuer(doc.issuer);
    if (!issuer) return VerificationOutcome::UnknownIssuer;

    if (!doc.proof || !verify_signature(canonicalize(doc, true), *doc.proof, issuer->publicKey)) {
        return VerificationOutcome::InvalidSignature;
    }

    if (is_revoked(state, revocation_key(doc.id))) return VerificationOutcome::Revoked;

    switch (temporal_status(doc, now)) {
        case ValidityStatus::Expired: return VerificationOutcome::Expired;
        case ValidityStatus::NotYetValid: return VerificationOutcome::NotYetValid;
        case ValidityStatus::Valid: break;
    }
    return VerificationOutcome::Valid;
}

VerificationOutcome verify_credential_raw(const LedgerState& state,
                                          std::span<const uint8_t> rawJson, int64_t now) {
    auto parsed = validate_document(rawJson);
    if (!parsed.ok()) return VerificationOutcome::Malformed;
    return verify_credential(state, *parsed.document, now);
}

// --- Blocks & journal ---------------------------------------------------------

Hash32 block_hash(const Block& block) {
    return sha256(to_bytes(block_to_json(block).dump()));
}

json block_to_json(const Block& block) {
    json j;
    j["height"] = block.height;
    j["parentHash"] = hash_hex(block.parentHash);
    json txs = json::array();
    for (const auto& tx : block.transactions) txs.push_back(transaction_to_json(tx));
    j["transactions"] = std::move(txs);
    j["stateRoot"] = hash_hex(block.stateRoot);
    j["proposer"] = block.proposer;
    return j;
}

std::optional<Block> block_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    Block block;
    if (auto it = j.find("height"); it != j.end() && it->is_number_unsigned()) {
        block.height = it->get<uint64_t>();
    } else {
        return std::nullopt;
    }
    auto parent = hash_from_hex(j.value("parentHash", ""));
    auto root = hash_from_hex(j.value("stateRoot", ""));
    if (!parent || !root) return std::nullopt;
    block.parentHash = *parent;
    block.stateRoot = *root;
    block.proposer = j.value("proposer", 0u);
    if (auto it = j.find("transactions"); it != j.end() && it->is_array()) {
        for (const auto& entry : *it) {
            auto tx = transaction_from_json(entry);
            if (!tx) return std::nullopt;
            block.transactions.push_back(std::move(*tx));
        }
    }
    return block;
}

ApplyResult apply_block(LedgerState& state, const Block& block) {
    ApplyResult combined;
    for (const auto& tx : block.transactions) {
        ApplyResult one = apply_transaction(state, tx, block.height);
        combined.events.insert(combined.events.end(), one.events.begin(), one.events.end());
        combined.effects.insert(combined.effects.end(), one.effects.begin(), one.effects.end());
    }
    state.height = block.height;
    return combined;
}

Journal::Journal(std::filesystem::path path) : path_(std::move(path)) {}

bool Journal::exists() const {
    return std::filesystem::exists(path_);
}

void Journal::append_line(const json& record) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    out << record.dump() << "\n";
    if (!out) throw std::runtime_error("journal write failed: " + path_.string());
}

void Journal::append_genesis(const Genesis& genesis) {
    json record;
    record["genesis"] = genesis.to_json();
    append_line(record);
}

void Journal::append_block(const Block& block) {
    json record;
    record["block"] = block_to_json(block);
    append_line(record);
}

void Journal::append_rejection(const Transaction& tx, TxInvalidReason reason) {
    json record;
    json body;
    body["tx"] = transaction_to_json(tx);
    body["reason"] = to_string(reason);
    record["rejected"] = std::move(body);
    append_line(record);
}

std::optional<Journal::Replay> Journal::replay() const {
    std::ifstream in(path_);
    if (!in) return std::nullopt;
    std::optional<Replay> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) return std::nullopt;
        if (record.contains("genesis")) {
            auto genesis = Genesis::from_json(record["genesis"]);
            if (!genesis || out) return std::nullopt;  // exactly one genesis, first
            out.emplace();
            out->genesis = *genesis;
            out->state = LedgerState::from_genesis(*genesis);
        } else if (record.contains("block")) {
            if (!out) return std::nullopt;
            auto block = block_from_json(record["block"]);
            if (!block) return std::nullopt;
            try {
                apply_block(out->state, *block);
            } catch (const std::logic_error&) {
                return std::nullopt;  // journal carries an invalid transaction
            }
            if (state_commitment(out->state) != block->stateRoot) return std::nullopt;
            out->blocks.push_back(std::move(*block));
        } else if (record.contains("rejected")) {
            if (!out) return std::nullopt;
            const auto& body = record["rejected"];
            auto tx = transaction_from_json(body.value("tx", json::object()));
            if (!tx) return std::nullopt;
            // Reasons map back to an enum member; default keeps replay total.
            TxInvalidReason reason = TxInvalidReason::SchemaViolation;
            std::string name = body.value("reason", "");
            for (int i = 0; i <= static_cast<int>(TxInvalidReason::UnknownPermissionBits); ++i) {
                if (to_string(static_cast<TxInvalidReason>(i)) == name) {
                    reason = static_cast<TxInvalidReason>(i);
                    break;
                }
            }
            append_rejection_event(out->state, *tx, reason);
        } else {
            return std::nullopt;
        }
    }
    return out;
}

}  // namespace bacip
