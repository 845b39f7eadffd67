#include "bacip/node.hpp"

#include <chrono>

#include "bacip/iso8601.hpp"

namespace bacip {

namespace {

constexpr const char* kValidatorKeyId = "did:bacip:node#consensus";
constexpr const char* kDefaultContext = "https://schema.org";

}  // namespace

int64_t system_clock_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string did_from_key_id(const std::string& keyId) {
    size_t fragment = keyId.find('#');
    return fragment == std::string::npos ? keyId : keyId.substr(0, fragment);
}

Node::Node(NodeOptions options)
    : keystore_(Keystore::open(options.keystorePath, options.passphrase)),
      store_(options.storeRoot),
      journal_(options.journalPath),
      anchorLog_(options.anchorLogPath),
      clock_(std::move(options.clock)) {
    // The node's own consensus identity, created on first start.
    if (!keystore_.has_key(kValidatorKeyId)) {
        SystemRng rng;
        keystore_.add_key(generate_keypair(SignatureAlgorithm::Ed25519, rng, kValidatorKeyId));
    }
    validatorKey_ = *keystore_.key(kValidatorKeyId);

    std::vector<Block> restored;
    if (journal_.exists()) {
        auto replay = journal_.replay();
        if (!replay) throw std::runtime_error("ledger journal corrupt: " + journal_.path().string());
        genesis_ = replay->genesis;
        restored = std::move(replay->blocks);
    } else {
        genesis_ = options.genesis ? *options.genesis : default_genesis();
        journal_.append_genesis(genesis_);
    }

    ConsensusConfig config;
    config.n = 1;
    config.validators.push_back(
        {did_from_key_id(kValidatorKeyId), validatorKey_.algorithm, validatorKey_.publicKey});
    config.proposeEmptyBlocks = false;
    config.blockLimit = 64;
    engine_ = std::make_unique<ConsensusEngine>(config, 0, validatorKey_, genesis_);
    engine_->restore_chain(restored);
}

Genesis Node::default_genesis() const {
    Genesis genesis;
    for (const auto& keyId : keystore_.key_ids()) {
        if (keyId == kValidatorKeyId) continue;
        auto pair = keystore_.key(keyId);
        if (!pair) continue;
        IdentityRecord record;
        record.did = did_from_key_id(keyId);
        record.keyId = keyId;
        record.algorithm = pair->algorithm;
        record.publicKey = pair->publicKey;
        genesis.identities.push_back(std::move(record));
        genesis.roles[did_from_key_id(keyId)] =
            permissions::kIssue | permissions::kRevoke | permissions::kVerify;
        if (genesis.admin.empty()) genesis.admin = did_from_key_id(keyId);
    }
    if (!genesis.admin.empty()) genesis.roles[genesis.admin] |= permissions::kAdmin;
    return genesis;
}

const IdentityRecord* Node::identity_for_key(const std::string& keyId) const {
    return state().registry.by_key_id(keyId);
}

void Node::execute_effects(const std::vector<Effect>& effects) {
    for (const auto& effect : effects) {
        switch (effect.kind) {
            case Effect::Kind::EraseBlob:
                store_.erase(effect.address);
                keystore_.drop_sealing_key(effect.address);  // crypto-shred
                break;
            case Effect::Kind::InvalidatePointer:
                if (store_.resolve_pointer(effect.pointerId)) {
                    store_.invalidate_pointer(effect.pointerId);
                }
                break;
        }
    }
}

Node::SubmitOutcome Node::submit(Transaction tx) {
    SubmitOutcome outcome;
    outcome.txId = tx.txId;
    if (!consensusAvailable_) {
        outcome.validity = TxValidity::invalid(TxInvalidReason::SchemaViolation, "unavailable");
        return outcome;
    }
    outcome.validity = validate_transaction(tx, state(), clock_());
    if (!outcome.validity.valid) {
        engine_->record_rejection(tx, outcome.validity.reason);
        journal_.append_rejection(tx, outcome.validity.reason);
        return outcome;
    }
    outcome.accepted = true;
    auto output = engine_->submit_transactions({tx});
    for (const auto& finalized : output.finalized) {
        journal_.append_block(finalized.block);
        anchorLog_.anchor_block(finalized.block, state());
        execute_effects(finalized.effects);
        for (const auto& blockTx : finalized.block.transactions) {
            if (blockTx.txId == tx.txId) {
                outcome.finalized = true;
                outcome.height = finalized.block.height;
            }
        }
    }
    return outcome;
}

ContentAddress Node::seal_and_store(std::span<const uint8_t> plaintext, RandomSource& rng) {
    Bytes dataKey = rng.bytes(32);
    SealedPayload sealed = encrypt_payload(plaintext, dataKey, rng);
    Bytes blob = sealed_to_bytes(sealed);
    StoredRef ref = store_.put(blob, true);
    keystore_.put_sealing_key(ref.address, dataKey);
    return ref.address;
}

std::optional<Bytes> Node::fetch_and_open(const ContentAddress& address) const {
    auto blob = store_.get(address);
    if (!blob) return std::nullopt;
    auto sealed = sealed_from_bytes(*blob);
    if (!sealed) return std::nullopt;
    auto dataKey = keystore_.sealing_key(address);
    if (!dataKey) return std::nullopt;
    return decrypt_payload(*sealed, *dataKey);
}

Node::IssueOutcome Node::issue(const IssueRequest& request, const std::string& issuerKeyId,
                               RandomSource& rng) {
    IssueOutcome outcome;
    const IdentityRecord* issuer = identity_for_key(issuerKeyId);
    if (!issuer) {
        outcome.error = "issuer key not registered: " + issuerKeyId;
        return outcome;
    }
    auto signingKey = keystore_.key(issuerKeyId);
    if (!signingKey) {
        outcome.error = "issuer key not in keystore: " + issuerKeyId;
        return outcome;
    }

    CredentialDocument doc;
    doc.context = kDefaultContext;
    doc.type = request.credentialType;
    doc.id = generate_credential_id(rng).uuid;
    doc.issuer = request.issuer;
    doc.recipient = request.recipient;
    doc.credentialSubject = request.claims;
    doc.issueDate =
        request.issueDate.empty() ? format_iso8601_date(clock_()) : request.issueDate;
    doc.expirationDate = request.expirationDate;
    doc.proof = sign_message(canonicalize(doc, true), *signingKey, format_iso8601(clock_()));

    auto reparsed = validate_document_json(document_to_json(doc));
    if (!reparsed.ok()) {
        outcome.violations = reparsed.violations;
        outcome.error = "document invalid";
        return outcome;
    }

    ContentAddress address = seal_and_store(canonicalize(doc, false), rng);
    store_.create_pointer(doc.id, address);

    IssuePayload payload;
    payload.document = doc;
    payload.storedRef = StoredRef{address, true};
    Transaction tx = make_signed_transaction(TxKind::IssueCredential, issuer->did,
                                             std::move(payload), *signingKey);
    SubmitOutcome submitted = submit(std::move(tx));
    if (!submitted.finalized) {
        outcome.error = submitted.accepted ? "consensus unavailable"
                                           : to_string(submitted.validity.reason);
        return outcome;
    }
    outcome.ok = true;
    outcome.document = std::move(doc);
    outcome.txId = submitted.txId;
    outcome.height = submitted.height;
    outcome.contentAddress = address;
    return outcome;
}

Node::RevokeOutcome Node::revoke(const std::string& credentialId,
                                 const std::string& signerKeyId) {
    RevokeOutcome outcome;
    if (!consensusAvailable_) {
        outcome.status = RevokeOutcome::Status::Unavailable;
        return outcome;
    }
    const IdentityRecord* signer = identity_for_key(signerKeyId);
    auto signingKey = keystore_.key(signerKeyId);
    if (!signer || !signingKey) {
        outcome.validity = TxValidity::invalid(TxInvalidReason::UnknownSender, signerKeyId);
        return outcome;
    }
    if (!state().credentials.count(credentialId)) {
        outcome.status = RevokeOutcome::Status::UnknownId;
        return outcome;
    }
    RevocationKey key = revocation_key(credentialId);
    if (is_revoked(state(), key)) {
        // The registry is monotone; a second revocation is a no-op success.
        outcome.status = RevokeOutcome::Status::AlreadyRevoked;
        return outcome;
    }
    Transaction tx = make_signed_transaction(TxKind::RevokeCredential, signer->did,
                                             RevokePayload{key}, *signingKey);
    SubmitOutcome submitted = submit(std::move(tx));
    outcome.validity = submitted.validity;
    outcome.txId = submitted.txId;
    if (!submitted.finalized) {
        outcome.status = RevokeOutcome::Status::Rejected;
        return outcome;
    }
    outcome.status = RevokeOutcome::Status::Revoked;
    for (const auto& event : state().auditLog) {
        if (event.txId == submitted.txId &&
            event.eventName == AuditEventName::CertificateRevoked) {
            outcome.auditSeq = event.seq;
        }
    }
    return outcome;
}

Node::ConsentOutcome Node::consent(ConsentAction action, const std::string& subjectKeyId) {
    ConsentOutcome outcome;
    const IdentityRecord* subject = identity_for_key(subjectKeyId);
    auto signingKey = keystore_.key(subjectKeyId);
    if (!subject || !signingKey) {
        outcome.validity = TxValidity::invalid(TxInvalidReason::UnknownSender, subjectKeyId);
        return outcome;
    }
    TxKind kind = action == ConsentAction::Give       ? TxKind::GiveConsent
                  : action == ConsentAction::Withdraw ? TxKind::WithdrawConsent
                                                      : TxKind::DeleteData;
    Transaction tx = make_signed_transaction(kind, subject->did,
                                             ConsentPayload{subject->did}, *signingKey);
    SubmitOutcome submitted = submit(std::move(tx));
    outcome.validity = submitted.validity;
    outcome.txId = submitted.txId;
    outcome.height = submitted.height;
    outcome.ok = submitted.finalized;
    return outcome;
}

Node::VerifyResult Node::verify_document(std::span<const uint8_t> rawJson) {
    VerifyResult result;
    auto parsed = validate_document(rawJson);
    if (!parsed.ok()) {
        result.outcome = VerificationOutcome::Malformed;
        return result;
    }
    result.credentialId = parsed.document->id;
    result.outcome = verify_credential(state(), *parsed.document, clock_());
    auto record = state().credentials.find(result.credentialId);
    if (record != state().credentials.end()) {
        result.known = true;
        result.docHash = record->second.docHash;
        result.revoked = is_revoked(state(), revocation_key(result.credentialId));
        if (anchorLog_.latest()) {
            result.anchorProof = build_inclusion_proof(state(), result.credentialId,
                                                       anchorLog_.latest()->anchorIndex);
        }
    }
    return result;
}

Node::VerifyResult Node::verify_by_id(const std::string& credentialId) {
    VerifyResult result;
    result.credentialId = credentialId;
    auto record = state().credentials.find(credentialId);
    if (record == state().credentials.end()) return result;  // known == false
    result.known = true;
    result.docHash = record->second.docHash;
    result.revoked = is_revoked(state(), revocation_key(credentialId));
    result.outcome =
        result.revoked ? VerificationOutcome::Revoked : VerificationOutcome::Valid;
    if (anchorLog_.latest()) {
        result.anchorProof = build_inclusion_proof(state(), credentialId,
                                                   anchorLog_.latest()->anchorIndex);
    }
    return result;
}

}  // namespace bacip
