#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bacip/bytes.hpp"
#include "bacip/crypto.hpp"
#include "bacip/rng.hpp"

namespace bacip {

struct CredentialId {
    std::string uuid;

    static bool is_valid(std::string_view text);
    auto operator<=>(const CredentialId&) const = default;
};

// Version-4, RFC-4122 variant; deterministic under a fixed rng seed.
CredentialId generate_credential_id(RandomSource& rng);

struct Did {
    std::string value;

    // did:<method>:<identifier>, lowercase alphanumeric method.
    static bool is_valid(std::string_view text);
    auto operator<=>(const Did&) const = default;
};

struct Recipient {
    std::string id;    // DID string
    std::string name;  // optional, empty when unset

    bool operator==(const Recipient&) const = default;
};

// Internal model uses the certificate-metadata field names; VC-style inputs
// are accepted through an alias table (see parse notes in credential.cpp).
struct CredentialDocument {
    std::string context;  // serialized as "@context"
    std::string type;
    std::string id;  // credential id; empty until issued
    std::string issuer;
    Recipient recipient;
    std::map<std::string, std::string> credentialSubject;
    std::string issueDate;       // ISO-8601
    std::string expirationDate;  // optional, empty when unset
    std::optional<Proof> proof;

    bool operator==(const CredentialDocument&) const = default;
};

struct Violation {
    std::string path;    // JSON pointer, e.g. "/issuer"
    std::string reason;  // e.g. "required"

    bool operator==(const Violation&) const = default;
};

enum class ParseStatus { Ok, MalformedJson, SchemaViolation };

struct ParseResult {
    ParseStatus status = ParseStatus::MalformedJson;
    std::optional<CredentialDocument> document;
    std::vector<Violation> violations;  // every violation, not just the first

    bool ok() const { return status == ParseStatus::Ok; }
};

ParseResult validate_document(std::span<const uint8_t> rawJson);
ParseResult validate_document_json(const nlohmann::json& parsed);

nlohmann::json document_to_json(const CredentialDocument& doc, bool excludeProof = false);

// Deterministic signing substrate: keys sorted at every depth, no
// insignificant whitespace, raw UTF-8, unset optional fields omitted.
Bytes canonicalize(const CredentialDocument& doc, bool excludeProof);

enum class ValidityStatus { Valid, NotYetValid, Expired };

std::string to_string(ValidityStatus status);

// Half-open validity window [issueDate, expirationDate); a missing
// expirationDate means the credential never expires.
ValidityStatus temporal_status(const CredentialDocument& doc, int64_t nowEpochSeconds);

// Issue-request body (the REST request shape): issuer, recipient{name,id},
// credential{type,course}. Optional issueDate/expirationDate pass through.
struct IssueRequest {
    std::string issuer;
    Recipient recipient;
    std::string credentialType;                       // credential.type
    std::map<std::string, std::string> claims;        // remaining credential fields
    std::string issueDate;                            // optional
    std::string expirationDate;                       // optional
};

struct IssueRequestResult {
    ParseStatus status = ParseStatus::MalformedJson;
    std::optional<IssueRequest> request;
    std::vector<Violation> violations;

    bool ok() const { return status == ParseStatus::Ok; }
};

IssueRequestResult validate_issue_request(std::span<const uint8_t> rawJson);

}  // namespace bacip
