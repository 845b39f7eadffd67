#include "bacip/credential.hpp"

#include <algorithm>

#include "bacip/iso8601.hpp"

namespace bacip {

using nlohmann::json;

namespace {

bool is_hex_lower(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

// Absolute URI: <scheme>:<rest> with a letter-led scheme. DIDs pass too.
bool is_absolute_uri(std::string_view s) {
    size_t colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 >= s.size()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (size_t i = 1; i < colon; ++i) {
        char c = s[i];
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') {
            return false;
        }
    }
    return true;
}

const json* find_member(const json& obj, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        auto it = obj.find(name);
        if (it != obj.end()) return &*it;
    }
    return nullptr;
}

void require_string(const json* value, const char* path, std::string& out,
                    std::vector<Violation>& violations, bool required) {
    if (!value) {
        if (required) violations.push_back({path, "required"});
        return;
    }
    if (!value->is_string()) {
        violations.push_back({path, "must be a string"});
        return;
    }
    out = value->get<std::string>();
}

}  // namespace

bool CredentialId::is_valid(std::string_view text) {
    // ^[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}$
    if (text.size() != 36) return false;
    for (size_t i : {8u, 13u, 18u, 23u}) {
        if (text[i] != '-') return false;
    }
    for (size_t i = 0; i < 36; ++i) {
        if (i == 8 || i == 13 || i == 18 || i == 23) continue;
        if (!is_hex_lower(text[i])) return false;
    }
    if (text[14] != '4') return false;
    char variant = text[19];
    return variant == '8' || variant == '9' || variant == 'a' || variant == 'b';
}

CredentialId generate_credential_id(RandomSource& rng) {
    uint8_t raw[16];
    rng.fill(raw);
    raw[6] = static_cast<uint8_t>((raw[6] & 0x0f) | 0x40);  // version 4
    raw[8] = static_cast<uint8_t>((raw[8] & 0x3f) | 0x80);  // RFC-4122 variant
    std::string hex = hex_encode(raw);
    std::string uuid = hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) +
                       "-" + hex.substr(16, 4) + "-" + hex.substr(20, 12);
    return CredentialId{uuid};
}

bool Did::is_valid(std::string_view text) {
    // did:[a-z0-9]+:.+
    constexpr std::string_view prefix = "did:";
    if (text.substr(0, prefix.size()) != prefix) return false;
    text.remove_prefix(prefix.size());
    size_t colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 >= text.size()) return false;
    for (size_t i = 0; i < colon; ++i) {
        char c = text[i];
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) return false;
    }
    return true;
}

// Alias table (VC-style inputs -> internal names):
//   "@type"               -> type (also: a type array uses its first element)
//   "issuanceDate"        -> issueDate
//   credentialSubject.id  -> recipient.id when no recipient member is present
//   "signature"           -> proof; inner "type" -> proofType
// Proofs with an unsupported type (e.g. RSA suites) are dropped rather than
// rejected, leaving the document unsigned.
ParseResult validate_document_json(const nlohmann::json& parsed) {
    ParseResult result;
    if (!parsed.is_object()) {
        result.status = ParseStatus::SchemaViolation;
        result.violations.push_back({"", "must be a JSON object"});
        return result;
    }

    CredentialDocument doc;
    auto& violations = result.violations;

    require_string(find_member(parsed, {"@context", "context"}), "/@context", doc.context,
                   violations, true);

    if (const json* type = find_member(parsed, {"type", "@type"})) {
        if (type->is_string()) {
            doc.type = type->get<std::string>();
        } else if (type->is_array() && !type->empty() && (*type)[0].is_string()) {
            doc.type = (*type)[0].get<std::string>();
        } else {
            violations.push_back({"/type", "must be a string or array of strings"});
        }
    } else {
        violations.push_back({"/type", "required"});
    }

    if (const json* id = find_member(parsed, {"id"})) {
        if (!id->is_string()) {
            violations.push_back({"/id", "must be a string"});
        } else {
            doc.id = id->get<std::string>();
            if (!CredentialId::is_valid(doc.id) && !Did::is_valid(doc.id)) {
                violations.push_back({"/id", "must be a UUIDv4 or DID"});
            }
        }
    }

    require_string(find_member(parsed, {"issuer"}), "/issuer", doc.issuer, violations, true);
    if (!doc.issuer.empty() && !is_absolute_uri(doc.issuer)) {
        violations.push_back({"/issuer", "must be an absolute URI or DID"});
    }

    if (const json* subject = find_member(parsed, {"credentialSubject"})) {
        if (!subject->is_object()) {
            violations.push_back({"/credentialSubject", "must be an object"});
        } else {
            for (auto it = subject->begin(); it != subject->end(); ++it) {
                if (!it.value().is_string()) {
                    violations.push_back(
                        {"/credentialSubject/" + it.key(), "nested subjects are not supported"});
                    continue;
                }
                doc.credentialSubject[it.key()] = it.value().get<std::string>();
            }
        }
    } else {
        violations.push_back({"/credentialSubject", "required"});
    }

    // Recipient, with the subject-id alias for VC-shaped documents.
    if (const json* recipient = find_member(parsed, {"recipient"})) {
        if (!recipient->is_object()) {
            violations.push_back({"/recipient", "must be an object"});
        } else {
            require_string(find_member(*recipient, {"id"}), "/recipient/id", doc.recipient.id,
                           violations, true);
            require_string(find_member(*recipient, {"name"}), "/recipient/name",
                           doc.recipient.name, violations, false);
        }
    } else if (auto it = doc.credentialSubject.find("id"); it != doc.credentialSubject.end()) {
        doc.recipient.id = it->second;
        doc.credentialSubject.erase(it);
    } else {
        violations.push_back({"/recipient/id", "required"});
    }
    if (!doc.recipient.id.empty() && !Did::is_valid(doc.recipient.id)) {
        violations.push_back({"/recipient/id", "must be a DID"});
    }

    if (!doc.credentialSubject.empty() && !doc.credentialSubject.count("degree") &&
        !doc.credentialSubject.count("course")) {
        violations.push_back({"/credentialSubject", "must contain \"degree\" or \"course\""});
    }

    require_string(find_member(parsed, {"issueDate", "issuanceDate"}), "/issueDate",
                   doc.issueDate, violations, true);
    std::optional<int64_t> issueEpoch;
    if (!doc.issueDate.empty()) {
        issueEpoch = parse_iso8601(doc.issueDate);
        if (!issueEpoch) violations.push_back({"/issueDate", "must be an ISO-8601 date"});
    }
    require_string(find_member(parsed, {"expirationDate"}), "/expirationDate",
                   doc.expirationDate, violations, false);
    if (!doc.expirationDate.empty()) {
        auto expiryEpoch = parse_iso8601(doc.expirationDate);
        if (!expiryEpoch) {
            violations.push_back({"/expirationDate", "must be an ISO-8601 date"});
        } else if (issueEpoch && *issueEpoch >= *expiryEpoch) {
            violations.push_back({"/expirationDate", "must be after issueDate"});
        }
    }

    if (const json* proof = find_member(parsed, {"proof", "signature"})) {
        if (proof->is_object()) {
            std::string typeName;
            if (const json* t = find_member(*proof, {"proofType", "type"}); t && t->is_string()) {
                typeName = t->get<std::string>();
            }
            if (auto alg = parse_signature_algorithm(typeName)) {
                Proof p;
                p.proofType = *alg;
                std::vector<Violation> ignored;
                require_string(find_member(*proof, {"created"}), "/proof/created", p.created,
                               ignored, false);
                require_string(find_member(*proof, {"verificationMethod"}),
                               "/proof/verificationMethod", p.verificationMethod, ignored, false);
                require_string(find_member(*proof, {"signatureValue"}), "/proof/signatureValue",
                               p.signatureValue, violations, true);
                doc.proof = std::move(p);
            }
            // Unsupported suites (the VC example's RSA proof) drop the proof.
        } else {
            violations.push_back({"/proof", "must be an object"});
        }
    }

    if (!violations.empty()) {
        result.status = ParseStatus::SchemaViolation;
        return result;
    }
    result.status = ParseStatus::Ok;
    result.document = std::move(doc);
    return result;
}

ParseResult validate_document(std::span<const uint8_t> rawJson) {
    json parsed = json::parse(rawJson.begin(), rawJson.end(), nullptr, false);
    if (parsed.is_discarded()) {
        ParseResult result;
        result.status = ParseStatus::MalformedJson;
        result.violations.push_back({"", "malformed JSON"});
        return result;
    }
    return validate_document_json(parsed);
}

nlohmann::json document_to_json(const CredentialDocument& doc, bool excludeProof) {
    json out;
    out["@context"] = doc.context;
    out["type"] = doc.type;
    if (!doc.id.empty()) out["id"] = doc.id;
    out["issuer"] = doc.issuer;
    json recipient;
    recipient["id"] = doc.recipient.id;
    if (!doc.recipient.name.empty()) recipient["name"] = doc.recipient.name;
    out["recipient"] = std::move(recipient);
    out["credentialSubject"] = doc.credentialSubject;
    out["issueDate"] = doc.issueDate;
    if (!doc.expirationDate.empty()) out["expirationDate"] = doc.expirationDate;
    if (doc.proof && !excludeProof) {
        json proof;
        proof["proofType"] = to_string(doc.proof->proofType);
        if (!doc.proof->created.empty()) proof["created"] = doc.proof->created;
        if (!doc.proof->verificationMethod.empty()) {
            proof["verificationMethod"] = doc.proof->verificationMethod;
        }
        proof["signatureValue"] = doc.proof->signatureValue;
        out["proof"] = std::move(proof);
    }
    return out;
}

Bytes canonicalize(const CredentialDocument& doc, bool excludeProof) {
    // nlohmann::json keeps object members in sorted order and dump() emits
    // no whitespace, which together give the canonical form.
    std::string text = document_to_json(doc, excludeProof).dump();
    return to_bytes(text);
}

std::string to_string(ValidityStatus status) {
    switch (status) {
        case ValidityStatus::Valid: return "valid";
        case ValidityStatus::NotYetValid: return "not_yet_valid";
        case ValidityStatus::Expired: return "expired";
    }
    return "unknown";
}

ValidityStatus temporal_status(const CredentialDocument& doc, int64_t nowEpochSeconds) {
    auto issue = parse_iso8601(doc.issueDate);
    if (issue && nowEpochSeconds < *issue) return ValidityStatus::NotYetValid;
    if (!doc.expirationDate.empty()) {
        auto expiry = parse_iso8601(doc.expirationDate);
        if (expiry && nowEpochSeconds >= *expiry) return ValidityStatus::Expired;
    }
    return ValidityStatus::Valid;
}

IssueRequestResult validate_issue_request(std::span<const uint8_t> rawJson) {
    IssueRequestResult result;
    json parsed = json::parse(rawJson.begin(), rawJson.end(), nullptr, false);
    if (parsed.is_discarded()) {
        result.status = ParseStatus::MalformedJson;
        result.violations.push_back({"", "malformed JSON"});
        return result;
    }
    if (!parsed.is_object()) {
        result.status = ParseStatus::SchemaViolation;
        result.violations.push_back({"", "must be a JSON object"});
        return result;
    }

    IssueRequest request;
    auto& violations = result.violations;

    require_string(find_member(parsed, {"issuer"}), "/issuer", request.issuer, violations, true);
    if (!request.issuer.empty() && !is_absolute_uri(request.issuer)) {
        violations.push_back({"/issuer", "must be an absolute URI or DID"});
    }

    if (const json* recipient = find_member(parsed, {"recipient"})) {
        if (!recipient->is_object()) {
            violations.push_back({"/recipient", "must be an object"});
        } else {
            require_string(find_member(*recipient, {"id"}), "/recipient/id",
                           request.recipient.id, violations, true);
            require_string(find_member(*recipient, {"name"}), "/recipient/name",
                           request.recipient.name, violations, false);
            if (!request.recipient.id.empty() && !Did::is_valid(request.recipient.id)) {
                violations.push_back({"/recipient/id", "must be a DID"});
            }
        }
    } else {
        violations.push_back({"/recipient", "required"});
    }

    if (const json* credential = find_member(parsed, {"credential"})) {
        if (!credential->is_object()) {
            violations.push_back({"/credential", "must be an object"});
        } else {
            require_string(find_member(*credential, {"type"}), "/credential/type",
                           request.credentialType, violations, true);
            if (!credential->contains("course")) {
                violations.push_back({"/credential/course", "required"});
            }
            for (auto it = credential->begin(); it != credential->end(); ++it) {
                if (it.key() == "type") continue;
                if (!it.value().is_string()) {
                    violations.push_back({"/credential/" + it.key(), "must be a string"});
                    continue;
                }
                request.claims[it.key()] = it.value().get<std::string>();
            }
        }
    } else {
        violations.push_back({"/credential", "required"});
    }

    require_string(find_member(parsed, {"issueDate"}), "/issueDate", request.issueDate,
                   violations, false);
    require_string(find_member(parsed, {"expirationDate"}), "/expirationDate",
                   request.expirationDate, violations, false);
    for (const auto* field : {&request.issueDate, &request.expirationDate}) {
        if (!field->empty() && !parse_iso8601(*field)) {
            violations.push_back({field == &request.issueDate ? "/issueDate" : "/expirationDate",
                                  "must be an ISO-8601 date"});
        }
    }

    if (!violations.empty()) {
        result.status = ParseStatus::SchemaViolation;
        return result;
    }
    result.status = ParseStatus::Ok;
    result.request = std::move(request);
    return result;
}

}  // namespace bacip
