#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bacip/credential.hpp"
#include "bacip/iso8601.hpp"
#include "reference_sha256.hpp"
#include "support.hpp"

using namespace bacip;
using nlohmann::json;

namespace {

// The certificate-metadata example document.
const char* kMetadataExample = R"({
  "@context": "https://schema.org",
  "@type": "EducationalOccupationalCredential",
  "issuer": "https://university.example.edu",
  "recipient": {
    "type": "Person",
    "id": "did:example:abcdef",
    "name": "Juan Pérez"
  },
  "credentialSubject": {
    "degree": "MSc Computer Science"
  },
  "issueDate": "2021-05-01",
  "expirationDate": "2026-05-01",
  "signature": {
    "type": "ES256",
    "signatureValue": "base64EncodedSignatureValueHere"
  }
})";

// The W3C-style verifiable-credential example (RSA proof suite).
const char* kVcExample = R"({
  "@context": "https://www.w3.org/2018/credentials/v1",
  "id": "did:example:123",
  "type": ["VerifiableCredential"],
  "issuer": "did:example:456",
  "issuanceDate": "2020-04-22T11:52:25Z",
  "credentialSubject": {
    "id": "did:example:789",
    "degree": "Bachelor of Science in Blockchain Technology"
  },
  "proof": {
    "type": "RsaSignature2018",
    "created": "2020-04-22T11:52:25Z",
    "proofPurpose": "assertionMethod",
    "verificationMethod": "https://example.edu/keys/1",
    "jws": "eyJhbGciOiJSUzI1NiIsInR5cCI6IkpXVCJ9..."
  }
})";

ParseResult parse_text(const std::string& text) {
    return validate_document(to_bytes(text));
}

}  // namespace

TEST_CASE("credential id generation") {
    DeterministicRng rng(1);
    CredentialId id = generate_credential_id(rng);
    CHECK(CredentialId::is_valid(id.uuid));
    CHECK(id.uuid.size() == 36);
    CHECK(id.uuid[14] == '4');  // version nibble

    SUBCASE("same seed twice gives the identical id") {
        DeterministicRng a(99), b(99);
        CHECK(generate_credential_id(a).uuid == generate_credential_id(b).uuid);
    }
    SUBCASE("no duplicates across 100000 draws") {
        DeterministicRng r(std::random_device{}());
        std::set<std::string> seen;
        for (int i = 0; i < 100000; ++i) {
            auto generated = generate_credential_id(r);
            CHECK(CredentialId::is_valid(generated.uuid));
            seen.insert(std::move(generated.uuid));
        }
        CHECK(seen.size() == 100000);
    }
}

TEST_CASE("credential id regex invariant") {
    CHECK(CredentialId::is_valid("123e4567-e89b-42d3-a456-426614174000"));
    CHECK(!CredentialId::is_valid("123e4567-e89b-12d3-a456-426614174000"));  // version 1
    CHECK(!CredentialId::is_valid("123E4567-E89B-42D3-A456-426614174000"));  // uppercase
    CHECK(!CredentialId::is_valid("123e4567-e89b-42d3-c456-426614174000"));  // bad variant
    CHECK(!CredentialId::is_valid("123e4567e89b42d3a456426614174000"));
    CHECK(!CredentialId::is_valid(""));
}

TEST_CASE("did shape") {
    CHECK(Did::is_valid("did:example:abcdef"));
    CHECK(Did::is_valid("did:bacip:node-7"));
    CHECK(!Did::is_valid("did::x"));
    CHECK(!Did::is_valid("did:EXAMPLE:x"));
    CHECK(!Did::is_valid("did:example:"));
    CHECK(!Did::is_valid("example:key:1"));
}

TEST_CASE("the metadata example parses") {
    auto result = parse_text(kMetadataExample);
    REQUIRE(result.ok());
    const auto& doc = *result.document;
    CHECK(doc.context == "https://schema.org");
    CHECK(doc.type == "EducationalOccupationalCredential");
    CHECK(doc.issuer == "https://university.example.edu");
    CHECK(doc.recipient.id == "did:example:abcdef");
    CHECK(doc.recipient.name == "Juan Pérez");
    CHECK(doc.credentialSubject.at("degree") == "MSc Computer Science");
    CHECK(doc.issueDate == "2021-05-01");
    CHECK(doc.expirationDate == "2026-05-01");
    REQUIRE(doc.proof);
    CHECK(doc.proof->proofType == SignatureAlgorithm::ES256);
}

TEST_CASE("the VC example parses under the field-name aliases") {
    auto result = parse_text(kVcExample);
    REQUIRE(result.ok());
    const auto& doc = *result.document;
    CHECK(doc.id == "did:example:123");
    CHECK(doc.type == "VerifiableCredential");
    CHECK(doc.issuer == "did:example:456");
    CHECK(doc.issueDate == "2020-04-22T11:52:25Z");
    CHECK(doc.recipient.id == "did:example:789");  // credentialSubject.id alias
    CHECK(doc.credentialSubject.at("degree") ==
          "Bachelor of Science in Blockchain Technology");
    CHECK(doc.credentialSubject.count("id") == 0);
    CHECK(!doc.proof);  // unsupported RSA suite is dropped, not rejected
}

TEST_CASE("missing required fields report every violation with its path") {
    json doc = json::parse(kMetadataExample);
    doc.erase("issuer");
    auto result = validate_document_json(doc);
    CHECK(result.status == ParseStatus::SchemaViolation);
    bool found = false;
    for (const auto& violation : result.violations) {
        if (violation.path == "/issuer" && violation.reason == "required") found = true;
    }
    CHECK(found);

    SUBCASE("all violations are collected, not just the first") {
        json stripped = json::parse(kMetadataExample);
        stripped.erase("issuer");
        stripped.erase("issueDate");
        stripped.erase("credentialSubject");
        auto multi = validate_document_json(stripped);
        CHECK(multi.violations.size() >= 3);
    }
}

TEST_CASE("schema edge cases") {
    json doc = json::parse(kMetadataExample);

    SUBCASE("nested credentialSubject values are rejected") {
        doc["credentialSubject"]["nested"] = json::object({{"x", "y"}});
        auto result = validate_document_json(doc);
        CHECK(!result.ok());
    }
    SUBCASE("subject needs a degree or course claim") {
        doc["credentialSubject"] = json::object({{"grade", "A"}});
        auto result = validate_document_json(doc);
        CHECK(!result.ok());
    }
    SUBCASE("course satisfies the claim requirement") {
        doc["credentialSubject"] = json::object({{"course", "BSc Computer Science"}});
        CHECK(validate_document_json(doc).ok());
    }
    SUBCASE("issuer must look like a URI or DID") {
        doc["issuer"] = "not a uri";
        CHECK(!validate_document_json(doc).ok());
    }
    SUBCASE("expiration before issue is rejected") {
        doc["expirationDate"] = "2020-01-01";
        CHECK(!validate_document_json(doc).ok());
    }
    SUBCASE("expirationDate is optional") {
        doc.erase("expirationDate");
        CHECK(validate_document_json(doc).ok());
    }
    SUBCASE("malformed JSON is its own failure class") {
        auto result = parse_text("{nope");
        CHECK(result.status == ParseStatus::MalformedJson);
    }
}

TEST_CASE("canonicalization is deterministic and order-independent") {
    auto a = parse_text(kMetadataExample);
    REQUIRE(a.ok());

    // The same document with members listed in a different order.
    json reordered = json::parse(R"({
      "signature": {"signatureValue": "base64EncodedSignatureValueHere", "type": "ES256"},
      "expirationDate": "2026-05-01",
      "issueDate": "2021-05-01",
      "credentialSubject": {"degree": "MSc Computer Science"},
      "recipient": {"name": "Juan Pérez", "id": "did:example:abcdef", "type": "Person"},
      "issuer": "https://university.example.edu",
      "@type": "EducationalOccupationalCredential",
      "@context": "https://schema.org"
    })");
    auto b = validate_document_json(reordered);
    REQUIRE(b.ok());

    CHECK(canonicalize(*a.document, false) == canonicalize(*b.document, false));
    CHECK(canonicalize(*a.document, true) == canonicalize(*a.document, true));
    CHECK(canonicalize(*a.document, false) != canonicalize(*a.document, true));
}

TEST_CASE("canonical bytes match the frozen independent serialization") {
    auto result = parse_text(kMetadataExample);
    REQUIRE(result.ok());
    Bytes canon = canonicalize(*result.document, true);
    // Computed with an independent canonical-JSON serializer (sorted keys,
    // no whitespace, raw UTF-8) plus SHA-256.
    CHECK(canon.size() == 288);
    CHECK(hash_hex(testref::sha256(canon)) ==
          "ac32aaa6a61b1f26ca2306420fdb5ea6827cd2ce6d2a101ffac9d63db2f3dab6");
}

TEST_CASE("document json roundtrip reproduces every field") {
    DeterministicRng rng(31);
    for (int i = 0; i < 200; ++i) {
        CredentialDocument doc;
        doc.context = "https://schema.org";
        doc.type = "EducationalOccupationalCredential";
        if (rng.next_u64() % 2) doc.id = generate_credential_id(rng).uuid;
        doc.issuer = rng.next_u64() % 2 ? "https://uni.example.edu" : "did:example:issuer";
        doc.recipient.id = "did:example:r" + std::to_string(rng.next_u64() % 1000);
        if (rng.next_u64() % 2) doc.recipient.name = "Name " + std::to_string(i);
        doc.credentialSubject["degree"] = "Degree " + std::to_string(rng.next_u64() % 50);
        if (rng.next_u64() % 2) doc.credentialSubject["honors"] = "cum laude";
        doc.issueDate = "2021-05-01";
        if (rng.next_u64() % 2) doc.expirationDate = "2031-05-01";
        if (rng.next_u64() % 2) {
            Proof proof;
            proof.proofType =
                rng.next_u64() % 2 ? SignatureAlgorithm::ES256 : SignatureAlgorithm::Ed25519;
            proof.created = "2021-05-01T00:00:00Z";
            proof.verificationMethod = "did:example:issuer#key-1";
            proof.signatureValue = base64_encode(rng.bytes(64));
            doc.proof = proof;
        }

        auto serialized = document_to_json(doc).dump();
        auto back = validate_document(to_bytes(serialized));
        REQUIRE(back.ok());
        CHECK(*back.document == doc);
    }
}

TEST_CASE("temporal status partitions the timeline") {
    auto result = parse_text(kMetadataExample);
    REQUIRE(result.ok());
    const auto& doc = *result.document;

    CHECK(temporal_status(doc, *parse_iso8601("2022-01-01")) == ValidityStatus::Valid);
    CHECK(temporal_status(doc, *parse_iso8601("2020-01-01")) == ValidityStatus::NotYetValid);
    // Half-open window: expiry instant itself is already expired.
    CHECK(temporal_status(doc, *parse_iso8601("2026-05-01")) == ValidityStatus::Expired);
    CHECK(temporal_status(doc, *parse_iso8601("2026-05-01") - 1) == ValidityStatus::Valid);
    CHECK(temporal_status(doc, *parse_iso8601("2021-05-01")) == ValidityStatus::Valid);
    CHECK(temporal_status(doc, *parse_iso8601("2021-05-01") - 1) == ValidityStatus::NotYetValid);

    SUBCASE("statuses over increasing time never interleave") {
        DeterministicRng rng(17);
        for (int run = 0; run < 50; ++run) {
            int64_t start = *parse_iso8601("2019-01-01");
            int64_t end = *parse_iso8601("2028-01-01");
            int64_t now = start;
            int lastStage = 0;  // 0 NotYetValid, 1 Valid, 2 Expired
            while (now < end) {
                ValidityStatus status = temporal_status(doc, now);
                int stage = status == ValidityStatus::NotYetValid ? 0
                            : status == ValidityStatus::Valid     ? 1
                                                                  : 2;
                CHECK(stage >= lastStage);
                lastStage = stage;
                now += static_cast<int64_t>(rng.next_u64() % (86400ull * 200) + 1);
            }
        }
    }
    SUBCASE("no expiration means never expired") {
        CredentialDocument open = doc;
        open.expirationDate.clear();
        CHECK(temporal_status(open, *parse_iso8601("2099-01-01")) == ValidityStatus::Valid);
    }
}

TEST_CASE("iso8601 parsing") {
    CHECK(*parse_iso8601("1970-01-01") == 0);
    CHECK(*parse_iso8601("1970-01-02") == 86400);
    CHECK(*parse_iso8601("2020-04-22T11:52:25Z") == 1587556345);
    CHECK(!parse_iso8601("2020-13-01"));
    CHECK(!parse_iso8601("2020-02-30"));
    CHECK(!parse_iso8601("20200101"));
    CHECK(!parse_iso8601("2020-01-01T25:00:00Z"));
    CHECK(format_iso8601(1587556345) == "2020-04-22T11:52:25Z");
    CHECK(format_iso8601_date(1587556345) == "2020-04-22");
}

TEST_CASE("issue request schema accepts the REST example body") {
    const char* body = R"({
      "issuer": "https://university.example.edu",
      "recipient": {"name": "John Doe", "id": "did:example:123"},
      "credential": {"type": "Diploma", "course": "BSc Computer Science"}
    })";
    auto result = validate_issue_request(to_bytes(body));
    REQUIRE(result.ok());
    CHECK(result.request->issuer == "https://university.example.edu");
    CHECK(result.request->recipient.name == "John Doe");
    CHECK(result.request->recipient.id == "did:example:123");
    CHECK(result.request->credentialType == "Diploma");
    CHECK(result.request->claims.at("course") == "BSc Computer Science");

    SUBCASE("each required-field omission yields its violation path") {
        struct Case {
            const char* erase;
            const char* inner;
            const char* path;
        };
        const Case cases[] = {
            {"issuer", nullptr, "/issuer"},
            {"recipient", nullptr, "/recipient"},
            {"credential", nullptr, "/credential"},
            {"recipient", "id", "/recipient/id"},
            {"credential", "type", "/credential/type"},
            {"credential", "course", "/credential/course"},
        };
        for (const auto& c : cases) {
            json mutated = json::parse(body);
            if (c.inner) {
                mutated[c.erase].erase(c.inner);
            } else {
                mutated.erase(c.erase);
            }
            auto r = validate_issue_request(to_bytes(mutated.dump()));
            CHECK(!r.ok());
            bool found = false;
            for (const auto& violation : r.violations) {
                if (violation.path == c.path && violation.reason == "required") found = true;
            }
            CHECK_MESSAGE(found, "expected violation at ", c.path);
        }
    }
}
