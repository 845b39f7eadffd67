#pragma once

#include <optional>
#include <string>
#include <variant>

#include "bacip/ledger.hpp"

namespace bacip {

// Bearer token claims: {sub, name, iat, exp, role}. A missing exp means the
// default lifetime of 3600 s from iat.
struct AuthClaims {
    std::string sub;
    std::string name;
    int64_t iat = 0;
    std::optional<int64_t> exp;
    std::string role;  // Issuer | Verifier | Student
};

constexpr int64_t kDefaultTokenLifetime = 3600;

// header.claims.signature, base64url without padding; ES256 only.
std::string mint_token(const AuthClaims& claims, const KeyPair& key);

enum class AuthError { MalformedToken, UnknownSubject, BadSignature, Expired };

std::string to_string(AuthError error);

struct Principal {
    std::string sub;
    std::string subjectDid;
    std::string role;
    uint32_t permissionBits = 0;  // resolved from the ledger snapshot
};

// Checks structure, subject registration, signature, then expiry; resolves
// permission bits from the ledger roles.
std::variant<Principal, AuthError> authenticate(std::string_view token, const LedgerState& state,
                                                int64_t now);

}  // namespace bacip
