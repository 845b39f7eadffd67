#include "bacip/jwt.hpp"

namespace bacip {

using nlohmann::json;

std::string to_string(AuthError error) {
    switch (error) {
        case AuthError::MalformedToken: return "malformed_token";
        case AuthError::UnknownSubject: return "unknown_subject";
        case AuthError::BadSignature: return "bad_signature";
        case AuthError::Expired: return "expired";
    }
    return "unknown";
}

std::string mint_token(const AuthClaims& claims, const KeyPair& key) {
    json header;
    header["alg"] = "ES256";
    header["typ"] = "JWT";
    json body;
    body["sub"] = claims.sub;
    body["name"] = claims.name;
    body["iat"] = claims.iat;
    if (claims.exp) body["exp"] = *claims.exp;
    body["role"] = claims.role;

    std::string signingInput = base64url_encode(to_bytes(header.dump())) + "." +
                               base64url_encode(to_bytes(body.dump()));
    Bytes signature = es256_sign(to_bytes(signingInput), key.privateKey);
    return signingInput + "." + base64url_encode(signature);
}

std::variant<Principal, AuthError> authenticate(std::string_view token, const LedgerState& state,
                                                int64_t now) {
    // Structure: three base64url segments, ES256 header, claim types.
    size_t dot1 = token.find('.');
    size_t dot2 = token.rfind('.');
    if (dot1 == std::string_view::npos || dot2 == dot1) return AuthError::MalformedToken;
    auto headerRaw = base64url_decode(token.substr(0, dot1));
    auto claimsRaw = base64url_decode(token.substr(dot1 + 1, dot2 - dot1 - 1));
    auto signature = base64url_decode(token.substr(dot2 + 1));
    if (!headerRaw || !claimsRaw || !signature) return AuthError::MalformedToken;

    json header = json::parse(*headerRaw, nullptr, false);
    json claims = json::parse(*claimsRaw, nullptr, false);
    if (header.is_discarded() || claims.is_discarded() || !header.is_object() ||
        !claims.is_object()) {
        return AuthError::MalformedToken;
    }
    if (header.value("alg", "") != "ES256") return AuthError::MalformedToken;
    std::string sub = claims.value("sub", "");
    if (sub.empty() || !claims.contains("iat") || !claims["iat"].is_number()) {
        return AuthError::MalformedToken;
    }

    const IdentityRecord* identity = state.registry.by_sub(sub);
    if (!identity) identity = state.registry.by_did(sub);
    if (!identity) return AuthError::UnknownSubject;

    std::string signingInput(token.substr(0, dot2));
    if (identity->algorithm != SignatureAlgorithm::ES256 ||
        !es256_verify(to_bytes(signingInput), *signature, identity->publicKey)) {
        return AuthError::BadSignature;
    }

    int64_t iat = claims["iat"].get<int64_t>();
    int64_t exp = claims.contains("exp") && claims["exp"].is_number()
                      ? claims["exp"].get<int64_t>()
                      : iat + kDefaultTokenLifetime;
    if (exp <= now) return AuthError::Expired;

    Principal principal;
    principal.sub = sub;
    principal.subjectDid = identity->did;
    principal.role = claims.value("role", "");
    auto roleBits = state.roles.find(identity->did);
    principal.permissionBits = roleBits == state.roles.end() ? 0 : roleBits->second;
    return principal;
}

}  // namespace bacip
