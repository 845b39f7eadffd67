#pragma once

#include <optional>
#include <span>
#include <string>

#include "bacip/bytes.hpp"
#include "bacip/rng.hpp"

namespace bacip {

enum class SignatureAlgorithm { ES256, Ed25519 };

std::string to_string(SignatureAlgorithm alg);
std::optional<SignatureAlgorithm> parse_signature_algorithm(std::string_view name);

// Detached proof attached to documents, transactions and consensus messages.
// signatureValue is base64 (standard alphabet, padded) of the raw 64-byte
// signature: r||s for ES256, the RFC-8032 signature for Ed25519.
struct Proof {
    SignatureAlgorithm proofType = SignatureAlgorithm::Ed25519;
    std::string created;             // ISO-8601, informational
    std::string verificationMethod;  // key identifier URI
    std::string signatureValue;

    bool operator==(const Proof&) const = default;
};

struct KeyPair {
    SignatureAlgorithm algorithm = SignatureAlgorithm::Ed25519;
    Bytes privateKey;  // 32-byte scalar (ES256) or seed (Ed25519)
    Bytes publicKey;   // uncompressed SEC1 point (65B) or raw Ed25519 key (32B)
    std::string keyId;
};

// Draws 32 bytes from rng; for ES256 re-draws until the scalar lands in
// [1, n-1] so the result is uniform and reproducible under a fixed seed.
KeyPair generate_keypair(SignatureAlgorithm alg, RandomSource& rng, std::string keyId = "");

Proof sign_message(std::span<const uint8_t> message, const KeyPair& key,
                   std::string created = "");
// Total: malformed proofs, wrong-length keys or signatures all return false.
bool verify_signature(std::span<const uint8_t> message, const Proof& proof,
                      std::span<const uint8_t> publicKey);

Bytes ed25519_public_from_seed(std::span<const uint8_t> seed32);
Bytes ed25519_sign(std::span<const uint8_t> message, std::span<const uint8_t> seed32);
bool ed25519_verify(std::span<const uint8_t> message, std::span<const uint8_t> signature64,
                    std::span<const uint8_t> publicKey32);

Bytes es256_public_from_private(std::span<const uint8_t> scalar32);
// Deterministic ECDSA over P-256 with SHA-256; the nonce is derived from the
// key and message per RFC 6979, so signing is reproducible.
Bytes es256_sign(std::span<const uint8_t> message, std::span<const uint8_t> scalar32);
bool es256_verify(std::span<const uint8_t> message, std::span<const uint8_t> signature64,
                  std::span<const uint8_t> publicKey65);

// AES-GCM-256 envelope. Blob layout: nonce(12) || tag(16) || ciphertext.
struct SealedPayload {
    Bytes ciphertext;
    std::array<uint8_t, 12> nonce{};
    std::array<uint8_t, 16> tag{};

    bool operator==(const SealedPayload&) const = default;
};

// Fresh random nonce per call. Throws std::invalid_argument on a key that is
// not exactly 32 bytes.
SealedPayload encrypt_payload(std::span<const uint8_t> plaintext, std::span<const uint8_t> key32,
                              RandomSource& rng);
// Nonce-injected variant used to reproduce known-answer vectors.
SealedPayload seal_with_nonce(std::span<const uint8_t> plaintext, std::span<const uint8_t> key32,
                              std::span<const uint8_t> nonce12);
// nullopt on authentication failure; no partial plaintext is ever released.
std::optional<Bytes> decrypt_payload(const SealedPayload& sealed, std::span<const uint8_t> key32);

Bytes sealed_to_bytes(const SealedPayload& sealed);
std::optional<SealedPayload> sealed_from_bytes(std::span<const uint8_t> raw);

struct ContentAddress {
    Hash32 digest{};

    std::string hex() const { return hash_hex(digest); }
    static std::optional<ContentAddress> from_hex(std::string_view hex);

    auto operator<=>(const ContentAddress&) const = default;
};

ContentAddress content_hash(std::span<const uint8_t> content);

Hash32 sha256(std::span<const uint8_t> data);
Bytes hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);
Bytes pbkdf2_sha256(std::string_view passphrase, std::span<const uint8_t> salt, int iterations,
                    size_t keyLen);

}  // namespace bacip
