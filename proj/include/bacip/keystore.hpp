#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bacip/crypto.hpp"

namespace bacip {

struct DuplicateKeyIdError : std::runtime_error {
    explicit DuplicateKeyIdError(const std::string& id)
        : std::runtime_error("duplicate key id: " + id) {}
};

struct KeystoreAuthError : std::runtime_error {
    KeystoreAuthError() : std::runtime_error("keystore passphrase rejected") {}
};

// JSON keystore: keyId -> {algorithm, publicKey, sealed privateKey}. Private
// keys and per-blob sealing keys are AES-GCM sealed under a PBKDF2-derived
// master key; dropping a sealing key crypto-shreds its blob.
class Keystore {
public:
    static Keystore open(std::filesystem::path path, std::string_view passphrase);

    void add_key(const KeyPair& pair);  // throws DuplicateKeyIdError
    bool has_key(const std::string& keyId) const;
    std::optional<KeyPair> key(const std::string& keyId) const;
    std::vector<std::string> key_ids() const;

    void put_sealing_key(const ContentAddress& address, std::span<const uint8_t> key32);
    std::optional<Bytes> sealing_key(const ContentAddress& address) const;
    bool drop_sealing_key(const ContentAddress& address);

    const std::filesystem::path& path() const { return path_; }

private:
    Keystore() = default;
    void save() const;
    SealedPayload seal(std::span<const uint8_t> secret) const;
    std::optional<Bytes> unseal(const SealedPayload& sealed) const;

    std::filesystem::path path_;
    Bytes masterKey_;
    Bytes salt_;
    int iterations_ = 0;

    struct KeyEntry {
        SignatureAlgorithm algorithm = SignatureAlgorithm::Ed25519;
        Bytes publicKey;
        SealedPayload sealedPrivate;
    };
    std::map<std::string, KeyEntry> keys_;
    std::map<std::string, SealedPayload> sealingKeys_;  // by address hex
};

}  // namespace bacip
