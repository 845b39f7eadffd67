#include "bacip/keystore.hpp"

#include <fstream>

#include <json.hpp>

namespace bacip {

using nlohmann::json;

namespace {

constexpr int kDefaultIterations = 50000;

json sealed_to_json(const SealedPayload& sealed) {
    json j;
    j["ciphertext"] = base64_encode(sealed.ciphertext);
    j["nonce"] = base64_encode(sealed.nonce);
    j["tag"] = base64_encode(sealed.tag);
    return j;
}

std::optional<SealedPayload> sealed_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    auto ciphertext = base64_decode(j.value("ciphertext", ""));
    auto nonce = base64_decode(j.value("nonce", ""));
    auto tag = base64_decode(j.value("tag", ""));
    if (!ciphertext || !nonce || nonce->size() != 12 || !tag || tag->size() != 16) {
        return std::nullopt;
    }
    SealedPayload sealed;
    sealed.ciphertext = std::move(*ciphertext);
    std::copy(nonce->begin(), nonce->end(), sealed.nonce.begin());
    std::copy(tag->begin(), tag->end(), sealed.tag.begin());
    return sealed;
}

}  // namespace

Keystore Keystore::open(std::filesystem::path path, std::string_view passphrase) {
    Keystore store;
    store.path_ = std::move(path);

    if (!std::filesystem::exists(store.path_)) {
        SystemRng rng;
        store.salt_ = rng.bytes(16);
        store.iterations_ = kDefaultIterations;
        store.masterKey_ = pbkdf2_sha256(passphrase, store.salt_, store.iterations_, 32);
        store.save();
        return store;
    }

    std::ifstream in(store.path_);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) {
        throw std::runtime_error("keystore unreadable: " + store.path_.string());
    }
    auto salt = base64_decode(file.value("salt", ""));
    if (!salt) throw std::runtime_error("keystore salt missing");
    store.salt_ = std::move(*salt);
    store.iterations_ = file.value("iterations", kDefaultIterations);
    store.masterKey_ = pbkdf2_sha256(passphrase, store.salt_, store.iterations_, 32);

    // A sealed check value distinguishes a wrong passphrase from corruption.
    if (auto check = sealed_from_json(file.value("check", json::object()))) {
        if (!store.unseal(*check)) throw KeystoreAuthError{};
    }

    if (auto keys = file.find("keys"); keys != file.end() && keys->is_object()) {
        for (auto it = keys->begin(); it != keys->end(); ++it) {
            KeyEntry entry;
            auto alg = parse_signature_algorithm(it.value().value("algorithm", ""));
            auto pub = base64_decode(it.value().value("publicKey", ""));
            auto sealed = sealed_from_json(it.value().value("privateKey", json::object()));
            if (!alg || !pub || !sealed) continue;
            entry.algorithm = *alg;
            entry.publicKey = std::move(*pub);
            entry.sealedPrivate = std::move(*sealed);
            store.keys_[it.key()] = std::move(entry);
        }
    }
    if (auto sealing = file.find("sealingKeys"); sealing != file.end() && sealing->is_object()) {
        for (auto it = sealing->begin(); it != sealing->end(); ++it) {
            if (auto sealed = sealed_from_json(it.value())) {
                store.sealingKeys_[it.key()] = std::move(*sealed);
            }
        }
    }
    return store;
}

SealedPayload Keystore::seal(std::span<const uint8_t> secret) const {
    SystemRng rng;
    return encrypt_payload(secret, masterKey_, rng);
}

std::optional<Bytes> Keystore::unseal(const SealedPayload& sealed) const {
    return decrypt_payload(sealed, masterKey_);
}

void Keystore::save() const {
    json file;
    file["salt"] = base64_encode(salt_);
    file["iterations"] = iterations_;
    file["check"] = sealed_to_json(seal(to_bytes("bacip-keystore")));
    json keys = json::object();
    for (const auto& [keyId, entry] : keys_) {
        json k;
        k["algorithm"] = to_string(entry.algorithm);
        k["publicKey"] = base64_encode(entry.publicKey);
        k["privateKey"] = sealed_to_json(entry.sealedPrivate);
        keys[keyId] = std::move(k);
    }
    file["keys"] = std::move(keys);
    json sealing = json::object();
    for (const auto& [address, sealed] : sealingKeys_) {
        sealing[address] = sealed_to_json(sealed);
    }
    file["sealingKeys"] = std::move(sealing);

    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::trunc);
    out << file.dump(2) << "\n";
    if (!out) throw std::runtime_error("keystore write failed: " + path_.string());
}

void Keystore::add_key(const KeyPair& pair) {
    if (keys_.count(pair.keyId)) throw DuplicateKeyIdError(pair.keyId);
    KeyEntry entry;
    entry.algorithm = pair.algorithm;
    entry.publicKey = pair.publicKey;
    entry.sealedPrivate = seal(pair.privateKey);
    keys_[pair.keyId] = std::move(entry);
    save();
}

bool Keystore::has_key(const std::string& keyId) const {
    return keys_.count(keyId) > 0;
}

std::optional<KeyPair> Keystore::key(const std::string& keyId) const {
    auto it = keys_.find(keyId);
    if (it == keys_.end()) return std::nullopt;
    auto secret = unseal(it->second.sealedPrivate);
    if (!secret) return std::nullopt;
    KeyPair pair;
    pair.algorithm = it->second.algorithm;
    pair.privateKey = std::move(*secret);
    pair.publicKey = it->second.publicKey;
    pair.keyId = keyId;
    return pair;
}

std::vector<std::string> Keystore::key_ids() const {
    std::vector<std::string> out;
    out.reserve(keys_.size());
    for (const auto& [keyId, entry] : keys_) out.push_back(keyId);
    return out;
}

void Keystore::put_sealing_key(const ContentAddress& address, std::span<const uint8_t> key32) {
    sealingKeys_[address.hex()] = seal(key32);
    save();
}

std::optional<Bytes> Keystore::sealing_key(const ContentAddress& address) const {
    auto it = sealingKeys_.find(address.hex());
    if (it == sealingKeys_.end()) return std::nullopt;
    return unseal(it->second);
}

bool Keystore::drop_sealing_key(const ContentAddress& address) {
    if (sealingKeys_.erase(address.hex()) == 0) return false;
    save();
    return true;
}

}  // namespace bacip
