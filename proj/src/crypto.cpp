#include "bacip/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/param_build.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <memory>
#include <stdexcept>

namespace bacip {

namespace {

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpMdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EvpCipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct BnDeleter {
    void operator()(BIGNUM* p) const { BN_free(p); }
};
struct BnCtxDeleter {
    void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct EcGroupDeleter {
    void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};
struct EcPointDeleter {
    void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, EvpCipherCtxDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using GroupPtr = std::unique_ptr<EC_GROUP, EcGroupDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, EcPointDeleter>;

[[noreturn]] void crypto_fail(const char* what) {
    throw std::runtime_error(std::string("crypto failure: ") + what);
}

const EC_GROUP* p256_group() {
    static GroupPtr group(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1));
    if (!group) crypto_fail("P-256 group");
    return group.get();
}

BnPtr p256_order() {
    BnPtr n(BN_new());
    if (!n || !EC_GROUP_get_order(p256_group(), n.get(), nullptr)) crypto_fail("P-256 order");
    return n;
}

Bytes bn_to_fixed(const BIGNUM* v, size_t len) {
    Bytes out(len, 0);
    if (BN_bn2binpad(v, out.data(), static_cast<int>(len)) < 0) crypto_fail("bn2binpad");
    return out;
}

PkeyPtr p256_public_pkey(std::span<const uint8_t> publicKey65) {
    OSSL_PARAM_BLD* bld = OSSL_PARAM_BLD_new();
    if (!bld) crypto_fail("param bld");
    OSSL_PARAM_BLD_push_utf8_string(bld, OSSL_PKEY_PARAM_GROUP_NAME, "prime256v1", 0);
    OSSL_PARAM_BLD_push_octet_string(bld, OSSL_PKEY_PARAM_PUB_KEY, publicKey65.data(),
                                     publicKey65.size());
    OSSL_PARAM* params = OSSL_PARAM_BLD_to_param(bld);
    OSSL_PARAM_BLD_free(bld);
    if (!params) crypto_fail("param build");

    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr);
    EVP_PKEY* raw = nullptr;
    bool ok = ctx && EVP_PKEY_fromdata_init(ctx) > 0 &&
              EVP_PKEY_fromdata(ctx, &raw, EVP_PKEY_PUBLIC_KEY, params) > 0;
    EVP_PKEY_CTX_free(ctx);
    OSSL_PARAM_free(params);
    if (!ok || !raw) return nullptr;
    return PkeyPtr(raw);
}

// DER ECDSA-Sig-Value from the raw 64-byte r||s form.
Bytes ecdsa_raw_to_der(std::span<const uint8_t> sig64) {
    BnPtr r(BN_bin2bn(sig64.data(), 32, nullptr));
    BnPtr s(BN_bin2bn(sig64.data() + 32, 32, nullptr));
    ECDSA_SIG* sig = ECDSA_SIG_new();
    if (!r || !s || !sig) crypto_fail("ECDSA_SIG");
    ECDSA_SIG_set0(sig, r.release(), s.release());
    unsigned char* der = nullptr;
    int len = i2d_ECDSA_SIG(sig, &der);
    ECDSA_SIG_free(sig);
    if (len <= 0) crypto_fail("i2d_ECDSA_SIG");
    Bytes out(der, der + len);
    OPENSSL_free(der);
    return out;
}

// RFC 6979 HMAC-SHA256 nonce for P-256: qlen == hlen == 256 bits, so
// bits2int is the identity and one HMAC round yields a full candidate.
BnPtr rfc6979_nonce(const BIGNUM* order, std::span<const uint8_t> scalar32,
                    const Hash32& digest) {
    BnPtr z(BN_bin2bn(digest.data(), 32, nullptr));
    BnPtr zq(BN_new());
    BnCtxPtr ctx(BN_CTX_new());
    if (!z || !zq || !ctx) crypto_fail("rfc6979 bn");
    if (!BN_mod(zq.get(), z.get(), order, ctx.get())) crypto_fail("rfc6979 mod");
    Bytes h1 = bn_to_fixed(zq.get(), 32);  // bits2octets(H(m))

    Bytes V(32, 0x01), K(32, 0x00);
    auto hmac = [&](const Bytes& key, std::initializer_list<std::span<const uint8_t>> parts) {
        Bytes data;
        for (auto p : parts) data.insert(data.end(), p.begin(), p.end());
        return hmac_sha256(key, data);
    };
    const uint8_t zero = 0x00, one = 0x01;
    K = hmac(K, {V, {&zero, 1}, scalar32, h1});
    V = hmac(K, {V});
    K = hmac(K, {V, {&one, 1}, scalar32, h1});
    V = hmac(K, {V});
    for (;;) {
        V = hmac(K, {V});
        BnPtr k(BN_bin2bn(V.data(), 32, nullptr));
        if (!k) crypto_fail("rfc6979 candidate");
        if (!BN_is_zero(k.get()) && BN_cmp(k.get(), order) < 0) return k;
        K = hmac(K, {V, {&zero, 1}});
        V = hmac(K, {V});
    }
}

}  // namespace

void SystemRng::fill(std::span<uint8_t> out) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) crypto_fail("RAND_bytes");
}

std::string to_string(SignatureAlgorithm alg) {
    return alg == SignatureAlgorithm::ES256 ? "ES256" : "Ed25519";
}

std::optional<SignatureAlgorithm> parse_signature_algorithm(std::string_view name) {
    if (name == "ES256") return SignatureAlgorithm::ES256;
    if (name == "Ed25519") return SignatureAlgorithm::Ed25519;
    return std::nullopt;
}

Hash32 sha256(std::span<const uint8_t> data) {
    Hash32 out;
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) ||
        len != 32) {
        crypto_fail("sha256");
    }
    return out;
}

Bytes hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data) {
    Bytes out(32);
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
              out.data(), &len) ||
        len != 32) {
        crypto_fail("hmac");
    }
    return out;
}

Bytes pbkdf2_sha256(std::string_view passphrase, std::span<const uint8_t> salt, int iterations,
                    size_t keyLen) {
    Bytes out(keyLen);
    if (!PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt.data(),
                           static_cast<int>(salt.size()), iterations, EVP_sha256(),
                           static_cast<int>(keyLen), out.data())) {
        crypto_fail("pbkdf2");
    }
    return out;
}

ContentAddress content_hash(std::span<const uint8_t> content) {
    return ContentAddress{sha256(content)};
}

std::optional<ContentAddress> ContentAddress::from_hex(std::string_view hex) {
    for (char c : hex) {
        if (c >= 'A' && c <= 'F') return std::nullopt;  // addresses are lowercase
    }
    auto h = hash_from_hex(hex);
    if (!h) return std::nullopt;
    return ContentAddress{*h};
}

Bytes ed25519_public_from_seed(std::span<const uint8_t> seed32) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(),
                                             seed32.size()));
    if (!key) crypto_fail("ed25519 key");
    Bytes pub(32);
    size_t len = 32;
    if (!EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) || len != 32) {
        crypto_fail("ed25519 public");
    }
    return pub;
}

Bytes ed25519_sign(std::span<const uint8_t> message, std::span<const uint8_t> seed32) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(),
                                             seed32.size()));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!key || !ctx) crypto_fail("ed25519 sign init");
    size_t len = 64;
    Bytes sig(len);
    if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1 ||
        len != 64) {
        crypto_fail("ed25519 sign");
    }
    return sig;
}

bool ed25519_verify(std::span<const uint8_t> message, std::span<const uint8_t> signature64,
                    std::span<const uint8_t> publicKey32) {
    if (signature64.size() != 64 || publicKey32.size() != 32) return false;
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, publicKey32.data(),
                                            publicKey32.size()));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!key || !ctx) return false;
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), signature64.data(), signature64.size(), message.data(),
                            message.size()) == 1;
}

Bytes es256_public_from_private(std::span<const uint8_t> scalar32) {
    const EC_GROUP* group = p256_group();
    BnPtr d(BN_bin2bn(scalar32.data(), static_cast<int>(scalar32.size()), nullptr));
    PointPtr pub(EC_POINT_new(group));
    BnCtxPtr ctx(BN_CTX_new());
    if (!d || !pub || !ctx) crypto_fail("es256 public init");
    if (!EC_POINT_mul(group, pub.get(), d.get(), nullptr, nullptr, ctx.get())) {
        crypto_fail("es256 point mul");
    }
    Bytes out(65);
    if (EC_POINT_point2oct(group, pub.get(), POINT_CONVERSION_UNCOMPRESSED, out.data(),
                           out.size(), ctx.get()) != 65) {
        crypto_fail("es256 point encode");
    }
    return out;
}

Bytes es256_sign(std::span<const uint8_t> message, std::span<const uint8_t> scalar32) {
    if (scalar32.size() != 32) throw std::invalid_argument("ES256 private key must be 32 bytes");
    const EC_GROUP* group = p256_group();
    BnPtr order = p256_order();
    Hash32 digest = sha256(message);

    BnPtr d(BN_bin2bn(scalar32.data(), 32, nullptr));
    BnPtr z(BN_bin2bn(digest.data(), 32, nullptr));
    BnCtxPtr ctx(BN_CTX_new());
    BnPtr r(BN_new()), s(BN_new()), x(BN_new()), tmp(BN_new()), kinv(BN_new());
    if (!d || !z || !ctx || !r || !s || !x || !tmp || !kinv) crypto_fail("es256 sign init");
    if (!BN_mod(z.get(), z.get(), order.get(), ctx.get())) crypto_fail("es256 z");

    for (;;) {
        BnPtr k = rfc6979_nonce(order.get(), scalar32, digest);
        PointPtr R(EC_POINT_new(group));
        if (!R || !EC_POINT_mul(group, R.get(), k.get(), nullptr, nullptr, ctx.get()) ||
            !EC_POINT_get_affine_coordinates(group, R.get(), x.get(), nullptr, ctx.get())) {
            crypto_fail("es256 R");
        }
        if (!BN_mod(r.get(), x.get(), order.get(), ctx.get())) crypto_fail("es256 r");
        if (BN_is_zero(r.get())) continue;  // vanishing r: retry (never hit in practice)
        if (!BN_mod_inverse(kinv.get(), k.get(), order.get(), ctx.get()) ||
            !BN_mod_mul(tmp.get(), r.get(), d.get(), order.get(), ctx.get()) ||
            !BN_mod_add(tmp.get(), tmp.get(), z.get(), order.get(), ctx.get()) ||
            !BN_mod_mul(s.get(), kinv.get(), tmp.get(), order.get(), ctx.get())) {
            crypto_fail("es256 s");
        }
        if (BN_is_zero(s.get())) continue;
        break;
    }

    Bytes out = bn_to_fixed(r.get(), 32);
    Bytes sb = bn_to_fixed(s.get(), 32);
    out.insert(out.end(), sb.begin(), sb.end());
    return out;
}

bool es256_verify(std::span<const uint8_t> message, std::span<const uint8_t> signature64,
                  std::span<const uint8_t> publicKey65) {
    if (signature64.size() != 64 || publicKey65.size() != 65 || publicKey65[0] != 0x04) {
        return false;
    }
    PkeyPtr key = p256_public_pkey(publicKey65);
    if (!key) return false;
    Bytes der = ecdsa_raw_to_der(signature64);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx) return false;
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), der.data(), der.size(), message.data(),
                            message.size()) == 1;
}

KeyPair generate_keypair(SignatureAlgorithm alg, RandomSource& rng, std::string keyId) {
    KeyPair pair;
    pair.algorithm = alg;
    pair.keyId = std::move(keyId);
    if (alg == SignatureAlgorithm::Ed25519) {
        pair.privateKey = rng.bytes(32);
        pair.publicKey = ed25519_public_from_seed(pair.privateKey);
        return pair;
    }
    BnPtr order = p256_order();
    for (;;) {
        Bytes candidate = rng.bytes(32);
        BnPtr d(BN_bin2bn(candidate.data(), 32, nullptr));
        if (!d) crypto_fail("keygen bn");
        if (BN_is_zero(d.get()) || BN_cmp(d.get(), order.get()) >= 0) continue;
        pair.privateKey = std::move(candidate);
        break;
    }
    pair.publicKey = es256_public_from_private(pair.privateKey);
    return pair;
}

Proof sign_message(std::span<const uint8_t> message, const KeyPair& key, std::string created) {
    Proof proof;
    proof.proofType = key.algorithm;
    proof.created = std::move(created);
    proof.verificationMethod = key.keyId;
    Bytes sig = key.algorithm == SignatureAlgorithm::Ed25519
                    ? ed25519_sign(message, key.privateKey)
                    : es256_sign(message, key.privateKey);
    proof.signatureValue = base64_encode(sig);
    return proof;
}

bool verify_signature(std::span<const uint8_t> message, const Proof& proof,
                      std::span<const uint8_t> publicKey) {
    auto sig = base64_decode(proof.signatureValue);
    if (!sig || sig->size() != 64) return false;
    if (proof.proofType == SignatureAlgorithm::Ed25519) {
        return ed25519_verify(message, *sig, publicKey);
    }
    return es256_verify(message, *sig, publicKey);
}

SealedPayload seal_with_nonce(std::span<const uint8_t> plaintext, std::span<const uint8_t> key32,
                              std::span<const uint8_t> nonce12) {
    if (key32.size() != 32) throw std::invalid_argument("AES-GCM key must be 32 bytes");
    if (nonce12.size() != 12) throw std::invalid_argument("AES-GCM nonce must be 12 bytes");
    SealedPayload sealed;
    std::copy(nonce12.begin(), nonce12.end(), sealed.nonce.begin());
    sealed.ciphertext.resize(plaintext.size());

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key32.data(), nonce12.data()) != 1) {
        crypto_fail("gcm encrypt init");
    }
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), sealed.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
        crypto_fail("gcm encrypt");
    }
    int fin = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), sealed.ciphertext.data() + len, &fin) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, sealed.tag.data()) != 1) {
        crypto_fail("gcm finalize");
    }
    return sealed;
}

SealedPayload encrypt_payload(std::span<const uint8_t> plaintext, std::span<const uint8_t> key32,
                              RandomSource& rng) {
    uint8_t nonce[12];
    rng.fill(nonce);
    return seal_with_nonce(plaintext, key32, nonce);
}

std::optional<Bytes> decrypt_payload(const SealedPayload& sealed,
                                     std::span<const uint8_t> key32) {
    if (key32.size() != 32) throw std::invalid_argument("AES-GCM key must be 32 bytes");
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
        EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key32.data(), sealed.nonce.data()) != 1) {
        crypto_fail("gcm decrypt init");
    }
    Bytes plaintext(sealed.ciphertext.size());
    int len = 0;
    if (!sealed.ciphertext.empty() &&
        EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, sealed.ciphertext.data(),
                          static_cast<int>(sealed.ciphertext.size())) != 1) {
        return std::nullopt;
    }
    std::array<uint8_t, 16> tag = sealed.tag;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1) {
        crypto_fail("gcm set tag");
    }
    int fin = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &fin) != 1) {
        return std::nullopt;  // tag mismatch
    }
    return plaintext;
}

Bytes sealed_to_bytes(const SealedPayload& sealed) {
    Bytes out;
    out.reserve(28 + sealed.ciphertext.size());
    out.insert(out.end(), sealed.nonce.begin(), sealed.nonce.end());
    out.insert(out.end(), sealed.tag.begin(), sealed.tag.end());
    out.insert(out.end(), sealed.ciphertext.begin(), sealed.ciphertext.end());
    return out;
}

std::optional<SealedPayload> sealed_from_bytes(std::span<const uint8_t> raw) {
    if (raw.size() < 28) return std::nullopt;
    SealedPayload sealed;
    std::copy(raw.begin(), raw.begin() + 12, sealed.nonce.begin());
    std::copy(raw.begin() + 12, raw.begin() + 28, sealed.tag.begin());
    sealed.ciphertext.assign(raw.begin() + 28, raw.end());
    return sealed;
}

}  // namespace bacip
