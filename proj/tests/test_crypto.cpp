#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bacip/crypto.hpp"
#include "reference_sha256.hpp"
#include "support.hpp"

using namespace bacip;
using testsupport::from_hex;

TEST_CASE("sha256 standard vectors") {
    CHECK(hash_hex(sha256(to_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash_hex(sha256({})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    // The test-local reference implementation must agree everywhere it is
    // used as an oracle.
    DeterministicRng rng(7);
    for (int i = 0; i < 50; ++i) {
        Bytes data = rng.bytes(static_cast<size_t>(rng.next_u64() % 300));
        CHECK(sha256(data) == testref::sha256(data));
    }
}

TEST_CASE("content_hash is a deterministic content address") {
    ContentAddress a = content_hash(to_bytes("abc"));
    CHECK(a.hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(content_hash(to_bytes("abc")) == a);
    CHECK(ContentAddress::from_hex(a.hex()) == a);
    CHECK(!ContentAddress::from_hex("XYZ"));
    CHECK(!ContentAddress::from_hex(a.hex().substr(1)));
}

TEST_CASE("ed25519 RFC-8032 vectors") {
    struct Vector {
        const char* seed;
        const char* pub;
        const char* msg;
        const char* sig;
    };
    // Test vectors 1-3 (empty, one-byte and two-byte messages).
    const Vector vectors[] = {
        {"9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
         "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a", "",
         "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
         "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"},
        {"4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
         "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c", "72",
         "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
         "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00"},
        {"c5aa8df43f9f837bedb7442f31dcb7b166d38535076f094b85ce3a2e0b4458f7",
         "fc51cd8e6218a1a38da47ed00230f0580816ed13ba3303ac5deb911548908025", "af82",
         "6291d657deec24024827e69c3abe01a30ce548a284743a445e3680d7db5ac3ac"
         "18ff9b538d16f290ae67f760984dc6594a7c15e9716ed28dc027beceea1ec40a"},
    };
    for (const auto& v : vectors) {
        Bytes seed = from_hex(v.seed);
        Bytes msg = from_hex(v.msg);
        CHECK(hex_encode(ed25519_public_from_seed(seed)) == v.pub);
        Bytes sig = ed25519_sign(msg, seed);
        CHECK(hex_encode(sig) == v.sig);
        CHECK(ed25519_verify(msg, sig, from_hex(v.pub)));
    }
}

TEST_CASE("es256 RFC-6979 deterministic signatures") {
    // Appendix A.2.5 (P-256, SHA-256) key and message vectors.
    Bytes priv = from_hex("c9afa9d845ba75166b5c215767b1d6934e50c3db36e89b127b8a622b120f6721");
    Bytes pub = es256_public_from_private(priv);
    CHECK(hex_encode(pub) ==
          "0460fed4ba255a9d31c961eb74c6356d68c049b8923b61fa6ce669622e60f29fb6"
          "7903fe1008b8bc99a41ae9e95628bc64f2f1b20c2d7e9f5177a3c294d4462299");

    Bytes sigSample = es256_sign(to_bytes("sample"), priv);
    CHECK(hex_encode(sigSample) ==
          "efd48b2aacb6a8fd1140dd9cd45e81d69d2c877b56aaf991c34d0ea84eaf3716"
          "f7cb1c942d657c41d436c7a1b6e29f65f3e900dbb9aff4064dc4ab2f843acda8");
    Bytes sigTest = es256_sign(to_bytes("test"), priv);
    CHECK(hex_encode(sigTest) ==
          "f1abb023518351cd71d881567b1ea663ed3efcf6c5132b354f28d3b0b7d38367"
          "019f4113742a2b14bd25926b49c649155f267e60d3814b4c0cc84250e46f0083");
    CHECK(es256_verify(to_bytes("sample"), sigSample, pub));
    CHECK(es256_verify(to_bytes("test"), sigTest, pub));
    CHECK(!es256_verify(to_bytes("sample"), sigTest, pub));
}

TEST_CASE("keypair generation is seed-deterministic and injective") {
    for (auto alg : {SignatureAlgorithm::Ed25519, SignatureAlgorithm::ES256}) {
        DeterministicRng a(42), b(42), c(43);
        KeyPair ka = generate_keypair(alg, a);
        KeyPair kb = generate_keypair(alg, b);
        KeyPair kc = generate_keypair(alg, c);
        CHECK(ka.privateKey == kb.privateKey);
        CHECK(ka.publicKey == kb.publicKey);
        CHECK(ka.publicKey != kc.publicKey);
    }
}

TEST_CASE("sign/verify roundtrip and proof type naming") {
    DeterministicRng rng(11);
    for (auto alg : {SignatureAlgorithm::Ed25519, SignatureAlgorithm::ES256}) {
        KeyPair key = generate_keypair(alg, rng, "did:example:1#k");
        Bytes msg = rng.bytes(40);
        Proof proof = sign_message(msg, key);
        CHECK(to_string(proof.proofType) == to_string(alg));
        CHECK(proof.verificationMethod == "did:example:1#k");
        CHECK(verify_signature(msg, proof, key.publicKey));
    }
}

TEST_CASE("verify rejects every single-bit flip of an 8-byte message") {
    DeterministicRng rng(5);
    KeyPair key = generate_keypair(SignatureAlgorithm::Ed25519, rng);
    Bytes msg = rng.bytes(8);
    Proof proof = sign_message(msg, key);
    REQUIRE(verify_signature(msg, proof, key.publicKey));
    for (size_t bit = 0; bit < msg.size() * 8; ++bit) {
        Bytes tampered = msg;
        tampered[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        CHECK(!verify_signature(tampered, proof, key.publicKey));
    }
}

TEST_CASE("verify is total on malformed input") {
    DeterministicRng rng(6);
    KeyPair key = generate_keypair(SignatureAlgorithm::ES256, rng);
    Bytes msg = to_bytes("hello");
    Proof proof = sign_message(msg, key);

    Proof shortSig = proof;
    shortSig.signatureValue = base64_encode(rng.bytes(40));
    CHECK(!verify_signature(msg, shortSig, key.publicKey));

    Proof garbage = proof;
    garbage.signatureValue = "@@@not-base64@@@";
    CHECK(!verify_signature(msg, garbage, key.publicKey));

    CHECK(!verify_signature(msg, proof, rng.bytes(10)));  // truncated key
    CHECK(!es256_verify(msg, rng.bytes(64), rng.bytes(65)));
    CHECK(!ed25519_verify(msg, rng.bytes(64), rng.bytes(32)));
}

TEST_CASE("randomized sign/verify roundtrips") {
    DeterministicRng rng(2024);
    for (int i = 0; i < 500; ++i) {
        auto alg = i % 2 == 0 ? SignatureAlgorithm::Ed25519 : SignatureAlgorithm::ES256;
        KeyPair key = generate_keypair(alg, rng);
        Bytes msg = rng.bytes(1 + static_cast<size_t>(rng.next_u64() % 100));
        Proof proof = sign_message(msg, key);
        CHECK(verify_signature(msg, proof, key.publicKey));
        Bytes other = msg;
        other[0] ^= 0xff;
        CHECK(!verify_signature(other, proof, key.publicKey));
    }
}

TEST_CASE("aes-256-gcm known answers (nonce injected)") {
    // GCM test cases 13-15 from the NIST SP 800-38D validation set.
    {
        Bytes key(32, 0);
        Bytes nonce(12, 0);
        SealedPayload sealed = seal_with_nonce({}, key, nonce);
        CHECK(sealed.ciphertext.empty());
        CHECK(hex_encode(sealed.tag) == "530f8afbc74536b9a963b4f1c4cb738b");
    }
    {
        Bytes key(32, 0);
        Bytes nonce(12, 0);
        Bytes pt(16, 0);
        SealedPayload sealed = seal_with_nonce(pt, key, nonce);
        CHECK(hex_encode(sealed.ciphertext) == "cea7403d4d606b6e074ec5d3baf39d18");
        CHECK(hex_encode(sealed.tag) == "d0d1c8a799996bf0265b98b5d48ab919");
    }
    {
        Bytes key = from_hex(
            "feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308");
        Bytes nonce = from_hex("cafebabefacedbaddecaf888");
        Bytes pt = from_hex(
            "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
            "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255");
        SealedPayload sealed = seal_with_nonce(pt, key, nonce);
        CHECK(hex_encode(sealed.ciphertext) ==
              "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
              "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662898015ad");
        CHECK(hex_encode(sealed.tag) == "b094dac5d93471bdec1a502270e3cc6c");
        auto opened = decrypt_payload(sealed, key);
        REQUIRE(opened);
        CHECK(*opened == pt);
    }
}

TEST_CASE("seal/open the data-encryption example string") {
    DeterministicRng rng(99);
    Bytes key = rng.bytes(32);
    Bytes plaintext = to_bytes("Password: mySecurePassword123");
    SealedPayload sealed = encrypt_payload(plaintext, key, rng);
    CHECK(sealed.ciphertext.size() == plaintext.size());
    auto opened = decrypt_payload(sealed, key);
    REQUIRE(opened);
    CHECK(to_string(*opened) == "Password: mySecurePassword123");
}

TEST_CASE("empty plaintext seals and roundtrips") {
    DeterministicRng rng(1);
    Bytes key = rng.bytes(32);
    SealedPayload sealed = encrypt_payload({}, key, rng);
    CHECK(sealed.ciphertext.empty());
    auto opened = decrypt_payload(sealed, key);
    REQUIRE(opened);
    CHECK(opened->empty());
}

TEST_CASE("any single-bit mutation of the tag fails authentication") {
    DeterministicRng rng(3);
    Bytes key = rng.bytes(32);
    SealedPayload sealed = encrypt_payload(to_bytes("attested payload"), key, rng);
    for (size_t bit = 0; bit < 128; ++bit) {
        SealedPayload tampered = sealed;
        tampered.tag[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        CHECK(!decrypt_payload(tampered, key));
    }
    SUBCASE("ciphertext and nonce mutations fail too") {
        SealedPayload tampered = sealed;
        tampered.ciphertext[0] ^= 1;
        CHECK(!decrypt_payload(tampered, key));
        tampered = sealed;
        tampered.nonce[0] ^= 1;
        CHECK(!decrypt_payload(tampered, key));
    }
}

TEST_CASE("wrong key fails authentication; bad key length throws") {
    DeterministicRng rng(4);
    Bytes key = rng.bytes(32);
    Bytes other = rng.bytes(32);
    SealedPayload sealed = encrypt_payload(to_bytes("secret"), key, rng);
    CHECK(!decrypt_payload(sealed, other));
    CHECK_THROWS_AS(encrypt_payload(to_bytes("x"), rng.bytes(16), rng), std::invalid_argument);
    CHECK_THROWS_AS(decrypt_payload(sealed, rng.bytes(31)), std::invalid_argument);
}

TEST_CASE("nonces are unique across many seals with one key") {
    DeterministicRng rng(12);
    Bytes key = rng.bytes(32);
    std::set<std::string> nonces;
    for (int i = 0; i < 10000; ++i) {
        SealedPayload sealed = encrypt_payload(to_bytes("n"), key, rng);
        nonces.insert(hex_encode(sealed.nonce));
    }
    CHECK(nonces.size() == 10000);
}

TEST_CASE("sealed payload blob layout roundtrips") {
    DeterministicRng rng(8);
    Bytes key = rng.bytes(32);
    SealedPayload sealed = encrypt_payload(to_bytes("layout"), key, rng);
    Bytes blob = sealed_to_bytes(sealed);
    CHECK(blob.size() == 28 + sealed.ciphertext.size());
    auto back = sealed_from_bytes(blob);
    REQUIRE(back);
    CHECK(*back == sealed);
    CHECK(!sealed_from_bytes(Bytes(10)));
}

TEST_CASE("content hashes collide nowhere in a generated corpus") {
    DeterministicRng rng(21);
    std::set<std::string> seen;
    for (int i = 0; i < 2000; ++i) {
        Bytes data = rng.bytes(static_cast<size_t>(rng.next_u64() % 64));
        data.push_back(static_cast<uint8_t>(i));
        data.push_back(static_cast<uint8_t>(i >> 8));
        seen.insert(content_hash(data).hex());
    }
    CHECK(seen.size() == 2000);
}
