#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "bacip/content_store.hpp"
#include "reference_sha256.hpp"
#include "support.hpp"

using namespace bacip;
using testsupport::TempDir;

TEST_CASE("put/get roundtrip and idempotence") {
    TempDir dir("store");
    ContentStore store(dir.path());

    Bytes content = to_bytes("diploma payload");
    StoredRef ref = store.put(content);
    auto fetched = store.get(ref.address);
    REQUIRE(fetched);
    CHECK(*fetched == content);

    StoredRef again = store.put(content);
    CHECK(again.address == ref.address);
    CHECK(store.blob_count() == 1);
}

TEST_CASE("unknown address is NotFound") {
    TempDir dir("store");
    ContentStore store(dir.path());
    ContentAddress missing = content_hash(to_bytes("never stored"));
    GetError error{};
    CHECK(!store.get(missing, &error));
    CHECK(error == GetError::NotFound);
}

TEST_CASE("self-certifying reads detect on-disk corruption") {
    TempDir dir("store");
    ContentStore store(dir.path());
    StoredRef ref = store.put(to_bytes("tamper me"));

    // Flip one byte in the backing file.
    std::string hex = ref.address.hex();
    auto path = dir.path() / hex.substr(0, 2) / hex.substr(2);
    std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
    char byte;
    file.read(&byte, 1);
    byte = static_cast<char>(byte ^ 0x01);
    file.seekp(0);
    file.write(&byte, 1);
    file.close();

    GetError error{};
    CHECK(!store.get(ref.address, &error));
    CHECK(error == GetError::IntegrityError);
}

TEST_CASE("sealed payload address equals the independent hash of the sealed bytes") {
    TempDir dir("store");
    ContentStore store(dir.path());
    DeterministicRng rng(5);
    Bytes key = rng.bytes(32);
    SealedPayload sealed = encrypt_payload(to_bytes("Password: mySecurePassword123"), key, rng);
    Bytes blob = sealed_to_bytes(sealed);

    StoredRef ref = store.put(blob, true);
    CHECK(ref.sealed);
    CHECK(ref.address.digest == testref::sha256(blob));
}

TEST_CASE("erase destroys the blob, and only the blob") {
    TempDir dir("store");
    ContentStore store(dir.path());
    StoredRef ref = store.put(to_bytes("personal data"));

    CHECK(store.erase(ref.address));
    GetError error{};
    CHECK(!store.get(ref.address, &error));
    CHECK(error == GetError::NotFound);

    SUBCASE("second erase reports NotFound") { CHECK(!store.erase(ref.address)); }
    SUBCASE("erase of an unknown address reports NotFound") {
        CHECK(!store.erase(content_hash(to_bytes("other"))));
    }
}

TEST_CASE("bounded stores reject further blobs") {
    TempDir dir("store");
    ContentStore store(dir.path(), 2);
    store.put(to_bytes("one"));
    store.put(to_bytes("two"));
    CHECK_THROWS_AS(store.put(to_bytes("three")), StorageFullError);
    // Re-putting existing content is still fine.
    CHECK(store.put(to_bytes("one")).address == content_hash(to_bytes("one")));
}

TEST_CASE("pointers resolve, invalidate monotonically, and persist") {
    TempDir dir("store");
    {
        ContentStore store(dir.path());
        StoredRef ref = store.put(to_bytes("pointed-at"));
        store.create_pointer("ptr-1", ref.address);

        auto resolved = store.resolve_pointer("ptr-1");
        REQUIRE(resolved);
        CHECK(!resolved->invalidated);
        CHECK(resolved->address == ref.address);

        CHECK(!store.resolve_pointer("ptr-unknown"));
        CHECK_THROWS_AS(store.invalidate_pointer("ptr-unknown"), UnknownPointerError);

        store.invalidate_pointer("ptr-1");
        for (int i = 0; i < 100; ++i) {
            auto after = store.resolve_pointer("ptr-1");
            REQUIRE(after);
            CHECK(after->invalidated);
        }
        // Re-creating an invalidated pointer must not resurrect it.
        store.create_pointer("ptr-1", ref.address);
        CHECK(store.resolve_pointer("ptr-1")->invalidated);
    }
    // Journal replay preserves the invalidation.
    ContentStore reopened(dir.path());
    auto resolved = reopened.resolve_pointer("ptr-1");
    REQUIRE(resolved);
    CHECK(resolved->invalidated);
}

TEST_CASE("invalidate then erase: both read paths are dead") {
    TempDir dir("store");
    ContentStore store(dir.path());
    StoredRef ref = store.put(to_bytes("to be forgotten"));
    store.create_pointer("subject-ptr", ref.address);

    store.invalidate_pointer("subject-ptr");
    CHECK(store.erase(ref.address));

    CHECK(!store.get(ref.address));
    CHECK(store.resolve_pointer("subject-ptr")->invalidated);
}

TEST_CASE("every successful get self-certifies") {
    TempDir dir("store");
    ContentStore store(dir.path());
    DeterministicRng rng(9);
    for (int i = 0; i < 50; ++i) {
        Bytes content = rng.bytes(static_cast<size_t>(rng.next_u64() % 200));
        StoredRef ref = store.put(content);
        auto fetched = store.get(ref.address);
        REQUIRE(fetched);
        CHECK(content_hash(*fetched) == ref.address);
    }
}
