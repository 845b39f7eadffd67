#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>

#include "bacip/crypto.hpp"

namespace bacip {

struct StoredRef {
    ContentAddress address;
    bool sealed = false;

    bool operator==(const StoredRef&) const = default;
};

enum class GetError { NotFound, IntegrityError };

struct PointerTarget {
    bool invalidated = false;
    ContentAddress address;  // meaningful only when !invalidated
};

// Content-addressed blob store: one file per blob under a two-level fan-out
// (<root>/<first 2 hex>/<remaining 62 hex>). Reads are self-certifying: the
// stored bytes are re-hashed against the address before being returned.
// Pointers live in an append-only JSON-lines journal; invalidation is
// permanent.
class ContentStore {
public:
    // maxBlobs == 0 means unbounded.
    explicit ContentStore(std::filesystem::path root, size_t maxBlobs = 0);

    // Idempotent; throws StorageFullError when the blob cap is reached.
    StoredRef put(std::span<const uint8_t> content, bool sealed = false);

    std::optional<Bytes> get(const ContentAddress& address, GetError* error = nullptr) const;

    // Destroys the blob bytes; ledger records referencing the address are
    // untouched. Returns false when the blob is absent (or already erased).
    bool erase(const ContentAddress& address);

    bool has(const ContentAddress& address) const;
    size_t blob_count() const;

    void create_pointer(const std::string& pointerId, const ContentAddress& target);
    // nullopt: unknown pointer. invalidated=true: target permanently gone.
    std::optional<PointerTarget> resolve_pointer(const std::string& pointerId) const;
    // Monotone: no later operation can restore a target. Throws
    // UnknownPointerError for pointers never created.
    void invalidate_pointer(const std::string& pointerId);

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path blob_path(const ContentAddress& address) const;
    void replay_pointer_journal();
    void append_pointer_record(const std::string& pointerId, const std::string& target);

    std::filesystem::path root_;
    std::filesystem::path pointerJournal_;
    size_t maxBlobs_;
    std::map<std::string, PointerTarget> pointers_;
};

struct StorageFullError : std::runtime_error {
    StorageFullError() : std::runtime_error("content store is full") {}
};

struct UnknownPointerError : std::runtime_error {
    explicit UnknownPointerError(const std::string& id)
        : std::runtime_error("unknown pointer: " + id) {}
};

}  // namespace bacip
