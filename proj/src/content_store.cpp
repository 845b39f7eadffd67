#include "bacip/content_store.hpp"

#include <fstream>

#include <json.hpp>

namespace bacip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kInvalidated = "INVALIDATED";

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

ContentStore::ContentStore(fs::path root, size_t maxBlobs)
    : root_(std::move(root)), pointerJournal_(root_ / "pointers.jsonl"), maxBlobs_(maxBlobs) {
    fs::create_directories(root_);
    replay_pointer_journal();
}

fs::path ContentStore::blob_path(const ContentAddress& address) const {
    std::string hex = address.hex();
    return root_ / hex.substr(0, 2) / hex.substr(2);
}

StoredRef ContentStore::put(std::span<const uint8_t> content, bool sealed) {
    ContentAddress address = content_hash(content);
    fs::path path = blob_path(address);
    if (fs::exists(path)) return StoredRef{address, sealed};
    if (maxBlobs_ != 0 && blob_count() >= maxBlobs_) throw StorageFullError{};
    fs::create_directories(path.parent_path());
    write_file(path, content);
    return StoredRef{address, sealed};
}

std::optional<Bytes> ContentStore::get(const ContentAddress& address, GetError* error) const {
    fs::path path = blob_path(address);
    if (!fs::exists(path)) {
        if (error) *error = GetError::NotFound;
        return std::nullopt;
    }
    Bytes content = read_file(path);
    if (content_hash(content) != address) {
        if (error) *error = GetError::IntegrityError;
        return std::nullopt;
    }
    return content;
}

bool ContentStore::erase(const ContentAddress& address) {
    fs::path path = blob_path(address);
    if (!fs::exists(path)) return false;
    // Overwrite before unlinking so the bytes are gone even if the inode
    // lingers.
    auto size = fs::file_size(path);
    Bytes zeros(static_cast<size_t>(size), 0);
    write_file(path, zeros);
    fs::remove(path);
    return true;
}

bool ContentStore::has(const ContentAddress& address) const {
    return fs::exists(blob_path(address));
}

size_t ContentStore::blob_count() const {
    size_t count = 0;
    for (const auto& dir : fs::directory_iterator(root_)) {
        if (!dir.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) ++count;
        }
    }
    return count;
}

void ContentStore::replay_pointer_journal() {
    pointers_.clear();
    if (!fs::exists(pointerJournal_)) return;
    std::ifstream in(pointerJournal_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) continue;
        std::string id = record.value("pointerId", "");
        std::string target = record.value("target", "");
        if (id.empty()) continue;
        auto& entry = pointers_[id];
        if (entry.invalidated) continue;  // invalidation wins over any later record
        if (target == kInvalidated) {
            entry.invalidated = true;
        } else if (auto address = ContentAddress::from_hex(target)) {
            entry.address = *address;
        }
    }
}

void ContentStore::append_pointer_record(const std::string& pointerId,
                                         const std::string& target) {
    std::ofstream out(pointerJournal_, std::ios::app);
    json record;
    record["pointerId"] = pointerId;
    record["target"] = target;
    out << record.dump() << "\n";
    if (!out) throw std::runtime_error("pointer journal write failed");
}

void ContentStore::create_pointer(const std::string& pointerId, const ContentAddress& target) {
    auto it = pointers_.find(pointerId);
    if (it != pointers_.end() && it->second.invalidated) return;  // stays invalidated
    pointers_[pointerId] = PointerTarget{false, target};
    append_pointer_record(pointerId, target.hex());
}

std::optional<PointerTarget> ContentStore::resolve_pointer(const std::string& pointerId) const {
    auto it = pointers_.find(pointerId);
    if (it == pointers_.end()) return std::nullopt;
    return it->second;
}

void ContentStore::invalidate_pointer(const std::string& pointerId) {
    auto it = pointers_.find(pointerId);
    if (it == pointers_.end()) throw UnknownPointerError(pointerId);
    if (it->second.invalidated) return;
    it->second.invalidated = true;
    append_pointer_record(pointerId, kInvalidated);
}

}  // namespace bacip
