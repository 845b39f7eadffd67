#include "bacip/merkle.hpp"

#include <stdexcept>

#include "bacip/crypto.hpp"

namespace bacip {

namespace {

Hash32 parent_hash(const Hash32& left, const Hash32& right) {
    Bytes buf;
    buf.reserve(64);
    buf.insert(buf.end(), left.begin(), left.end());
    buf.insert(buf.end(), right.begin(), right.end());
    return sha256(buf);
}

}  // namespace

Hash32 merkle_root(std::span<const Hash32> leaves) {
    if (leaves.empty()) return sha256({});
    std::vector<Hash32> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        std::vector<Hash32> next;
        next.reserve((level.size() + 1) / 2);
        size_t i = 0;
        for (; i + 1 < level.size(); i += 2) next.push_back(parent_hash(level[i], level[i + 1]));
        if (i < level.size()) next.push_back(level[i]);  // odd node promoted
        level = std::move(next);
    }
    return level[0];
}

MerklePath merkle_path(std::span<const Hash32> leaves, size_t index) {
    if (index >= leaves.size()) throw std::out_of_range("merkle leaf index");
    MerklePath path;
    std::vector<Hash32> level(leaves.begin(), leaves.end());
    size_t pos = index;
    while (level.size() > 1) {
        std::vector<Hash32> next;
        next.reserve((level.size() + 1) / 2);
        size_t i = 0;
        for (; i + 1 < level.size(); i += 2) {
            if (i == pos || i + 1 == pos) {
                if (i == pos) {
                    path.push_back({level[i + 1], SiblingSide::Right});
                } else {
                    path.push_back({level[i], SiblingSide::Left});
                }
            }
            next.push_back(parent_hash(level[i], level[i + 1]));
        }
        if (i < level.size()) next.push_back(level[i]);
        pos /= 2;
        level = std::move(next);
    }
    return path;
}

Hash32 merkle_fold(const Hash32& leaf, const MerklePath& path) {
    Hash32 current = leaf;
    for (const auto& step : path) {
        current = step.side == SiblingSide::Left ? parent_hash(step.hash, current)
                                                 : parent_hash(current, step.hash);
    }
    return current;
}

}  // namespace bacip
