#pragma once

#include <span>
#include <vector>

#include "bacip/bytes.hpp"

namespace bacip {

enum class SiblingSide { Left, Right };

struct MerkleStep {
    Hash32 hash{};
    SiblingSide side = SiblingSide::Left;  // which side the sibling sits on

    bool operator==(const MerkleStep&) const = default;
};

using MerklePath = std::vector<MerkleStep>;

// Binary tree over the leaf sequence as given; an odd node is promoted
// unchanged (not duplicated). Empty input hashes the empty byte string.
Hash32 merkle_root(std::span<const Hash32> leaves);

// Path for leaves[index]; promoted levels contribute no step.
MerklePath merkle_path(std::span<const Hash32> leaves, size_t index);

Hash32 merkle_fold(const Hash32& leaf, const MerklePath& path);

}  // namespace bacip
