#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bacip/ledger.hpp"

namespace bacip {

// Entry in the public anchor log: commitments only, never credential
// contents, names or DIDs.
struct PublicAnchor {
    uint64_t privateHeight = 0;
    Hash32 privateBlockHash{};
    Hash32 stateRoot{};
    uint64_t anchorIndex = 0;
    Hash32 prevAnchorHash{};

    bool operator==(const PublicAnchor&) const = default;
};

Hash32 anchor_hash(const PublicAnchor& anchor);
nlohmann::json anchor_to_json(const PublicAnchor& anchor);
std::optional<PublicAnchor> anchor_from_json(const nlohmann::json& j);

struct InclusionProof {
    std::string credentialId;
    Hash32 leafHash{};
    MerklePath path;
    uint64_t anchorIndex = 0;
};

nlohmann::json inclusion_proof_to_json(const InclusionProof& proof);
std::optional<InclusionProof> inclusion_proof_from_json(const nlohmann::json& j);

struct ClaimedStatus {
    Hash32 docHash{};
    bool revoked = false;
};

// Pure third-party check: recomputes the leaf from the claimed status and
// folds the path against the anchored root. Needs no ledger access.
bool verify_with_anchor(const InclusionProof& proof, const ClaimedStatus& status,
                        const PublicAnchor& anchor);

struct OutOfOrderError : std::runtime_error {
    OutOfOrderError() : std::runtime_error("anchor height not above the last anchored") {}
};

struct UnknownCredentialError : std::runtime_error {
    explicit UnknownCredentialError(const std::string& id)
        : std::runtime_error("unknown credential: " + id) {}
};

// Append-only hash-linked log standing in for the public chain; persisted as
// JSON lines, one anchor per line.
class AnchorLog {
public:
    explicit AnchorLog(std::filesystem::path path);

    // `state` must be the post-block state. Throws OutOfOrderError when the
    // block height does not extend the last anchored height.
    const PublicAnchor& anchor_block(const Block& finalizedBlock, const LedgerState& state);

    const std::vector<PublicAnchor>& anchors() const { return anchors_; }
    std::optional<PublicAnchor> latest() const;
    std::optional<PublicAnchor> at(uint64_t index) const;

    // Recomputes the hash links; false when any historical entry was altered.
    bool verify_chain() const;

private:
    void load();
    void append_line(const PublicAnchor& anchor);

    std::filesystem::path path_;
    std::vector<PublicAnchor> anchors_;
};

// Throws UnknownCredentialError for ids absent from the state.
InclusionProof build_inclusion_proof(const LedgerState& state, const std::string& credentialId,
                                     uint64_t anchorIndex);

}  // namespace bacip
