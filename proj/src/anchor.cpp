#include "bacip/anchor.hpp"

#include <fstream>

namespace bacip {

using nlohmann::json;

json anchor_to_json(const PublicAnchor& anchor) {
    json j;
    j["privateHeight"] = anchor.privateHeight;
    j["privateBlockHash"] = hash_hex(anchor.privateBlockHash);
    j["stateRoot"] = hash_hex(anchor.stateRoot);
    j["anchorIndex"] = anchor.anchorIndex;
    j["prevAnchorHash"] = hash_hex(anchor.prevAnchorHash);
    return j;
}

std::optional<PublicAnchor> anchor_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    PublicAnchor anchor;
    if (!j.contains("privateHeight") || !j["privateHeight"].is_number_unsigned()) {
        return std::nullopt;
    }
    anchor.privateHeight = j["privateHeight"].get<uint64_t>();
    anchor.anchorIndex = j.value("anchorIndex", 0u);
    auto blockHash = hash_from_hex(j.value("privateBlockHash", ""));
    auto stateRoot = hash_from_hex(j.value("stateRoot", ""));
    auto prev = hash_from_hex(j.value("prevAnchorHash", ""));
    if (!blockHash || !stateRoot || !prev) return std::nullopt;
    anchor.privateBlockHash = *blockHash;
    anchor.stateRoot = *stateRoot;
    anchor.prevAnchorHash = *prev;
    return anchor;
}

Hash32 anchor_hash(const PublicAnchor& anchor) {
    return sha256(to_bytes(anchor_to_json(anchor).dump()));
}

json inclusion_proof_to_json(const InclusionProof& proof) {
    json j;
    j["credentialId"] = proof.credentialId;
    j["leafHash"] = hash_hex(proof.leafHash);
    json path = json::array();
    for (const auto& step : proof.path) {
        json entry;
        entry["hash"] = hash_hex(step.hash);
        entry["side"] = step.side == SiblingSide::Left ? "left" : "right";
        path.push_back(std::move(entry));
    }
    j["path"] = std::move(path);
    j["anchorIndex"] = proof.anchorIndex;
    return j;
}

std::optional<InclusionProof> inclusion_proof_from_json(const json& j) {
    if (!j.is_object()) return std::nullopt;
    InclusionProof proof;
    proof.credentialId = j.value("credentialId", "");
    auto leaf = hash_from_hex(j.value("leafHash", ""));
    if (proof.credentialId.empty() || !leaf) return std::nullopt;
    proof.leafHash = *leaf;
    proof.anchorIndex = j.value("anchorIndex", 0u);
    if (auto it = j.find("path"); it != j.end() && it->is_array()) {
        for (const auto& entry : *it) {
            auto hash = hash_from_hex(entry.value("hash", ""));
            std::string side = entry.value("side", "");
            if (!hash || (side != "left" && side != "right")) return std::nullopt;
            proof.path.push_back(
                {*hash, side == "left" ? SiblingSide::Left : SiblingSide::Right});
        }
    }
    return proof;
}

bool verify_with_anchor(const InclusionProof& proof, const ClaimedStatus& status,
                        const PublicAnchor& anchor) {
    Hash32 leaf = credential_leaf(proof.credentialId, status.docHash, status.revoked);
    if (leaf != proof.leafHash) return false;
    return merkle_fold(proof.leafHash, proof.path) == anchor.stateRoot;
}

AnchorLog::AnchorLog(std::filesystem::path path) : path_(std::move(path)) {
    load();
}

void AnchorLog::load() {
    anchors_.clear();
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) continue;
        if (auto anchor = anchor_from_json(record)) anchors_.push_back(*anchor);
    }
}

void AnchorLog::append_line(const PublicAnchor& anchor) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    out << anchor_to_json(anchor).dump() << "\n";
    if (!out) throw std::runtime_error("anchor log write failed: " + path_.string());
}

const PublicAnchor& AnchorLog::anchor_block(const Block& finalizedBlock,
                                            const LedgerState& state) {
    if (!anchors_.empty() && finalizedBlock.height <= anchors_.back().privateHeight) {
        throw OutOfOrderError{};
    }
    PublicAnchor anchor;
    anchor.privateHeight = finalizedBlock.height;
    anchor.privateBlockHash = block_hash(finalizedBlock);
    anchor.stateRoot = state_commitment(state);
    anchor.anchorIndex = anchors_.size();
    anchor.prevAnchorHash = anchors_.empty() ? Hash32{} : anchor_hash(anchors_.back());
    append_line(anchor);
    anchors_.push_back(anchor);
    return anchors_.back();
}

std::optional<PublicAnchor> AnchorLog::latest() const {
    if (anchors_.empty()) return std::nullopt;
    return anchors_.back();
}

std::optional<PublicAnchor> AnchorLog::at(uint64_t index) const {
    if (index >= anchors_.size()) return std::nullopt;
    return anchors_[index];
}

bool AnchorLog::verify_chain() const {
    for (size_t i = 0; i < anchors_.size(); ++i) {
        if (anchors_[i].anchorIndex != i) return false;
        Hash32 expectedPrev = i == 0 ? Hash32{} : anchor_hash(anchors_[i - 1]);
        if (anchors_[i].prevAnchorHash != expectedPrev) return false;
    }
    return true;
}

InclusionProof build_inclusion_proof(const LedgerState& state, const std::string& credentialId,
                                     uint64_t anchorIndex) {
    auto it = state.credentials.find(credentialId);
    if (it == state.credentials.end()) throw UnknownCredentialError(credentialId);
    size_t index = static_cast<size_t>(std::distance(state.credentials.begin(), it));
    auto leaves = state_leaves(state);

    InclusionProof proof;
    proof.credentialId = credentialId;
    proof.leafHash = leaves[index];
    proof.path = merkle_path(leaves, index);
    proof.anchorIndex = anchorIndex;
    return proof;
}

}  // namespace bacip
