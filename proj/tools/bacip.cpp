#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bacip/gateway.hpp"
#include "bacip/iso8601.hpp"
#include "bacip/node.hpp"
#include "bacip/simulation.hpp"

namespace {

using namespace bacip;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;

struct CliConfig {
    std::string keystorePath = "bacip-data/keystore.json";
    std::string storeRoot = "bacip-data/store";
    std::string ledgerJournalPath = "bacip-data/ledger.jsonl";
    std::string anchorLogPath = "bacip-data/anchors.jsonl";
    std::string gatewayBind = "127.0.0.1:8080";
    std::string validatorConfigPath;
};

std::optional<std::string> read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool load_config_file(const std::string& path, CliConfig& config) {
    auto text = read_text_file(path);
    if (!text) return false;
    json parsed = json::parse(*text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) return false;
    config.keystorePath = parsed.value("keystorePath", config.keystorePath);
    config.storeRoot = parsed.value("storeRoot", config.storeRoot);
    config.ledgerJournalPath = parsed.value("ledgerJournalPath", config.ledgerJournalPath);
    config.anchorLogPath = parsed.value("anchorLogPath", config.anchorLogPath);
    config.gatewayBind = parsed.value("gatewayBind", config.gatewayBind);
    config.validatorConfigPath = parsed.value("validatorConfigPath", config.validatorConfigPath);
    return true;
}

std::string keystore_passphrase() {
    if (const char* env = std::getenv("BACIP_KEYSTORE_PASSPHRASE")) return env;
    std::cerr << "Keystore passphrase: " << std::flush;
    std::string passphrase;
    std::getline(std::cin, passphrase);
    return passphrase;
}

std::unique_ptr<Node> open_node(const CliConfig& config) {
    NodeOptions options;
    options.keystorePath = config.keystorePath;
    options.storeRoot = config.storeRoot;
    options.journalPath = config.ledgerJournalPath;
    options.anchorLogPath = config.anchorLogPath;
    options.passphrase = keystore_passphrase();
    if (!config.validatorConfigPath.empty()) {
        auto text = read_text_file(config.validatorConfigPath);
        if (!text) throw std::runtime_error("validator config unreadable");
        json parsed = json::parse(*text, nullptr, false);
        auto genesis = Genesis::from_json(parsed);
        if (!genesis) throw std::runtime_error("validator config invalid");
        options.genesis = *genesis;
    }
    return std::make_unique<Node>(std::move(options));
}

int cmd_keygen(const CliConfig& config, const std::string& algName, const std::string& keyId) {
    SignatureAlgorithm alg =
        algName == "es256" ? SignatureAlgorithm::ES256 : SignatureAlgorithm::Ed25519;
    Keystore keystore = Keystore::open(config.keystorePath, keystore_passphrase());
    if (keystore.has_key(keyId)) {
        std::cerr << "error: key id already exists: " << keyId << "\n";
        return kDomainFailure;
    }
    SystemRng rng;
    KeyPair pair = generate_keypair(alg, rng, keyId);
    keystore.add_key(pair);
    std::cout << base64_encode(pair.publicKey) << "\n";
    return kOk;
}

int cmd_issue(const CliConfig& config, const std::string& bodyPath, const std::string& keyId,
              const std::string& outPath, bool canonical) {
    auto body = read_text_file(bodyPath);
    if (!body) {
        std::cerr << "error: cannot read " << bodyPath << "\n";
        return kUsageError;
    }
    auto parsed = validate_issue_request(to_bytes(*body));
    if (!parsed.ok()) {
        for (const auto& violation : parsed.violations) {
            std::cerr << violation.path << ": " << violation.reason << "\n";
        }
        return kDomainFailure;
    }
    auto node = open_node(config);
    SystemRng rng;
    auto outcome = node->issue(*parsed.request, keyId, rng);
    if (!outcome.ok) {
        std::cerr << "error: " << outcome.error << "\n";
        for (const auto& violation : outcome.violations) {
            std::cerr << violation.path << ": " << violation.reason << "\n";
        }
        return kDomainFailure;
    }
    json doc = document_to_json(outcome.document);
    std::string rendered = canonical ? doc.dump() : doc.dump(2);
    if (outPath.empty()) {
        std::cout << rendered << "\n";
    } else {
        std::ofstream out(outPath, std::ios::trunc);
        out << rendered << "\n";
        std::cout << outcome.document.id << "\n";
    }
    return kOk;
}

int cmd_verify(const CliConfig& config, const std::string& filePath) {
    auto body = read_text_file(filePath);
    if (!body) {
        std::cerr << "error: cannot read " << filePath << "\n";
        return kUsageError;
    }
    auto node = open_node(config);
    auto result = node->verify_document(to_bytes(*body));
    std::cout << to_string(result.outcome) << "\n";
    return result.outcome == VerificationOutcome::Valid ? kOk : kDomainFailure;
}

int cmd_revoke(const CliConfig& config, const std::string& credentialId,
               const std::string& keyId) {
    auto node = open_node(config);
    auto outcome = node->revoke(credentialId, keyId);
    switch (outcome.status) {
        case Node::RevokeOutcome::Status::Revoked:
            std::cout << "revoked\n";
            return kOk;
        case Node::RevokeOutcome::Status::AlreadyRevoked:
            std::cout << "already_revoked\n";
            return kOk;
        case Node::RevokeOutcome::Status::UnknownId:
            std::cerr << "error: unknown credential id\n";
            return kDomainFailure;
        case Node::RevokeOutcome::Status::Unavailable:
            std::cerr << "error: consensus unavailable\n";
            return kDomainFailure;
        case Node::RevokeOutcome::Status::Rejected:
            std::cerr << "error: " << to_string(outcome.validity.reason) << "\n";
            return kDomainFailure;
    }
    return kDomainFailure;
}

int cmd_consent(const CliConfig& config, const std::string& action, const std::string& keyId) {
    auto node = open_node(config);
    Node::ConsentAction consentAction = action == "give"       ? Node::ConsentAction::Give
                                        : action == "withdraw" ? Node::ConsentAction::Withdraw
                                                               : Node::ConsentAction::Delete;
    auto outcome = node->consent(consentAction, keyId);
    if (!outcome.ok) {
        std::cerr << "error: " << to_string(outcome.validity.reason) << "\n";
        return kDomainFailure;
    }
    std::cout << action << " ok, tx " << hash_hex(outcome.txId) << "\n";
    return kOk;
}

int cmd_audit(const CliConfig& config, const std::string& eventName, const std::string& subject,
              uint64_t fromHeight, uint64_t toHeight) {
    auto node = open_node(config);
    AuditFilter filter;
    if (!eventName.empty()) {
        auto name = parse_audit_event_name(eventName);
        if (!name) {
            std::cerr << "error: unknown event name: " << eventName << "\n";
            return kUsageError;
        }
        filter.eventName = name;
    }
    if (!subject.empty()) filter.subject = subject;
    if (fromHeight > 0) filter.fromHeight = fromHeight;
    if (toHeight > 0) filter.toHeight = toHeight;
    for (const auto& event : audit_query(node->state(), filter)) {
        std::cout << audit_event_to_json(event).dump() << "\n";
    }
    return kOk;
}

int cmd_anchor_proof(const CliConfig& config, const std::string& credentialId) {
    auto node = open_node(config);
    auto record = node->state().credentials.find(credentialId);
    if (record == node->state().credentials.end()) {
        std::cerr << "error: unknown credential id\n";
        return kDomainFailure;
    }
    auto latest = node->anchors().latest();
    if (!latest) {
        std::cerr << "error: no anchors yet\n";
        return kDomainFailure;
    }
    auto proof = build_inclusion_proof(node->state(), credentialId, latest->anchorIndex);
    ClaimedStatus status;
    status.docHash = record->second.docHash;
    status.revoked = is_revoked(node->state(), revocation_key(credentialId));
    json out = inclusion_proof_to_json(proof);
    out["docHash"] = hash_hex(status.docHash);
    out["revoked"] = status.revoked;
    std::cout << out.dump(2) << "\n";
    return verify_with_anchor(proof, status, *latest) ? kOk : kDomainFailure;
}

int cmd_simulate(const std::string& scenarioPath, const std::string& reportPath) {
    auto text = read_text_file(scenarioPath);
    if (!text) {
        std::cerr << "error: cannot read scenario " << scenarioPath << "\n";
        return kUsageError;
    }
    json parsed = json::parse(*text, nullptr, false);
    if (parsed.is_discarded()) {
        std::cerr << "error: scenario is not valid JSON\n";
        return kUsageError;
    }
    auto scenario = Scenario::from_json(parsed);
    if (!scenario) {
        std::cerr << "error: scenario fields invalid\n";
        return kUsageError;
    }
    SimReport report = run_simulation(*scenario);
    json reportJson = report.to_json();
    if (!reportPath.empty()) {
        std::ofstream out(reportPath, std::ios::trunc);
        out << reportJson.dump(2) << "\n";
    }
    std::cout << "n=" << report.n << " f=" << report.f << " quorum=" << report.quorum
              << " ticks=" << report.ticksElapsed << " messages=" << report.messagesSent
              << " safetyViolations=" << report.safetyViolations
              << (report.expectUnsafe ? " (expectUnsafe)" : "") << "\n";
    for (const auto& node : report.perNode) {
        std::cout << "  node " << node.node << (node.byzantine ? " [" + node.behavior + "]" : "")
                  << " finalized=" << node.heightsFinalized << "\n";
    }
    return report.safetyViolations == 0 ? kOk : kDomainFailure;
}

int cmd_serve(const CliConfig& config) {
    auto node = open_node(config);
    Gateway gateway(*node);
    std::string bind = config.gatewayBind;
    size_t colon = bind.rfind(':');
    std::string host = colon == std::string::npos ? bind : bind.substr(0, colon);
    int port = colon == std::string::npos ? 8080 : std::stoi(bind.substr(colon + 1));
    std::cerr << "serving on " << host << ":" << port << "\n";
    return gateway.listen(host, port) ? kOk : kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BACIP credential registry node"};
    app.require_subcommand(1);

    CliConfig config;
    std::string configPath;
    std::string keystoreOverride;
    app.add_option("--config", configPath, "JSON config file");
    app.add_option("--keystore", keystoreOverride, "keystore path override");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "generate a keypair into the keystore");
    std::string alg, keyId;
    keygen->add_option("--alg", alg, "signature algorithm")
        ->required()
        ->check(CLI::IsMember({"es256", "ed25519"}));
    keygen->add_option("--key-id", keyId, "key identifier URI")->required();

    // issue
    auto* issue = app.add_subcommand("issue", "issue a signed credential");
    std::string bodyPath, outPath;
    bool canonical = false;
    issue->add_option("--body", bodyPath, "issue-request JSON file")->required();
    issue->add_option("--key-id", keyId, "issuer key id")->required();
    issue->add_option("--out", outPath, "write the signed document here");
    issue->add_flag("--canonical", canonical, "canonical instead of pretty output");

    // verify
    auto* verify = app.add_subcommand("verify", "verify a credential document");
    std::string filePath;
    verify->add_option("--file", filePath, "credential JSON file")->required();

    // revoke
    auto* revoke = app.add_subcommand("revoke", "revoke an issued credential");
    std::string credentialId;
    revoke->add_option("--id", credentialId, "credential id")->required();
    revoke->add_option("--key-id", keyId, "signer key id")->required();

    // consent
    auto* consent = app.add_subcommand("consent", "consent registry operations");
    std::string action;
    consent->add_option("--action", action, "give | withdraw | delete")
        ->required()
        ->check(CLI::IsMember({"give", "withdraw", "delete"}));
    consent->add_option("--key-id", keyId, "subject key id")->required();

    // audit
    auto* audit = app.add_subcommand("audit", "query the audit trail");
    std::string eventName, subject;
    uint64_t fromHeight = 0, toHeight = 0;
    audit->add_option("--event-name", eventName, "filter by event name");
    audit->add_option("--subject", subject, "filter by subject");
    audit->add_option("--from-height", fromHeight, "minimum height");
    audit->add_option("--to-height", toHeight, "maximum height");

    // anchor-proof
    auto* anchorProof = app.add_subcommand("anchor-proof", "emit an inclusion proof");
    anchorProof->add_option("--id", credentialId, "credential id")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a consensus scenario");
    std::string scenarioPath, reportPath;
    simulate->add_option("--scenario", scenarioPath, "scenario JSON file")->required();
    simulate->add_option("--report", reportPath, "write the report here");

    // serve
    auto* serve = app.add_subcommand("serve", "start the REST gateway");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kUsageError;
    }

    if (!configPath.empty() && !load_config_file(configPath, config)) {
        std::cerr << "error: cannot load config " << configPath << "\n";
        return kUsageError;
    }
    if (!keystoreOverride.empty()) config.keystorePath = keystoreOverride;

    try {
        if (keygen->parsed()) return cmd_keygen(config, alg, keyId);
        if (issue->parsed()) return cmd_issue(config, bodyPath, keyId, outPath, canonical);
        if (verify->parsed()) return cmd_verify(config, filePath);
        if (revoke->parsed()) return cmd_revoke(config, credentialId, keyId);
        if (consent->parsed()) return cmd_consent(config, action, keyId);
        if (audit->parsed()) return cmd_audit(config, eventName, subject, fromHeight, toHeight);
        if (anchorProof->parsed()) return cmd_anchor_proof(config, credentialId);
        if (simulate->parsed()) return cmd_simulate(scenarioPath, reportPath);
        if (serve->parsed()) return cmd_serve(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}
