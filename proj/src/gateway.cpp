#include "bacip/gateway.hpp"

#include <httplib.h>

#include "bacip/iso8601.hpp"

namespace bacip {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    json body;
    body["error"] = message;
    send_json(res, status, body);
}

json violations_to_json(const std::vector<Violation>& violations) {
    json out = json::array();
    for (const auto& v : violations) {
        json entry;
        entry["path"] = v.path;
        entry["reason"] = v.reason;
        out.push_back(std::move(entry));
    }
    return out;
}

// nullopt means the response was already written (401).
std::optional<Principal> require_auth(Node& node, const httplib::Request& req,
                                      httplib::Response& res) {
    std::string header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.substr(0, prefix.size()) != prefix) {
        send_error(res, 401, "missing bearer token");
        return std::nullopt;
    }
    auto outcome = authenticate(header.substr(prefix.size()), node.state(), node.now());
    if (std::holds_alternative<AuthError>(outcome)) {
        send_error(res, 401, to_string(std::get<AuthError>(outcome)));
        return std::nullopt;
    }
    return std::get<Principal>(outcome);
}

json verify_result_to_json(const Node::VerifyResult& result, int64_t checkedAt) {
    json body;
    body["status"] = to_string(result.outcome);
    body["credentialId"] = result.credentialId;
    body["checkedAt"] = format_iso8601(checkedAt);
    if (result.docHash) {
        body["docHash"] = hash_hex(*result.docHash);
        body["revoked"] = result.revoked;
    }
    if (result.anchorProof) body["anchorProof"] = inclusion_proof_to_json(*result.anchorProof);
    return body;
}

}  // namespace

Gateway::Gateway(Node& node) : node_(node), server_(std::make_unique<httplib::Server>()) {
    register_routes();
}

Gateway::~Gateway() {
    stop();
}

void Gateway::register_routes() {
    auto& svr = *server_;

    svr.Post("/issueCredential", [this](const httplib::Request& req, httplib::Response& res) {
        auto principal = require_auth(node_, req, res);
        if (!principal) return;
        if ((principal->permissionBits & permissions::kIssue) == 0) {
            send_error(res, 403, "ISSUE permission required");
            return;
        }
        auto parsed = validate_issue_request(to_bytes(req.body));
        if (!parsed.ok()) {
            json body;
            body["error"] = "schema violation";
            body["violations"] = violations_to_json(parsed.violations);
            send_json(res, 400, body);
            return;
        }
        if (!node_.consensus_available()) {
            send_error(res, 503, "consensus unavailable");
            return;
        }
        const IdentityRecord* identity = node_.state().registry.by_sub(principal->sub);
        if (!identity || identity->keyId.empty()) {
            send_error(res, 403, "no signing key registered for subject");
            return;
        }
        SystemRng rng;
        auto outcome = node_.issue(*parsed.request, identity->keyId, rng);
        if (!outcome.ok) {
            if (outcome.error == "consensus unavailable") {
                send_error(res, 503, outcome.error);
            } else if (outcome.error == to_string(TxInvalidReason::DuplicateId)) {
                send_error(res, 409, outcome.error);
            } else {
                json body;
                body["error"] = outcome.error;
                if (!outcome.violations.empty()) {
                    body["violations"] = violations_to_json(outcome.violations);
                }
                send_json(res, 400, body);
            }
            return;
        }
        json body;
        body["credentialId"] = outcome.document.id;
        body["txId"] = hash_hex(outcome.txId);
        body["height"] = outcome.height;
        body["contentAddress"] = outcome.contentAddress.hex();
        body["document"] = document_to_json(outcome.document);
        send_json(res, 201, body);
    });

    svr.Post("/verifyCredential", [this](const httplib::Request& req, httplib::Response& res) {
        json parsed = json::parse(req.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            send_error(res, 400, "malformed JSON body");
            return;
        }
        // Id-only query: existence + revocation + anchored status.
        if (parsed.contains("credentialId") && parsed.size() == 1) {
            if (!parsed["credentialId"].is_string()) {
                send_error(res, 400, "credentialId must be a string");
                return;
            }
            auto result = node_.verify_by_id(parsed["credentialId"].get<std::string>());
            if (!result.known) {
                send_error(res, 404, "unknown credential id");
                return;
            }
            send_json(res, 200, verify_result_to_json(result, node_.now()));
            return;
        }
        auto result = node_.verify_document(to_bytes(req.body));
        send_json(res, 200, verify_result_to_json(result, node_.now()));
    });

    svr.Post("/revokeCredential", [this](const httplib::Request& req, httplib::Response& res) {
        auto principal = require_auth(node_, req, res);
        if (!principal) return;
        if ((principal->permissionBits & permissions::kRevoke) == 0) {
            send_error(res, 403, "REVOKE permission required");
            return;
        }
        json parsed = json::parse(req.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() ||
            !parsed.contains("credentialId") || !parsed["credentialId"].is_string()) {
            send_error(res, 400, "credentialId required");
            return;
        }
        const IdentityRecord* identity = node_.state().registry.by_sub(principal->sub);
        if (!identity) {
            send_error(res, 403, "no signing key registered for subject");
            return;
        }
        if (!node_.consensus_available()) {
            send_error(res, 503, "consensus unavailable");
            return;
        }
        auto outcome =
            node_.revoke(parsed["credentialId"].get<std::string>(), identity->keyId);
        switch (outcome.status) {
            case Node::RevokeOutcome::Status::UnknownId:
                send_error(res, 404, "unknown credential id");
                return;
            case Node::RevokeOutcome::Status::Unavailable:
                send_error(res, 503, "consensus unavailable");
                return;
            case Node::RevokeOutcome::Status::Rejected:
                send_error(res, 403, to_string(outcome.validity.reason));
                return;
            case Node::RevokeOutcome::Status::AlreadyRevoked: {
                json body;
                body["revoked"] = true;
                body["alreadyRevoked"] = true;
                send_json(res, 200, body);
                return;
            }
            case Node::RevokeOutcome::Status::Revoked: {
                json body;
                body["revoked"] = true;
                body["alreadyRevoked"] = false;
                body["txId"] = hash_hex(outcome.txId);
                body["auditSeq"] = outcome.auditSeq;
                send_json(res, 200, body);
                return;
            }
        }
    });

    svr.Post("/consent", [this](const httplib::Request& req, httplib::Response& res) {
        auto principal = require_auth(node_, req, res);
        if (!principal) return;
        json parsed = json::parse(req.body, nullptr, false);
        std::string action = parsed.is_object() ? parsed.value("action", "") : "";
        Node::ConsentAction consentAction;
        if (action == "give") {
            consentAction = Node::ConsentAction::Give;
        } else if (action == "withdraw") {
            consentAction = Node::ConsentAction::Withdraw;
        } else if (action == "delete") {
            consentAction = Node::ConsentAction::Delete;
        } else {
            send_error(res, 400, "action must be give, withdraw or delete");
            return;
        }
        const IdentityRecord* identity = node_.state().registry.by_sub(principal->sub);
        if (!identity) {
            send_error(res, 403, "no signing key registered for subject");
            return;
        }
        if (!node_.consensus_available()) {
            send_error(res, 503, "consensus unavailable");
            return;
        }
        auto outcome = node_.consent(consentAction, identity->keyId);
        if (!outcome.ok) {
            // The consent-machine guards surface as conflicts.
            send_error(res, 409, to_string(outcome.validity.reason));
            return;
        }
        json body;
        body["action"] = action;
        body["subject"] = principal->subjectDid;
        body["txId"] = hash_hex(outcome.txId);
        body["height"] = outcome.height;
        send_json(res, 200, body);
    });

    svr.Get("/audit", [this](const httplib::Request& req, httplib::Response& res) {
        auto principal = require_auth(node_, req, res);
        if (!principal) return;
        AuditFilter filter;
        if (req.has_param("eventName")) {
            auto name = parse_audit_event_name(req.get_param_value("eventName"));
            if (!name) {
                send_error(res, 400, "unknown eventName");
                return;
            }
            filter.eventName = name;
        }
        if (req.has_param("subject")) filter.subject = req.get_param_value("subject");
        if (req.has_param("fromHeight")) {
            filter.fromHeight = std::stoull(req.get_param_value("fromHeight"));
        }
        if (req.has_param("toHeight")) {
            filter.toHeight = std::stoull(req.get_param_value("toHeight"));
        }
        size_t limit = 1000;
        if (req.has_param("limit")) limit = std::stoull(req.get_param_value("limit"));
        json events = json::array();
        for (const auto& event : audit_query(node_.state(), filter)) {
            if (events.size() >= limit) break;
            events.push_back(audit_event_to_json(event));
        }
        json body;
        body["events"] = std::move(events);
        send_json(res, 200, body);
    });

    svr.Get(R"(/anchors/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        uint64_t index = std::stoull(req.matches[1].str());
        auto anchor = node_.anchors().at(index);
        if (!anchor) {
            send_error(res, 404, "no such anchor");
            return;
        }
        send_json(res, 200, anchor_to_json(*anchor));
    });
}

int Gateway::start(const std::string& host) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) return -1;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Gateway::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

bool Gateway::listen(const std::string& host, int port) {
    port_ = port;
    return server_->listen(host, port);
}

}  // namespace bacip
