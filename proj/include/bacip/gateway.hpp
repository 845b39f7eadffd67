#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include "bacip/jwt.hpp"
#include "bacip/node.hpp"

namespace httplib {
class Server;
}

namespace bacip {

// REST front: POST /issueCredential, /verifyCredential, /revokeCredential,
// /consent; GET /audit, /anchors/{index}. Bearer-token auth on everything
// except credential verification and the public anchor log.
class Gateway {
public:
    explicit Gateway(Node& node);
    ~Gateway();

    // Binds to an ephemeral port and serves on a background thread.
    int start(const std::string& host);
    void stop();

    // Blocks; the serve command's entry point.
    bool listen(const std::string& host, int port);

    int port() const { return port_; }

private:
    void register_routes();

    Node& node_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace bacip
