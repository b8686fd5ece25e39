#pragma once

// HTTPS transport for the wiki client. Kept apart from wiki.hpp so that
// offline users do not need OpenSSL.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <string>

#include "fame/wiki.hpp"

namespace fame::wiki {

class HttpsTransport : public Transport {
public:
    explicit HttpsTransport(std::string user_agent = "famekit/1.0 (fame metrics research tool)")
        : user_agent_(std::move(user_agent)) {}

    HttpResponse get(const std::string& host, const std::string& target) override {
        httplib::SSLClient client(host, 443);
        client.set_follow_location(true);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        const httplib::Headers headers{{"User-Agent", user_agent_}, {"Accept", "application/json"}};
        auto result = client.Get(target, headers);
        if (!result) throw NetworkError("request to " + host + " failed: " + httplib::to_string(result.error()));
        return {result->status, result->body};
    }

private:
    std::string user_agent_;
};

}  // namespace fame::wiki
