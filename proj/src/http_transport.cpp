#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "llmfrac/errors.hpp"
#include "llmfrac/generation.hpp"

namespace llmfrac {

namespace {

class HttpTransport final : public Transport {
public:
    std::string post_chat(const std::string& endpoint_url, const std::string& api_key,
                          const std::string& request_body) override {
        auto scheme_end = endpoint_url.find("://");
        if (scheme_end == std::string::npos) {
            raise(Errc::invalid_argument, "endpoint_url needs a scheme: " + endpoint_url);
        }
        auto path_begin = endpoint_url.find('/', scheme_end + 3);
        std::string base =
            path_begin == std::string::npos ? endpoint_url : endpoint_url.substr(0, path_begin);
        std::string path =
            path_begin == std::string::npos ? std::string("/") : endpoint_url.substr(path_begin);

        httplib::Client client(base);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        auto res = client.Post(path, headers, request_body, "application/json");
        if (!res) {
            raise(Errc::transport_error, "request to " + base + " failed: " +
                                             httplib::to_string(res.error()));
        }
        if (res->status == 429) raise(Errc::rate_limited, "HTTP 429 from " + base);
        if (res->status >= 500) {
            raise(Errc::transport_error, "HTTP " + std::to_string(res->status) + " from " + base);
        }
        if (res->status < 200 || res->status >= 300) {
            raise(Errc::transport_error, "HTTP " + std::to_string(res->status) + " from " + base +
                                             ": " + res->body.substr(0, 200));
        }
        return res->body;
    }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttpTransport>(); }

}  // namespace llmfrac
