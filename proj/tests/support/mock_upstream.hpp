#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oaisim/record.hpp"

namespace httplib {
class Server;
}

namespace oaisim::fixtures {

/// Scripted OAI-PMH data provider on 127.0.0.1 with an ephemeral port.
/// Only ListRecords is implemented.
class MockUpstream {
public:
    struct Script {
        std::size_t page_size = 50;
        /// 1-based request numbers answered with 503.
        std::set<int> fail_with_503;
        std::optional<std::string> retry_after = "1";
        /// 1-based request numbers answered with a badResumptionToken error.
        std::set<int> bad_token_on;
        /// Every page hands out this same token (loop detection).
        std::optional<std::string> constant_token;
        /// Each page after the first repeats the last record of the previous page.
        bool overlap_pages = false;
    };

    MockUpstream(std::vector<MetadataRecord> records, Script script);
    ~MockUpstream();
    MockUpstream(const MockUpstream&) = delete;
    MockUpstream& operator=(const MockUpstream&) = delete;

    std::string base_url() const;
    int requests() const { return requests_.load(); }
    std::vector<std::string> request_targets() const;
    std::string last_user_agent() const;
    std::string last_from_header() const;

private:
    std::vector<MetadataRecord> records_;
    Script script_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> targets_;
    std::string user_agent_;
    std::string from_header_;
    std::map<std::string, std::pair<std::size_t, std::vector<std::string>>> tokens_;
};

}  // namespace oaisim::fixtures
