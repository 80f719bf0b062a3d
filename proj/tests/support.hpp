#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mamr/gateway.hpp"

namespace testing {

/// Forwards to another backend and keeps every request.
class RecordingBackend final : public mamr::TextBackend {
public:
    explicit RecordingBackend(std::shared_ptr<mamr::TextBackend> inner) : inner_(std::move(inner)) {}

    std::string complete(const mamr::GenerationRequest& r) override {
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(r);
        }
        return inner_->complete(r);
    }

    std::vector<mamr::GenerationRequest> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    std::shared_ptr<mamr::TextBackend> inner_;
    mutable std::mutex mutex_;
    std::vector<mamr::GenerationRequest> requests_;
};

/// Throws TransportError for the first `failures` calls, then answers `text`.
class FlakyBackend final : public mamr::TextBackend {
public:
    FlakyBackend(int failures, std::string text) : failures_(failures), text_(std::move(text)) {}
    std::string complete(const mamr::GenerationRequest&) override {
        ++calls;
        if (failures_-- > 0) throw mamr::TransportError("connection reset");
        return text_;
    }
    std::atomic<int> calls{0};

private:
    std::atomic<int> failures_;
    std::string text_;
};

class FailingBackend final : public mamr::TextBackend {
public:
    std::string complete(const mamr::GenerationRequest&) override {
        throw mamr::BackendError("bad request", "{\"error\":\"nope\"}");
    }
};

inline std::filesystem::path temp_dir(const std::string& name) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("mamr-test-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline mamr::RetryPolicy no_sleep() {
    mamr::RetryPolicy r;
    r.sleep = [](std::chrono::milliseconds) {};
    return r;
}

}  // namespace testing
