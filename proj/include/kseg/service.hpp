#pragma once

#include "kseg/config.hpp"

#include <json.hpp>

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace kseg::service {

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Foreground runs per row: rows[y] = [[x_start, length], ...].
nlohmann::json encode_rle(const BinaryMask& m);
BinaryMask decode_rle(const nlohmann::json& j);

struct UploadResult {
    std::string id;
    bool created = false;
    int width = 0;
    int height = 0;
    std::string format;
};

/// Image store, job queue and worker pool. Everything is persisted under the
/// data directory: images/<sha256>.{png,pgm} and jobs/<id>/{job.json,mask.png}.
class JobService {
public:
    JobService(std::filesystem::path data_dir, int workers);
    ~JobService();
    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    UploadResult upload_image(std::span<const std::uint8_t> bytes);
    /// Stored bytes and their MIME type.
    std::pair<std::vector<std::uint8_t>, std::string> image_bytes(const std::string& id) const;

    /// Request: {"image_id", "points": [[x,y],...], "config": {...}?, "truth_id"?}
    std::string submit_job(const nlohmann::json& request);
    /// Serialized status document; byte-identical across fetches once the job
    /// is finished.
    std::string job_document(const std::string& id) const;
    std::vector<std::uint8_t> job_mask_png(const std::string& id) const;
    std::vector<std::uint8_t> gabor_png(const std::string& image_id, const nlohmann::json& overrides);

    /// Blocks until no job is queued or running.
    void wait_idle();

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

private:
    struct Job {
        std::string id;
        std::string image_id;
        std::optional<std::string> truth_id;
        Contour points;
        SegConfig config;
        std::string status;
        std::string created_at;
        std::string started_at;
        std::string finished_at;
        nlohmann::json result;
        nlohmann::json error;
        std::string frozen;  // serialized document once finished
    };

    std::filesystem::path image_path(const std::string& id) const;
    std::filesystem::path job_dir(const std::string& id) const;
    nlohmann::json document(const Job& job) const;
    void persist(Job& job);
    void load_existing();
    void worker_loop();
    void execute(const std::string& id);

    std::filesystem::path data_dir_;
    mutable std::mutex mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<std::string> queue_;
    std::map<std::string, Job> jobs_;
    std::uint64_t next_job_ = 1;
    int busy_ = 0;
    bool stopping_ = false;
    std::mutex image_mutex_;
    std::vector<std::thread> workers_;
};

/// HTTP front end (cpp-httplib) over a JobService.
class HttpServer {
public:
    explicit HttpServer(JobService& service);
    ~HttpServer();

    /// Binds to host:port (port 0 picks a free port). Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kseg::service
