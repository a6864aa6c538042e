#include "kseg/service.hpp"

#include "kseg/image_io.hpp"
#include "kseg/metrics.hpp"

// Uploads may arrive without a Content-Type (curl defaults to form encoding).
#define CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH (64 * 1024 * 1024)
#include <httplib.h>
#include <openssl/sha.h>

#include <chrono>
#include <ctime>
#include <fstream>

namespace kseg::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(bytes.data(), bytes.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char c : digest) {
        out += hex[c >> 4];
        out += hex[c & 15];
    }
    return out;
}

json encode_rle(const BinaryMask& m) {
    json rows = json::array();
    for (int y = 0; y < m.height(); ++y) {
        json runs = json::array();
        int x = 0;
        while (x < m.width()) {
            if (!m.at(x, y)) {
                ++x;
                continue;
            }
            const int start = x;
            while (x < m.width() && m.at(x, y)) ++x;
            runs.push_back({start, x - start});
        }
        rows.push_back(std::move(runs));
    }
    return {{"width", m.width()}, {"height", m.height()}, {"rows", rows}};
}

BinaryMask decode_rle(const json& j) {
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    const auto& rows = j.at("rows");
    if (!rows.is_array() || static_cast<int>(rows.size()) != h) {
        throw Error(ErrorCode::Format, "RLE row count does not match height", "rows");
    }
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (const auto& run : rows[static_cast<std::size_t>(y)]) {
            const int start = run.at(0).get<int>();
            const int len = run.at(1).get<int>();
            if (start < 0 || len < 0 || start + len > w) throw Error(ErrorCode::Format, "RLE run out of range", "rows");
            for (int x = start; x < start + len; ++x) m.set(x, y, true);
        }
    }
    return m;
}

namespace {

std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

const char* extension(ImageFormat f) { return f == ImageFormat::Png ? ".png" : ".pgm"; }

std::string job_id_for(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%08llu", static_cast<unsigned long long>(n));
    return buf;
}

json read_json(const fs::path& p) {
    const auto bytes = read_file(p);
    return json::parse(bytes.begin(), bytes.end());
}

}  // namespace

JobService::JobService(fs::path data_dir, int workers) : data_dir_(std::move(data_dir)) {
    if (workers < 1) throw Error(ErrorCode::Configuration, "workers must be >= 1", "workers");
    fs::create_directories(data_dir_ / "images");
    fs::create_directories(data_dir_ / "jobs");
    load_existing();
    for (int i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : workers_) t.join();
}

fs::path JobService::image_path(const std::string& id) const {
    if (id.size() != 64 || id.find_first_not_of("0123456789abcdef") != std::string::npos) return {};
    for (const char* ext : {".png", ".pgm"}) {
        fs::path p = data_dir_ / "images" / (id + ext);
        if (fs::exists(p)) return p;
    }
    return {};
}

fs::path JobService::job_dir(const std::string& id) const { return data_dir_ / "jobs" / id; }

UploadResult JobService::upload_image(std::span<const std::uint8_t> bytes) {
    const ImageFormat format = detect_format(bytes);
    const Gray8 img = decode_gray8(bytes);
    UploadResult r;
    r.id = sha256_hex(bytes);
    r.width = img.width;
    r.height = img.height;
    r.format = format == ImageFormat::Png ? "png" : "pgm";
    std::lock_guard lock(image_mutex_);
    const fs::path p = data_dir_ / "images" / (r.id + extension(format));
    if (!fs::exists(p)) {
        const fs::path tmp = p.string() + ".tmp";
        write_file(tmp, bytes);
        fs::rename(tmp, p);
        r.created = true;
    }
    return r;
}

std::pair<std::vector<std::uint8_t>, std::string> JobService::image_bytes(const std::string& id) const {
    const fs::path p = image_path(id);
    if (p.empty()) throw Error(ErrorCode::NotFound, "unknown image: " + id, "image_id");
    return {read_file(p), p.extension() == ".png" ? "image/png" : "image/x-portable-graymap"};
}

std::string JobService::submit_job(const json& request) {
    if (!request.is_object()) throw Error(ErrorCode::Validation, "request must be a JSON object");
    for (const auto& [key, v] : request.items()) {
        if (key != "image_id" && key != "points" && key != "config" && key != "truth_id") {
            throw Error(ErrorCode::Validation, "unknown request field: " + key, key);
        }
    }
    if (!request.contains("image_id") || !request["image_id"].is_string()) {
        throw Error(ErrorCode::Validation, "image_id is required", "image_id");
    }
    Job job;
    job.image_id = request["image_id"].get<std::string>();
    const fs::path img_path = image_path(job.image_id);
    if (img_path.empty()) throw Error(ErrorCode::NotFound, "unknown image: " + job.image_id, "image_id");
    const Gray8 img = decode_gray8(read_file(img_path));

    if (!request.contains("points")) throw Error(ErrorCode::Validation, "points are required", "points");
    job.points = parse_points_json(request["points"], "points");
    if (job.points.points.size() < 3) throw Error(ErrorCode::Validation, "at least 3 points are required", "points");
    for (std::size_t i = 0; i < job.points.points.size(); ++i) {
        const auto& p = job.points.points[i];
        if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= img.width - 1.0 && p.y <= img.height - 1.0)) {
            throw Error(ErrorCode::Validation, "point outside the image", "points[" + std::to_string(i) + "]");
        }
    }
    if (request.contains("config")) apply_config_json(job.config, request["config"], "config");
    job.config.validate();

    if (request.contains("truth_id")) {
        if (!request["truth_id"].is_string()) throw Error(ErrorCode::Validation, "truth_id must be a string", "truth_id");
        const std::string tid = request["truth_id"].get<std::string>();
        const fs::path tp = image_path(tid);
        if (tp.empty()) throw Error(ErrorCode::NotFound, "unknown truth image: " + tid, "truth_id");
        BinaryMask truth;
        try {
            truth = decode_mask(read_file(tp));
        } catch (const Error& e) {
            throw Error(ErrorCode::Validation, std::string("truth is not a binary mask: ") + e.what(), "truth_id");
        }
        if (truth.width() != img.width || truth.height() != img.height) {
            throw Error(ErrorCode::Validation, "truth mask size differs from the image", "truth_id");
        }
        job.truth_id = tid;
    }

    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = job_id_for(next_job_++);
        job.id = id;
        job.status = "queued";
        job.created_at = now_iso();
        persist(job);
        jobs_.emplace(id, std::move(job));
        queue_.push_back(id);
    }
    queue_cv_.notify_one();
    return id;
}

json JobService::document(const Job& job) const {
    json d{{"id", job.id},
           {"status", job.status},
           {"image_id", job.image_id},
           {"points", points_to_json(job.points)},
           {"config", config_to_json(job.config)},
           {"created_at", job.created_at}};
    if (job.truth_id) d["truth_id"] = *job.truth_id;
    if (!job.started_at.empty()) d["started_at"] = job.started_at;
    if (!job.finished_at.empty()) d["finished_at"] = job.finished_at;
    if (job.status == "done") d["result"] = job.result;
    if (job.status == "failed") d["error"] = job.error;
    return d;
}

void JobService::persist(Job& job) {
    const json d = document(job);
    const std::string text = d.dump(2) + "\n";
    if (job.status == "done" || job.status == "failed") job.frozen = text;
    const fs::path dir = job_dir(job.id);
    fs::create_directories(dir);
    const fs::path tmp = dir / "job.json.tmp";
    write_text(tmp, text);
    fs::rename(tmp, dir / "job.json");
}

void JobService::load_existing() {
    std::uint64_t max_seen = 0;
    for (const auto& entry : fs::directory_iterator(data_dir_ / "jobs")) {
        const fs::path doc = entry.path() / "job.json";
        if (!fs::exists(doc)) continue;
        json d;
        try {
            d = read_json(doc);
        } catch (const std::exception&) {
            continue;
        }
        Job job;
        job.id = d.value("id", entry.path().filename().string());
        job.image_id = d.value("image_id", "");
        if (d.contains("truth_id")) job.truth_id = d["truth_id"].get<std::string>();
        job.points = parse_points_json(d.at("points"));
        apply_config_json(job.config, d.at("config"));
        job.status = d.value("status", "failed");
        job.created_at = d.value("created_at", "");
        job.started_at = d.value("started_at", "");
        job.finished_at = d.value("finished_at", "");
        if (d.contains("result")) job.result = d["result"];
        if (d.contains("error")) job.error = d["error"];
        if (job.status == "running") {
            job.status = "failed";
            job.finished_at = now_iso();
            job.error = {{"code", "interrupted"}, {"message", "service stopped while the job was running"}};
            persist(job);
        } else if (job.status == "queued") {
            queue_.push_back(job.id);
        } else {
            const auto b = read_file(doc);
            job.frozen.assign(b.begin(), b.end());
        }
        if (job.id.rfind("job-", 0) == 0) {
            try {
                max_seen = std::max<std::uint64_t>(max_seen, std::stoull(job.id.substr(4)));
            } catch (const std::exception&) {
            }
        }
        jobs_.emplace(job.id, std::move(job));
    }
    std::sort(queue_.begin(), queue_.end());
    next_job_ = max_seen + 1;
}

std::string JobService::job_document(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job: " + id, "job_id");
    if (!it->second.frozen.empty()) return it->second.frozen;
    return document(it->second).dump(2) + "\n";
}

std::vector<std::uint8_t> JobService::job_mask_png(const std::string& id) const {
    {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job: " + id, "job_id");
        if (it->second.status != "done") {
            throw Error(ErrorCode::NotReady, "job is " + it->second.status + "; no mask available", "job_id");
        }
    }
    return read_file(job_dir(id) / "mask.png");
}

std::vector<std::uint8_t> JobService::gabor_png(const std::string& image_id, const json& overrides) {
    const fs::path p = image_path(image_id);
    if (p.empty()) throw Error(ErrorCode::NotFound, "unknown image: " + image_id, "image_id");
    SegConfig cfg;
    apply_config_json(cfg, overrides);
    const std::string key = "s" + std::to_string(cfg.gabor.num_scales) + "_d" + std::to_string(cfg.gabor.num_directions);
    const fs::path cached = data_dir_ / "features" / (image_id + "_gabor_" + key + ".png");
    if (fs::exists(cached)) return read_file(cached);
    const GrayImage img = load_image(p);
    const FeatureMap f = gabor_feature_map(img, cfg.gabor);
    auto png = encode_png(quantize(GrayImage(f.width, f.height, f.data)));
    const fs::path tmp = cached.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_file(tmp, png);
    fs::rename(tmp, cached);
    return png;
}

void JobService::wait_idle() {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [&] { return queue_.empty() && busy_ == 0; });
}

void JobService::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            ++busy_;
        }
        execute(id);
        {
            std::lock_guard lock(mutex_);
            --busy_;
        }
        idle_cv_.notify_all();
    }
}

void JobService::execute(const std::string& id) {
    Job snapshot;
    {
        std::lock_guard lock(mutex_);
        Job& job = jobs_.at(id);
        job.status = "running";
        job.started_at = now_iso();
        persist(job);
        snapshot = job;
    }

    json result;
    json error;
    try {
        const fs::path img_path = image_path(snapshot.image_id);
        if (img_path.empty()) throw Error(ErrorCode::NotFound, "image disappeared: " + snapshot.image_id, "image_id");
        const GrayImage img = load_image(img_path);
        const SegResult r = run(img, snapshot.points, snapshot.config);
        const fs::path mask_path = job_dir(id) / "mask.png";
        write_file(mask_path, encode_mask_png(r.mask));

        RunManifest manifest;
        manifest.command = "service-job";
        manifest.inputs["image"] = fs::absolute(img_path).string();
        manifest.init = snapshot.points;
        manifest.config = snapshot.config;
        manifest.outputs["mask"] = fs::absolute(mask_path).string();

        json diag = json::array();
        for (const auto& d : r.diagnostics) {
            diag.push_back({{"band_size", d.band_size},
                            {"changed_pixels", d.changed_pixels},
                            {"changed_fraction", d.changed_fraction()},
                            {"cut_value", d.cut_value}});
        }
        result = {{"mask", encode_rle(r.mask)},
                  {"mask_url", "/jobs/" + id + "/mask.png"},
                  {"contour", pixels_to_json(r.contour)},
                  {"iterations", r.iterations_run},
                  {"converged", r.converged},
                  {"diagnostics", diag},
                  {"manifest", manifest.to_json()}};
        if (snapshot.truth_id) {
            const BinaryMask truth = decode_mask(read_file(image_path(*snapshot.truth_id)));
            result["metrics"] = metrics_to_json(evaluate(r.mask, truth));
        }
    } catch (const Error& e) {
        error = error_to_json(e);
    } catch (const std::exception& e) {
        error = {{"code", "internal_error"}, {"message", e.what()}};
    }

    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(id);
    job.finished_at = now_iso();
    if (error.is_null()) {
        job.status = "done";
        job.result = std::move(result);
    } else {
        job.status = "failed";
        job.error = std::move(error);
    }
    persist(job);
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
    JobService& service;
    httplib::Server server;
    explicit Impl(JobService& s) : service(s) {}
};

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Format: return 415;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::NotReady: return 409;
        case ErrorCode::Validation:
        case ErrorCode::Configuration:
        case ErrorCode::DegenerateContour:
        case ErrorCode::OutOfBounds:
        case ErrorCode::DimensionMismatch: return 400;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& j) {
    res.status = status;
    res.set_content(j.dump(2) + "\n", "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const Error& e) {
        send_json(res, status_for(e.code()), error_to_json(e));
    } catch (const json::exception& e) {
        send_json(res, 400, {{"code", "validation_error"}, {"message", e.what()}});
    } catch (const std::exception& e) {
        send_json(res, 500, {{"code", "internal_error"}, {"message", e.what()}});
    }
}

json query_overrides(const httplib::Request& req) {
    json o = json::object();
    for (const char* key : {"scales", "directions"}) {
        if (!req.has_param(key)) continue;
        try {
            o[key] = std::stoi(req.get_param_value(key));
        } catch (const std::exception&) {
            throw Error(ErrorCode::Validation, "expected an integer", key);
        }
    }
    return o;
}

}  // namespace

HttpServer::HttpServer(JobService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    JobService& svc = service;
    srv.set_payload_max_length(64 * 1024 * 1024);

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"version", kToolkitVersion}});
    });

    srv.Post("/images", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
            const UploadResult r = svc.upload_image(bytes);
            send_json(res, r.created ? 201 : 200,
                      {{"id", r.id}, {"width", r.width}, {"height", r.height}, {"format", r.format}});
        });
    });

    srv.Get(R"(/images/([0-9a-f]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto [bytes, mime] = svc.image_bytes(req.matches[1]);
            res.status = 200;
            res.set_content(std::string(bytes.begin(), bytes.end()), mime);
        });
    });

    srv.Get(R"(/images/([0-9a-f]+)/features/gabor\.png)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto png = svc.gabor_png(req.matches[1], query_overrides(req));
            res.status = 200;
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });
    });

    srv.Post("/jobs", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::parse_error& e) {
                throw Error(ErrorCode::Validation, std::string("request body is not valid JSON: ") + e.what());
            }
            const std::string id = svc.submit_job(body);
            send_json(res, 202, {{"id", id}, {"status", "queued"}, {"url", "/jobs/" + id}});
        });
    });

    srv.Get(R"(/jobs/([A-Za-z0-9-]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            res.status = 200;
            res.set_content(svc.job_document(req.matches[1]), "application/json");
        });
    });

    srv.Get(R"(/jobs/([A-Za-z0-9-]+)/mask\.png)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto png = svc.job_mask_png(req.matches[1]);
            res.status = 200;
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });
    });

    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            send_json(res, res.status, {{"code", res.status == 404 ? "not_found" : "http_error"},
                                        {"message", httplib::status_message(res.status)}});
        }
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace kseg::service
