#include "kseg/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace {

kseg::service::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmentation job service", "kseg-service"};
    std::string host = env_or("KSEG_HOST", "127.0.0.1");
    int port = std::atoi(env_or("KSEG_PORT", "8080").c_str());
    std::string data_dir = env_or("KSEG_DATA_DIR", "kseg-data");
    int workers = std::atoi(env_or("KSEG_WORKERS", "2").c_str());
    app.add_option("--host", host, "bind address (env KSEG_HOST)");
    app.add_option("--port", port, "bind port, 0 picks a free one (env KSEG_PORT)");
    app.add_option("--data-dir", data_dir, "storage directory (env KSEG_DATA_DIR)");
    app.add_option("--workers", workers, "segmentation worker threads (env KSEG_WORKERS)");
    CLI11_PARSE(app, argc, argv);

    try {
        kseg::service::JobService service(data_dir, workers);
        kseg::service::HttpServer server(service);
        const int bound = server.bind(host, port);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "{\"listening\":\"" << host << ":" << bound << "\",\"data_dir\":\"" << data_dir << "\"}" << std::endl;
        server.serve();
        g_server = nullptr;
    } catch (const kseg::Error& e) {
        std::cerr << nlohmann::json{{"error", kseg::error_to_json(e)}}.dump() << "\n";
        return 1;
    }
    return 0;
}
