#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "ccid/pipeline.hpp"

namespace httplib {
class Server;
}

namespace ccid::service {

struct ServiceOptions {
    std::size_t max_sessions = 32;                ///< least recently used sessions are evicted beyond this
    std::size_t max_upload_bytes = 16u << 20;     ///< whole request body
};

/// How often each pipeline stage has actually run since start-up.
struct CallCounts {
    std::size_t reliable = 0;
    std::size_t denoiser = 0;
    std::size_t confidence = 0;
    std::size_t fusion = 0;
};

/// HTTP facade over the pipeline. Sessions live in memory; the artifacts of
/// a session (reliable, dnn, residual, confidence) are computed on first use
/// for each reliable filter and reused by every later fusion request.
///
/// Routes (all under /api):
///   POST   /sessions                      multipart upload, returns {id, height, width, ...}
///   GET    /sessions/{id}                 session summary
///   DELETE /sessions/{id}
///   GET    /sessions/{id}/{noisy|clean|reliable|dnn|residual}   PNG
///   GET    /sessions/{id}/fused           PNG; method, w, guided, threshold, levels, mask_scale, mask_eps
///   GET    /sessions/{id}/confidence      format=json|png, threshold (png colouring)
///   GET    /sessions/{id}/metrics         {psnr, ssim, mse} against the clean upload;
///                                         image=fused (default), noisy, reliable or dnn
///   GET    /sessions/{id}/error           PNG heat map of |fused - clean|
///   GET    /health                        loaded models and call counters
class Service {
public:
    explicit Service(LoadedModels models, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Installs every route and the upload size limit on `server`.
    void mount(httplib::Server& server);

    [[nodiscard]] CallCounts counts() const;
    [[nodiscard]] std::size_t session_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving on host:port until the process is interrupted. Returns
/// false when the socket could not be bound.
bool serve(Service& service, const std::string& host, int port);

}  // namespace ccid::service
