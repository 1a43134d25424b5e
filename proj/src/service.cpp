#include "ccid/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ccid/io.hpp"
#include "ccid/metrics.hpp"

namespace ccid::service {

namespace {

using nlohmann::json;

struct HttpError {
    int status;
    std::string message;
};

[[noreturn]] void fail(int status, std::string message) { throw HttpError{status, std::move(message)}; }

struct Session {
    std::mutex mutex;
    PipelineMode mode = PipelineMode::denoise;
    Image input;
    std::optional<Image> clean;
    std::optional<Image> hallucinatory;
    int scale = 4;
    std::chrono::system_clock::time_point created_at;
    std::map<std::string, Artifacts> artifacts;  // by reliable filter key
};

std::string new_session_id() {
    static std::mutex mutex;
    static std::random_device device;
    std::lock_guard lock(mutex);
    std::ostringstream os;
    os << std::hex;
    for (int i = 0; i < 4; ++i) os << static_cast<std::uint32_t>(device());
    return os.str();
}

double parse_number(const std::string& name, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || !std::isfinite(v)) {
        throw InvalidArgument("parameter '" + name + "' is not a number: '" + text + "'");
    }
    return v;
}

int parse_int(const std::string& name, const std::string& text) {
    const double v = parse_number(name, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument("parameter '" + name + "' must be an integer");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& name, const std::string& text) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off" || text.empty()) return false;
    throw InvalidArgument("parameter '" + name + "' must be a boolean");
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

FusionParams fusion_from_query(const httplib::Request& req) {
    FusionParams p;
    if (auto v = param(req, "method")) p.method = parse_fusion_method(*v);
    if (auto v = param(req, "w")) p.weight = parse_number("w", *v);
    if (auto v = param(req, "guided")) p.guided = parse_bool("guided", *v);
    if (auto v = param(req, "threshold")) p.threshold = parse_number("threshold", *v);
    if (auto v = param(req, "levels")) p.levels = parse_int("levels", *v);
    if (auto v = param(req, "mask_scale")) p.mask_scale = parse_number("mask_scale", *v);
    if (auto v = param(req, "mask_eps")) p.mask_eps = parse_number("mask_eps", *v);
    p.validate();
    return p;
}

ReliableFilterSpec filter_from_query(const httplib::Request& req, const Session& s) {
    ReliableFilterSpec f;
    if (s.mode == PipelineMode::super_resolution) {
        f.kind = ReliableKind::bicubic_upscale;
        f.scale = s.scale;
        return f;
    }
    if (auto v = param(req, "filter")) f.kind = parse_reliable_kind(*v);
    if (auto v = param(req, "filter_sigma")) f.gaussian_sigma = parse_number("filter_sigma", *v);
    if (auto v = param(req, "sigma_space")) f.bilateral_sigma_space = parse_number("sigma_space", *v);
    if (auto v = param(req, "sigma_range")) f.bilateral_sigma_range = parse_number("sigma_range", *v);
    if (auto v = param(req, "nlm_h")) f.nlm_h = parse_number("nlm_h", *v);
    if (f.kind == ReliableKind::bicubic_upscale) {
        throw InvalidArgument("bicubic_upscale is only available in super_resolution sessions");
    }
    f.validate();
    return f;
}

json metric_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

// Black -> red -> yellow -> white ramp over |fused - clean| * gain.
RgbImage error_heatmap(const Image& a, const Image& b, double gain) {
    RgbImage out(a.height(), a.width());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const double t = std::min(1.0, std::abs(a(y, x) - b(y, x)) * gain);
            std::uint8_t* px = out.at(y, x);
            px[0] = to_byte(3.0 * t);
            px[1] = to_byte(3.0 * t - 1.0);
            px[2] = to_byte(3.0 * t - 2.0);
        }
    }
    return out;
}

void send_png(httplib::Response& res, const std::vector<std::uint8_t>& bytes) {
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
}

}  // namespace

struct Service::Impl {
    LoadedModels models;
    ServiceOptions options;

    mutable std::mutex sessions_mutex;
    std::list<std::string> lru;  // front = most recent
    std::unordered_map<std::string, std::pair<std::shared_ptr<Session>, std::list<std::string>::iterator>> sessions;

    std::atomic<std::size_t> reliable_calls{0};
    std::atomic<std::size_t> denoiser_calls{0};
    std::atomic<std::size_t> confidence_calls{0};
    std::atomic<std::size_t> fusion_calls{0};

    Impl(LoadedModels m, ServiceOptions o) : models(std::move(m)), options(o) {
        if (options.max_sessions == 0) throw InvalidArgument("max_sessions must be positive");
    }

    std::string insert(std::shared_ptr<Session> session) {
        const std::string id = new_session_id();
        std::lock_guard lock(sessions_mutex);
        lru.push_front(id);
        sessions[id] = {std::move(session), lru.begin()};
        while (sessions.size() > options.max_sessions) {
            sessions.erase(lru.back());
            lru.pop_back();
        }
        return id;
    }

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) fail(404, "unknown session '" + id + "'");
        lru.splice(lru.begin(), lru, it->second.second);
        return it->second.first;
    }

    void erase(const std::string& id) {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) fail(404, "unknown session '" + id + "'");
        lru.erase(it->second.second);
        sessions.erase(it);
    }

    // Caller holds session.mutex.
    Artifacts& artifacts(Session& s, const ReliableFilterSpec& filter) {
        const std::string key = filter.key();
        if (auto it = s.artifacts.find(key); it != s.artifacts.end()) return it->second;
        Artifacts a;
        if (s.mode == PipelineMode::super_resolution) {
            a = super_resolution_artifacts(s.input, *s.hallucinatory, filter);
            ++reliable_calls;
        } else {
            if (!models.denoiser) fail(503, "no denoiser model loaded");
            a = denoise_artifacts(s.input, filter, models);
            ++reliable_calls;
            ++denoiser_calls;
        }
        return s.artifacts.emplace(key, std::move(a)).first->second;
    }

    const ConfidenceMap& confidence(Session& s, Artifacts& a) {
        if (!a.confidence) {
            if (s.mode == PipelineMode::super_resolution) {
                fail(503, "confidence estimation is not available for super-resolution sessions");
            }
            if (!models.confidence) fail(503, "no confidence model loaded");
            a.confidence = predict_artifact_confidence(s.input, a, *models.confidence);
            ++confidence_calls;
        }
        return *a.confidence;
    }

    Image fused(Session& s, const httplib::Request& req) {
        const FusionParams params = fusion_from_query(req);
        Artifacts& a = artifacts(s, filter_from_query(req, s));
        const ConfidenceMap* conf = params.guided ? &confidence(s, a) : nullptr;
        ++fusion_calls;
        return fuse(a.reliable, a.dnn, params, conf);
    }

    const Image& clean_or_409(const Session& s) {
        if (!s.clean) fail(409, "session has no ground truth");
        return *s.clean;
    }

    json summary(const std::string& id, const Session& s) const {
        const int h = s.mode == PipelineMode::super_resolution ? s.hallucinatory->height() : s.input.height();
        const int w = s.mode == PipelineMode::super_resolution ? s.hallucinatory->width() : s.input.width();
        return {{"id", id},
                {"height", h},
                {"width", w},
                {"mode", to_string(s.mode)},
                {"has_ground_truth", s.clean.has_value()},
                {"confidence_rows", confidence_rows(h)},
                {"confidence_cols", confidence_cols(w)}};
    }

    std::shared_ptr<Session> create(const httplib::Request& req) {
        if (!req.is_multipart_form_data()) fail(400, "expected multipart/form-data upload");
        auto file = [&](const char* name) -> std::optional<Image> {
            if (!req.has_file(name)) return std::nullopt;
            const auto& part = req.get_file_value(name);
            try {
                return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(part.content.data()),
                                              part.content.size()));
            } catch (const ImageIoError& e) {
                fail(400, std::string("could not decode '") + name + "': " + e.what());
            }
        };
        auto field = [&](const char* name) -> std::optional<std::string> {
            if (!req.has_file(name)) return std::nullopt;
            return req.get_file_value(name).content;
        };

        auto s = std::make_shared<Session>();
        s->created_at = std::chrono::system_clock::now();
        std::optional<Image> image = file("image");
        if (!image) fail(400, "missing 'image' part");
        try {
            if (auto m = field("mode")) s->mode = parse_pipeline_mode(*m);
            s->clean = file("clean");
            if (s->mode == PipelineMode::super_resolution) {
                if (auto v = field("scale")) s->scale = parse_int("scale", *v);
                s->hallucinatory = file("hallucinatory");
                if (!s->hallucinatory) fail(400, "super_resolution sessions need a 'hallucinatory' upload");
                ReliableFilterSpec f;
                f.kind = ReliableKind::bicubic_upscale;
                f.scale = s->scale;
                f.validate();
                if (s->hallucinatory->height() != image->height() * s->scale ||
                    s->hallucinatory->width() != image->width() * s->scale) {
                    fail(400, "hallucinatory image must be " + std::to_string(s->scale) + "x the input size");
                }
                if (s->clean && (s->clean->height() != s->hallucinatory->height() ||
                                 s->clean->width() != s->hallucinatory->width())) {
                    fail(400, "clean image must match the high-resolution size");
                }
                s->input = std::move(*image);
                return s;
            }

            const auto noise = field("noise");
            const auto sigma = field("sigma");
            if (noise || sigma) {
                NoiseSpec spec;
                if (noise) spec.kind = parse_noise_kind(*noise);
                if (sigma) spec.sigma = parse_number("sigma", *sigma);
                if (auto seed = field("seed")) spec.seed = static_cast<std::uint64_t>(parse_int("seed", *seed));
                if (!s->clean) s->clean = *image;
                s->input = add_noise(*image, spec);
            } else {
                s->input = std::move(*image);
            }
            if (s->clean && (s->clean->height() != s->input.height() || s->clean->width() != s->input.width())) {
                fail(400, "clean image size differs from the upload");
            }
        } catch (const InvalidArgument& e) {
            fail(400, e.what());
        }
        return s;
    }

    template <typename F>
    httplib::Server::Handler wrap(F handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const HttpError& e) {
                res.status = e.status;
                res.set_content(json{{"error", e.message}}.dump(), "application/json");
            } catch (const ModelUnavailable& e) {
                res.status = 503;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const InvalidArgument& e) {
                res.status = 422;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            }
        };
    }

    void mount(httplib::Server& server) {
        server.set_payload_max_length(options.max_upload_bytes);

        server.Post("/api/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        auto session = create(req);
                        const std::string id = insert(session);
                        res.set_content(summary(id, *session).dump(), "application/json");
                    }));

        server.Get("/api/health", wrap([this](const httplib::Request&, httplib::Response& res) {
                       json body{{"denoiser", models.denoiser.has_value()},
                                 {"confidence", models.confidence.has_value()},
                                 {"sessions", session_count()},
                                 {"calls",
                                  {{"reliable", reliable_calls.load()},
                                   {"denoiser", denoiser_calls.load()},
                                   {"confidence", confidence_calls.load()},
                                   {"fusion", fusion_calls.load()}}}};
                       res.set_content(body.dump(), "application/json");
                   }));

        server.Get(R"(/api/sessions/([0-9a-f]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       auto s = find(id);
                       std::lock_guard lock(s->mutex);
                       res.set_content(summary(id, *s).dump(), "application/json");
                   }));

        server.Delete(R"(/api/sessions/([0-9a-f]+))",
                      wrap([this](const httplib::Request& req, httplib::Response& res) {
                          erase(req.matches[1]);
                          res.status = 204;
                      }));

        server.Get(R"(/api/sessions/([0-9a-f]+)/(noisy|clean|reliable|dnn|residual))",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = find(req.matches[1]);
                       const std::string what = req.matches[2];
                       std::lock_guard lock(s->mutex);
                       if (what == "noisy") return send_png(res, encode_png(s->input));
                       if (what == "clean") return send_png(res, encode_png(clean_or_409(*s)));
                       Artifacts& a = artifacts(*s, filter_from_query(req, *s));
                       if (what == "reliable") return send_png(res, encode_png(a.reliable));
                       if (what == "dnn") return send_png(res, encode_png(a.dnn));
                       // Signed residual shown around mid-grey.
                       Image shifted = a.residual;
                       for (double& v : shifted.pixels()) v += 0.5;
                       send_png(res, encode_png(shifted));
                   }));

        server.Get(R"(/api/sessions/([0-9a-f]+)/fused)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = find(req.matches[1]);
                       std::lock_guard lock(s->mutex);
                       send_png(res, encode_png(fused(*s, req)));
                   }));

        server.Get(R"(/api/sessions/([0-9a-f]+)/confidence)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = find(req.matches[1]);
                       const std::string format = param(req, "format").value_or("json");
                       if (format != "json" && format != "png") {
                           throw InvalidArgument("format must be json or png");
                       }
                       double threshold = 0.8;
                       if (auto v = param(req, "threshold")) threshold = parse_number("threshold", *v);
                       if (!(threshold > 0.0 && threshold < 1.0)) {
                           throw InvalidArgument("threshold must lie in (0, 1)");
                       }
                       std::lock_guard lock(s->mutex);
                       if (s->mode == PipelineMode::denoise && !models.confidence) {
                           fail(503, "no confidence model loaded");
                       }
                       const ConfidenceMap& conf = confidence(*s, artifacts(*s, filter_from_query(req, *s)));
                       if (format == "png") return send_png(res, encode_png(colorize_confidence(conf, threshold)));
                       json body{{"gh", conf.rows}, {"gw", conf.cols}, {"values", conf.values}};
                       res.set_content(body.dump(), "application/json");
                   }));

        server.Get(R"(/api/sessions/([0-9a-f]+)/metrics)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = find(req.matches[1]);
                       std::lock_guard lock(s->mutex);
                       const Image& clean = clean_or_409(*s);
                       const std::string which = param(req, "image").value_or("fused");
                       QualityScores q;
                       if (which == "fused") {
                           q = score(fused(*s, req), clean);
                       } else if (which == "noisy" && s->mode == PipelineMode::denoise) {
                           q = score(s->input, clean);
                       } else if (which == "reliable" || which == "dnn") {
                           const Artifacts& a = artifacts(*s, filter_from_query(req, *s));
                           q = score(which == "dnn" ? a.dnn : a.reliable, clean);
                       } else {
                           throw InvalidArgument("image must be fused, noisy, reliable or dnn");
                       }
                       json body{{"psnr", metric_json(q.psnr)}, {"ssim", q.ssim}, {"mse", q.mse}};
                       res.set_content(body.dump(), "application/json");
                   }));

        server.Get(R"(/api/sessions/([0-9a-f]+)/error)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = find(req.matches[1]);
                       double gain = 4.0;
                       if (auto v = param(req, "gain")) gain = parse_number("gain", *v);
                       if (!(gain > 0.0)) throw InvalidArgument("gain must be positive");
                       std::lock_guard lock(s->mutex);
                       const Image& clean = clean_or_409(*s);
                       send_png(res, encode_png(error_heatmap(fused(*s, req), clean, gain)));
                   }));
    }

    std::size_t session_count() const {
        std::lock_guard lock(sessions_mutex);
        return sessions.size();
    }
};

Service::Service(LoadedModels models, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(models), options)) {}

Service::~Service() = default;

void Service::mount(httplib::Server& server) { impl_->mount(server); }

CallCounts Service::counts() const {
    return {impl_->reliable_calls.load(), impl_->denoiser_calls.load(), impl_->confidence_calls.load(),
            impl_->fusion_calls.load()};
}

std::size_t Service::session_count() const { return impl_->session_count(); }

bool serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    service.mount(server);
    return server.listen(host, port);
}

}  // namespace ccid::service
