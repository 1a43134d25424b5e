#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <thread>

#include "ccid/io.hpp"
#include "ccid/metrics.hpp"
#include "ccid/models/confidence.hpp"
#include "ccid/nn/serialize.hpp"
#include "ccid/service.hpp"
#include "ccid/synthetic.hpp"
#include "test_support.hpp"

using namespace ccid;
using nlohmann::json;

namespace {

// Service bound to an ephemeral localhost port for the lifetime of the object.
class TestServer {
public:
    explicit TestServer(LoadedModels models, service::ServiceOptions options = {})
        : service_(std::move(models), options) {
        service_.mount(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }
    const service::Service& service() const { return service_; }

private:
    service::Service service_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string png_bytes(const Image& img) {
    const auto bytes = encode_png(img);
    return {bytes.begin(), bytes.end()};
}

Image decode(const std::string& body) {
    return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

httplib::MultipartFormData file_part(const std::string& name, const std::string& content) {
    return {name, content, name + ".png", "image/png"};
}

httplib::MultipartFormData field_part(const std::string& name, const std::string& value) {
    return {name, value, "", ""};
}

std::string create(httplib::Client& c, const httplib::MultipartFormDataItems& items) {
    auto res = c.Post("/api/sessions", items);
    REQUIRE(res);
    REQUIRE(res->status == 200);
    return json::parse(res->body).at("id").get<std::string>();
}

std::string get_ok(httplib::Client& c, const std::string& path) {
    auto res = c.Get(path);
    REQUIRE(res);
    INFO(path << " -> " << res->body);
    REQUIRE(res->status == 200);
    return res->body;
}

int status_of(httplib::Client& c, const std::string& path) {
    auto res = c.Get(path);
    REQUIRE(res);
    return res->status;
}

// Small random denoiser, so dnn differs from the input.
LoadedModels small_models(bool with_confidence) {
    LoadedModels m;
    m.denoiser_spec = {3, 4};
    m.denoiser = models::init_denoiser(m.denoiser_spec, 3);
    if (with_confidence) m.confidence = models::confidence_network().init(5);
    return m;
}

}  // namespace

TEST_CASE("upload validation") {
    TestServer server(small_models(false), {32, 1u << 20});
    auto c = server.client();
    const Image img = synthetic_scene(64, 48, 1);

    SUBCASE("a PNG upload reports its dimensions") {
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{file_part("image", png_bytes(img))});
        REQUIRE(res);
        CHECK(res->status == 200);
        const json body = json::parse(res->body);
        CHECK(body.at("height") == 64);
        CHECK(body.at("width") == 48);
        CHECK(body.at("has_ground_truth") == false);
        CHECK(body.at("confidence_rows") == 8);
        CHECK(body.at("confidence_cols") == 6);
    }
    SUBCASE("binary PGM is accepted too") {
        const auto pgm = encode_pgm(img);
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{
                                               {"image", std::string(pgm.begin(), pgm.end()), "a.pgm", ""}});
        REQUIRE(res);
        CHECK(res->status == 200);
    }
    SUBCASE("corrupt payload is 400") {
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{file_part("image", "not an image")});
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(json::parse(res->body).contains("error"));
    }
    SUBCASE("missing image part is 400") {
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{field_part("sigma", "25")});
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("mismatched ground truth is 400") {
        auto res = c.Post("/api/sessions",
                          httplib::MultipartFormDataItems{file_part("image", png_bytes(img)),
                                                          file_part("clean", png_bytes(Image(8, 8)))});
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("bad noise spec is 400") {
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{file_part("image", png_bytes(img)),
                                                                           field_part("sigma", "loud")});
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("oversized body is 413") {
        auto res = c.Post("/api/sessions", httplib::MultipartFormDataItems{
                                               file_part("image", std::string((1u << 20) + 10, 'x'))});
        REQUIRE(res);
        CHECK(res->status == 413);
    }
    SUBCASE("unknown session is 404") {
        CHECK(status_of(c, "/api/sessions/abc123/fused") == 404);
        CHECK(status_of(c, "/api/sessions/abc123") == 404);
    }
}

TEST_CASE("AWGN sigma=25 upload scores about 20.17 dB") {
    TestServer server(small_models(false));
    auto c = server.client();
    const double analytic = 20.0 * std::log10(255.0 / 25.0);
    CHECK(analytic == doctest::Approx(20.17).epsilon(1e-3));
    for (std::uint64_t k = 0; k < 3; ++k) {
        const Image clean = synthetic_scene(256, 256, 40 + k);
        const std::string id = create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "25"),
                                          field_part("seed", std::to_string(k))});
        const json metrics = json::parse(get_ok(c, "/api/sessions/" + id + "/metrics?image=noisy"));
        CHECK(std::abs(metrics.at("psnr").get<double>() - analytic) < 0.3);

        // Endpoints of the w grid match the raw images.
        const json at0 = json::parse(get_ok(c, "/api/sessions/" + id + "/metrics?w=0&method=dwt"));
        const Image reliable = reliable_denoise(add_noise(decode(png_bytes(clean)), {NoiseKind::gaussian, 25, k}),
                                                ReliableFilterSpec{});
        CHECK(at0.at("psnr").get<double>() == doctest::Approx(psnr(reliable, decode(png_bytes(clean)))));
        const json rel = json::parse(get_ok(c, "/api/sessions/" + id + "/metrics?image=reliable"));
        CHECK(rel.at("psnr") == at0.at("psnr"));
        const json dnn = json::parse(get_ok(c, "/api/sessions/" + id + "/metrics?image=dnn"));
        const json at1 = json::parse(get_ok(c, "/api/sessions/" + id + "/metrics?w=1&method=dct"));
        CHECK(dnn == at1);
    }
}

TEST_CASE("fusion endpoints, caching and determinism") {
    TestServer server(small_models(true));
    auto c = server.client();
    const Image clean = synthetic_scene(64, 64, 7);
    const std::string id =
        create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "30"), field_part("seed", "4")});
    const std::string base = "/api/sessions/" + id;

    const std::string reliable = get_ok(c, base + "/reliable");
    const std::string dnn = get_ok(c, base + "/dnn");
    CHECK(reliable != dnn);
    for (const char* method : {"dct", "dwt", "dwt_corr"}) {
        CAPTURE(method);
        CHECK(get_ok(c, base + "/fused?w=0&method=" + method) == reliable);
        CHECK(get_ok(c, base + "/fused?w=1&method=" + method) == dnn);
    }

    SUBCASE("changing only w never re-runs the models") {
        const service::CallCounts before = server.service().counts();
        CHECK(before.denoiser == 1);
        CHECK(before.reliable == 1);
        CHECK(before.confidence == 0);
        for (double w : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            (void)get_ok(c, base + "/fused?method=dct&w=" + std::to_string(w));
            (void)get_ok(c, base + "/fused?method=dwt&guided=true&w=" + std::to_string(w));
            (void)get_ok(c, base + "/metrics?method=dwt&w=" + std::to_string(w));
        }
        const service::CallCounts after = server.service().counts();
        CHECK(after.denoiser == 1);
        CHECK(after.reliable == 1);
        CHECK(after.confidence == 1);
        CHECK(after.fusion == before.fusion + 15);

        // A different reliable filter is a new artifact set, but the same
        // filter asked again is not.
        (void)get_ok(c, base + "/fused?filter=bilateral&w=0.5");
        (void)get_ok(c, base + "/fused?filter=bilateral&w=0.6");
        CHECK(server.service().counts().reliable == 2);
        CHECK(server.service().counts().denoiser == 2);
    }
    SUBCASE("responses are deterministic") {
        const std::string a = get_ok(c, base + "/fused?method=dwt&w=0.4&guided=1&threshold=0.6");
        const std::string b = get_ok(c, base + "/fused?method=dwt&w=0.4&guided=1&threshold=0.6");
        CHECK(a == b);
        const std::string id2 =
            create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "30"), field_part("seed", "4")});
        CHECK(get_ok(c, "/api/sessions/" + id2 + "/fused?method=dwt&w=0.4&guided=1&threshold=0.6") == a);
        CHECK(get_ok(c, "/api/sessions/" + id2 + "/noisy") == get_ok(c, base + "/noisy"));
    }
    SUBCASE("fused image matches a local recomputation") {
        const Image noisy = add_noise(decode(png_bytes(clean)), {NoiseKind::gaussian, 30, 4});
        const LoadedModels m = small_models(false);
        const Artifacts a = denoise_artifacts(noisy, ReliableFilterSpec{}, m);
        FusionParams p;
        p.method = FusionMethod::dwt;
        p.weight = 0.35;
        CHECK(get_ok(c, base + "/fused?method=dwt&w=0.35") == png_bytes(fuse(a.reliable, a.dnn, p)));
        const json metrics = json::parse(get_ok(c, base + "/metrics?method=dwt&w=0.35"));
        const QualityScores q = score(fuse(a.reliable, a.dnn, p), decode(png_bytes(clean)));
        CHECK(metrics.at("psnr").get<double>() == doctest::Approx(q.psnr).epsilon(1e-12));
        CHECK(metrics.at("ssim").get<double>() == doctest::Approx(q.ssim).epsilon(1e-12));
        CHECK(metrics.at("mse").get<double>() == doctest::Approx(q.mse).epsilon(1e-12));
    }
    SUBCASE("bad parameters are 422") {
        CHECK(status_of(c, base + "/fused?w=1.5") == 422);
        CHECK(status_of(c, base + "/fused?w=abc") == 422);
        CHECK(status_of(c, base + "/fused?method=fft") == 422);
        CHECK(status_of(c, base + "/fused?guided=maybe") == 422);
        CHECK(status_of(c, base + "/fused?levels=0") == 422);
        CHECK(status_of(c, base + "/confidence?format=bmp") == 422);
        CHECK(status_of(c, base + "/metrics?image=clean") == 422);
    }
    SUBCASE("other image endpoints") {
        CHECK(decode(get_ok(c, base + "/clean")) == decode(png_bytes(clean)));
        const Image residual = decode(get_ok(c, base + "/residual"));
        CHECK(residual.height() == 64);
        const std::string err = get_ok(c, base + "/error?w=0.5");
        CHECK(decode_rgb_png(std::span(reinterpret_cast<const std::uint8_t*>(err.data()), err.size())).width == 64);
    }
}

TEST_CASE("confidence endpoint") {
    const Image clean = synthetic_scene(60, 44, 9);

    SUBCASE("grid shape, range and PNG round trip") {
        TestServer server(small_models(true));
        auto c = server.client();
        const std::string id = create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "20")});
        const json grid = json::parse(get_ok(c, "/api/sessions/" + id + "/confidence?format=json"));
        CHECK(grid.at("gh") == 8);
        CHECK(grid.at("gw") == 6);
        ConfidenceMap map(8, 6);
        map.values = grid.at("values").get<std::vector<double>>();
        REQUIRE(map.values.size() == 48);
        for (double v : map.values) CHECK((v >= 0.0 && v <= 1.0));

        const std::string png = get_ok(c, "/api/sessions/" + id + "/confidence?format=png&threshold=0.5");
        const RgbImage rgb = decode_rgb_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
        CHECK(rgb.height == 64);
        CHECK(rgb.width == 48);
        const ConfidenceMap back = decode_confidence_colors(rgb, 0.5);
        for (std::size_t i = 0; i < map.values.size(); ++i) CHECK(std::abs(back.values[i] - map.values[i]) < 1.0 / 255.0);
        CHECK(server.service().counts().confidence == 1);
    }
    SUBCASE("flat confidence makes guided DWT equal unguided patch-wise DWT") {
        LoadedModels m = small_models(true);
        m.confidence->at("head.weight").fill(0.0f);
        m.confidence->at("head.bias").fill(std::log(4.0f));
        TestServer server(m);
        auto c = server.client();
        const std::string id = create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "20")});
        const json grid = json::parse(get_ok(c, "/api/sessions/" + id + "/confidence"));
        const double t = grid.at("values")[0].get<double>();
        CHECK(t == doctest::Approx(0.8).epsilon(1e-6));

        const Image noisy = add_noise(decode(png_bytes(clean)), {NoiseKind::gaussian, 20, 0});
        const Artifacts a = denoise_artifacts(noisy, ReliableFilterSpec{}, m);
        FusionParams p;
        p.method = FusionMethod::dwt;
        for (double w : {0.25, 0.5, 0.75}) {
            p.weight = w;
            std::ostringstream q;
            q.precision(17);
            q << "/api/sessions/" << id << "/fused?method=dwt&guided=true&w=" << w << "&threshold=" << t;
            CHECK(get_ok(c, q.str()) == png_bytes(fuse_dwt_patchwise(a.reliable, a.dnn, p)));
        }
    }
    SUBCASE("no confidence model is 503, and guided fusion needs it too") {
        TestServer server(small_models(false));
        auto c = server.client();
        const std::string id = create(c, {file_part("image", png_bytes(clean)), field_part("sigma", "20")});
        CHECK(status_of(c, "/api/sessions/" + id + "/confidence") == 503);
        CHECK(status_of(c, "/api/sessions/" + id + "/fused?guided=true") == 503);
        CHECK(status_of(c, "/api/sessions/" + id + "/fused?guided=false") == 200);
    }
}

TEST_CASE("metrics need ground truth") {
    TestServer server(small_models(false));
    auto c = server.client();
    const std::string id = create(c, {file_part("image", png_bytes(synthetic_scene(32, 32, 2)))});
    CHECK(status_of(c, "/api/sessions/" + id + "/metrics?w=0.5") == 409);
    CHECK(status_of(c, "/api/sessions/" + id + "/error?w=0.5") == 409);
    CHECK(status_of(c, "/api/sessions/" + id + "/clean") == 409);
    CHECK(status_of(c, "/api/sessions/" + id + "/fused?w=0.5") == 200);
}

TEST_CASE("no denoiser loaded") {
    TestServer server(LoadedModels{});
    auto c = server.client();
    const std::string id = create(c, {file_part("image", png_bytes(synthetic_scene(32, 32, 2)))});
    CHECK(status_of(c, "/api/sessions/" + id + "/noisy") == 200);
    CHECK(status_of(c, "/api/sessions/" + id + "/dnn") == 503);
}

TEST_CASE("super-resolution sessions") {
    TestServer server(small_models(true));
    auto c = server.client();
    const Image hr = synthetic_scene(64, 48, 3);
    const Image lr = resize_bicubic(hr, 16, 12);
    const std::string id = create(c, {file_part("image", png_bytes(lr)), file_part("hallucinatory", png_bytes(hr)),
                                      file_part("clean", png_bytes(hr)), field_part("mode", "super_resolution")});
    const std::string base = "/api/sessions/" + id;
    const json info = json::parse(get_ok(c, base));
    CHECK(info.at("height") == 64);
    CHECK(info.at("mode") == "super_resolution");

    const Image reliable = decode(get_ok(c, base + "/reliable"));
    CHECK(reliable.height() == 64);
    CHECK(get_ok(c, base + "/fused?w=1") == get_ok(c, base + "/dnn"));
    CHECK(get_ok(c, base + "/dnn") == png_bytes(decode(png_bytes(hr))));
    CHECK(json::parse(get_ok(c, base + "/metrics?w=1")).at("psnr") == "inf");
    CHECK(status_of(c, base + "/confidence") == 503);
    CHECK(server.service().counts().denoiser == 0);

    auto wrong = c.Post("/api/sessions",
                        httplib::MultipartFormDataItems{file_part("image", png_bytes(lr)),
                                                        file_part("hallucinatory", png_bytes(lr)),
                                                        field_part("mode", "super_resolution")});
    REQUIRE(wrong);
    CHECK(wrong->status == 400);
}

TEST_CASE("sessions are evicted least recently used first") {
    TestServer server(small_models(false), {2, 1u << 20});
    auto c = server.client();
    const std::string png = png_bytes(synthetic_scene(16, 16, 1));
    const std::string a = create(c, {file_part("image", png)});
    const std::string b = create(c, {file_part("image", png)});
    CHECK(status_of(c, "/api/sessions/" + a) == 200);  // a is now the most recent
    const std::string d = create(c, {file_part("image", png)});
    CHECK(server.service().session_count() == 2);
    CHECK(status_of(c, "/api/sessions/" + a) == 200);
    CHECK(status_of(c, "/api/sessions/" + b) == 404);
    CHECK(status_of(c, "/api/sessions/" + d) == 200);

    auto del = c.Delete("/api/sessions/" + a);
    REQUIRE(del);
    CHECK(del->status == 204);
    CHECK(status_of(c, "/api/sessions/" + a) == 404);
}

TEST_CASE("concurrent requests on distinct sessions") {
    TestServer server(small_models(true));
    const std::string png = png_bytes(synthetic_scene(48, 48, 5));
    std::vector<std::string> ids;
    {
        auto c = server.client();
        for (int i = 0; i < 4; ++i) ids.push_back(create(c, {file_part("image", png), field_part("sigma", "15")}));
    }
    std::vector<std::string> results(ids.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        workers.emplace_back([&, i] {
            auto c = server.client();
            for (double w : {0.2, 0.4, 0.6}) {
                auto res = c.Get("/api/sessions/" + ids[i] + "/fused?guided=1&method=dct&w=" + std::to_string(w));
                if (res && res->status == 200) results[i] = res->body;
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& r : results) {
        CHECK(!r.empty());
        CHECK(r == results[0]);
    }
    CHECK(server.service().counts().denoiser == 4);
    CHECK(server.service().counts().confidence == 4);
}
