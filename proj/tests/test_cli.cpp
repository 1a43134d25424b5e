#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "ccid/filters.hpp"
#include "ccid/io.hpp"
#include "ccid/metrics.hpp"
#include "ccid/models/denoiser.hpp"
#include "ccid/nn/serialize.hpp"
#include "ccid/service.hpp"
#include "ccid/synthetic.hpp"
#include "test_support.hpp"

#ifndef CCID_CLI_PATH
#error "CCID_CLI_PATH must point at the ccid executable"
#endif

using namespace ccid;
namespace fs = std::filesystem;
using ccid::testing::scratch_dir;

namespace {

struct RunResult {
    int status = -1;
    std::string output;  // stdout and stderr
};

RunResult run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + CCID_CLI_PATH + std::string(" ") + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// A tiny untrained denoiser and a small corpus shared by the tests below.
struct Fixture {
    fs::path dir = scratch_dir("cli");
    fs::path corpus = dir / "corpus";
    fs::path denoiser = dir / "den.ccp";
    fs::path clean = dir / "clean.png";
    fs::path noisy = dir / "noisy.png";

    Fixture() {
        fs::create_directories(corpus);
        const auto images = synthetic_corpus(3, 48, 48, 2);
        for (std::size_t i = 0; i < images.size(); ++i) save_image(images[i], corpus / ("img" + std::to_string(i) + ".png"));
        nn::save_params(models::init_denoiser({3, 4}, 1), denoiser);
        const Image c = synthetic_scene(40, 56, 8);
        save_image(c, clean);
        save_image(add_noise(c, {NoiseKind::gaussian, 25.0, 1}), noisy);
    }
};

}  // namespace

TEST_CASE("denoise writes every artifact") {
    Fixture fx;
    const fs::path out = fx.dir / "out";
    for (const char* w : {"0", "1", "0.4"}) {
        CAPTURE(w);
        const RunResult r = run("denoise --input " + q(fx.noisy) + " --output-dir " + q(out) + " --denoiser " +
                                q(fx.denoiser) + " --method dwt --weight " + w);
        REQUIRE_MESSAGE(r.status == 0, r.output);
        for (const char* name : {"reliable.png", "dnn.png", "residual.png", "fused.png"}) {
            const Image img = load_image(out / name);
            CHECK(img.height() == 40);
            CHECK(img.width() == 56);
        }
        if (std::string(w) == "0") CHECK(slurp(out / "fused.png") == slurp(out / "reliable.png"));
        if (std::string(w) == "1") CHECK(slurp(out / "fused.png") == slurp(out / "dnn.png"));
    }
    CHECK_FALSE(fs::exists(out / "confidence.png"));
}

TEST_CASE("missing model files are named and leave nothing behind") {
    Fixture fx;
    const fs::path out = fx.dir / "missing";
    const RunResult r = run("denoise --input " + q(fx.noisy) + " --output-dir " + q(out) + " --denoiser " +
                            q(fx.dir / "absent.ccp"));
    CHECK(r.status != 0);
    CHECK(r.output.find((fx.dir / "absent.ccp").string()) != std::string::npos);
    CHECK((!fs::exists(out) || fs::is_empty(out)));

    const RunResult c = run("denoise --input " + q(fx.noisy) + " --output-dir " + q(out) + " --denoiser " +
                            q(fx.denoiser) + " --confidence " + q(fx.dir / "nope.ccp"));
    CHECK(c.status != 0);
    CHECK(c.output.find("nope.ccp") != std::string::npos);
    CHECK((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("sweep") {
    Fixture fx;
    SUBCASE("a 3-weight grid gives 3 rows") {
        const RunResult r = run("sweep --clean " + q(fx.clean) + " --noisy " + q(fx.noisy) + " --denoiser " +
                                q(fx.denoiser) + " --weights 0,0.5,1");
        REQUIRE_MESSAGE(r.status == 0, r.output);
        const auto rows = csv_rows(r.output);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == std::vector<std::string>{"w", "psnr", "ssim", "mse"});
        CHECK(rows[1][0] == "0");
        CHECK(rows[3][0] == "1");
    }
    SUBCASE("ground truth as the hallucinatory input gives a monotone PSNR column") {
        const fs::path blurred = fx.dir / "blurred.png";
        save_image(gaussian_filter(load_image(fx.clean), 4.0), blurred);
        const fs::path csv = fx.dir / "sweep.csv";
        const fs::path frames = fx.dir / "frames";
        const RunResult r = run("sweep --clean " + q(fx.clean) + " --reliable " + q(blurred) + " --hallucinatory " +
                                q(fx.clean) + " --method dct --output " + q(csv) + " --save-fused " + q(frames));
        REQUIRE_MESSAGE(r.status == 0, r.output);
        const std::string text = slurp(csv);
        const auto rows = csv_rows(text);
        REQUIRE(rows.size() == 12);
        for (std::size_t i = 2; i < rows.size(); ++i) {
            const double prev = rows[i - 1][1] == "inf" ? 1e300 : std::stod(rows[i - 1][1]);
            const double cur = rows[i][1] == "inf" ? 1e300 : std::stod(rows[i][1]);
            CHECK(cur >= prev);
        }
        CHECK(text.find("# best_psnr_w=1") != std::string::npos);
        CHECK(fs::exists(frames / "fused_0.5.png"));
        CHECK(slurp(frames / "fused_1.png") == slurp(fx.clean));
    }
    SUBCASE("missing ground truth") {
        const RunResult r = run("sweep --noisy " + q(fx.noisy) + " --denoiser " + q(fx.denoiser));
        CHECK(r.status != 0);
        CHECK(r.output.find("--clean") != std::string::npos);
    }
}

TEST_CASE("fuse matches the library") {
    Fixture fx;
    const fs::path out = fx.dir / "fused.png";
    const fs::path rel = fx.dir / "rel.png";
    save_image(gaussian_filter(load_image(fx.noisy), 1.5), rel);
    const RunResult r = run("fuse --reliable " + q(rel) + " --hallucinatory " + q(fx.clean) +
                            " --method dwt_corr --weight 0.3 --levels 2 --output " + q(out));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    FusionParams p;
    p.method = FusionMethod::dwt_corr;
    p.weight = 0.3;
    p.levels = 2;
    CHECK(encode_png(fuse(load_image(rel), load_image(fx.clean), p)) == encode_png(load_image(out)));
    CHECK(run("fuse --reliable " + q(rel) + " --hallucinatory " + q(fx.clean) + " --guided --output " + q(out)).status !=
          0);
}

TEST_CASE("dataset cache and training commands") {
    Fixture fx;
    const fs::path cache = fx.dir / "cache";
    const std::string env = "CCID_CACHE_DIR=" + q(cache);
    const std::string gen = "gen-dataset --corpus " + q(fx.corpus) + " --denoiser " + q(fx.denoiser);

    RunResult r = run(gen, env);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(r.output.find("computed=24") != std::string::npos);
    std::map<fs::path, fs::file_time_type> stamps;
    for (const auto& e : fs::directory_iterator(cache)) stamps[e.path()] = e.last_write_time();
    CHECK(stamps.size() == 24);

    r = run(gen, env);
    REQUIRE(r.status == 0);
    CHECK(r.output.find("computed=0 reused=24") != std::string::npos);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(cache)) {
        ++files;
        REQUIRE(stamps.count(e.path()) == 1);
        CHECK(stamps[e.path()] == e.last_write_time());
    }
    CHECK(files == 24);

    SUBCASE("train-denoiser loss CSV has one row per epoch") {
        const fs::path csv = fx.dir / "den_loss.csv";
        r = run("train-denoiser --corpus " + q(fx.corpus) + " --output " + q(fx.dir / "trained.ccp") +
                " --loss-csv " + q(csv) + " --epochs 3 --depth 3 --width 4 --batch-size 4");
        REQUIRE_MESSAGE(r.status == 0, r.output);
        const auto rows = csv_rows(slurp(csv));
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == std::vector<std::string>{"epoch", "loss"});
        CHECK(rows[3][0] == "3");
        CHECK(nn::load_params(fx.dir / "trained.ccp").size() == 6);
    }
    SUBCASE("train-confidence reproduces its seeded loss curve") {
        const std::string train = "train-confidence --corpus " + q(fx.corpus) + " --denoiser " + q(fx.denoiser) +
                                  " --epochs 2 --batch-size 4 --p-over 4 --p-under 1 --seed 0 --output ";
        r = run(train + q(fx.dir / "c1.ccp") + " --loss-csv " + q(fx.dir / "c1.csv"), env);
        REQUIRE_MESSAGE(r.status == 0, r.output);
        CHECK(r.output.find("computed=0 reused=24") != std::string::npos);
        r = run(train + q(fx.dir / "c2.ccp") + " --loss-csv " + q(fx.dir / "c2.csv"), env);
        REQUIRE(r.status == 0);
        const std::string a = slurp(fx.dir / "c1.csv");
        CHECK(csv_rows(a).size() == 3);
        CHECK(a == slurp(fx.dir / "c2.csv"));
        CHECK(slurp(fx.dir / "c1.ccp") == slurp(fx.dir / "c2.ccp"));
    }
    SUBCASE("empty corpus is an error") {
        fs::create_directories(fx.dir / "empty");
        r = run("gen-dataset --corpus " + q(fx.dir / "empty") + " --denoiser " + q(fx.denoiser), env);
        CHECK(r.status != 0);
        CHECK(r.output.find("no .png") != std::string::npos);
    }
}

TEST_CASE("service metrics equal the CLI sweep row") {
    Fixture fx;
    service::Service svc(load_models(fx.denoiser, {}));
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    const std::string noisy = slurp(fx.noisy);
    const std::string clean = slurp(fx.clean);
    auto created = client.Post("/api/sessions", httplib::MultipartFormDataItems{{"image", noisy, "n.png", "image/png"},
                                                                               {"clean", clean, "c.png", "image/png"}});
    REQUIRE(created);
    REQUIRE(created->status == 200);
    const std::string id = nlohmann::json::parse(created->body).at("id");

    const RunResult r = run("sweep --clean " + q(fx.clean) + " --noisy " + q(fx.noisy) + " --denoiser " +
                            q(fx.denoiser) + " --method dwt --grid 4");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto rows = csv_rows(r.output);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto res = client.Get("/api/sessions/" + id + "/metrics?method=dwt&w=" + rows[i][0]);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        const auto m = nlohmann::json::parse(res->body);
        CHECK(format_metric(m.at("psnr").get<double>()) == rows[i][1]);
        CHECK(format_metric(m.at("ssim").get<double>()) == rows[i][2]);
        CHECK(format_metric(m.at("mse").get<double>()) == rows[i][3]);
    }
    server.stop();
    thread.join();
}
