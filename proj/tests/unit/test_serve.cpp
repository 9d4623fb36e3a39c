#include <doctest.h>

#include <atomic>
#include <fstream>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pgdflow/serve.hpp"

using namespace pgdflow;
using nlohmann::json;

namespace {

// jets on a coarse mesh with its boundary-condition modes only
std::shared_ptr<const Archive> jets_archive()
{
    static std::shared_ptr<const Archive> cached = [] {
        auto a = std::make_shared<Archive>();
        a->config = default_config("jets");
        a->config.params.cells = 20;
        a->config.params.n_intervals = 4;
        a->flow = make_case("jets", a->config.params);
        a->expansion = {a->flow.mesh, a->flow.grid, compute_bc_modes(a->flow.bc_recipes, a->config.params.solver),
                        "jets"};
        a->complete = true;
        a->status = "converged";
        return std::shared_ptr<const Archive>(a);
    }();
    return cached;
}

}  // namespace

TEST_CASE("meta handler")
{
    const auto a = jets_archive();
    const HttpReply r = api_meta(*a);
    CHECK(r.status == 200);
    const json j = json::parse(r.body);
    CHECK(j["case"] == "jets");
    CHECK(j["mu_min"] == 0.0);
    CHECK(j["mu_max"] == 1.0);
    CHECK(j["n_modes"] == 2);
    CHECK(j["n_bc_modes"] == 2);
    CHECK(j["mesh"]["nx"] == 20);
    CHECK(j["qoi"] == "pressure_drop");
    CHECK(j["amplitudes"].size() == 2);
}

TEST_CASE("evaluate handler")
{
    const auto a = jets_archive();
    const HttpReply r = api_evaluate(*a, "0.3", "1");
    REQUIRE(r.status == 200);
    const json j = json::parse(r.body);
    const auto [u, p] = evaluate_online(a->expansion, 0.3);
    const Mesh2D& m = *a->flow.mesh;
    CHECK(j["u_mag"].size() == 20);
    CHECK(j["u_mag"][0].size() == 20);
    for (int jj : {0, 7, 19})
        for (int ii : {0, 11, 19}) {
            const int c = m.cell_index(ii, jj);
            CHECK(j["u_mag"][jj][ii].get<double>() == doctest::Approx(std::hypot(u.cells[c].x, u.cells[c].y)));
            CHECK(j["p"][jj][ii].get<double>() == doctest::Approx(p.cells[c]));
        }
    CHECK(j["p_drop"].get<double>() == doctest::Approx(pressure_drop(p, m, "jet_right")));

    const json s = json::parse(api_evaluate(*a, "0.3", "3").body);
    CHECK(s["x"].size() == 7);
    CHECK(s["x"][1].get<double>() == doctest::Approx(m.cell_centroid(3).x));
    CHECK(json::parse(api_evaluate(*a, "1", "").body)["stride"] == 1);

    CHECK(api_evaluate(*a, "1.5", "").status == 400);
    CHECK(api_evaluate(*a, "-0.01", "").status == 400);
    CHECK(api_evaluate(*a, "abc", "").status == 400);
    CHECK(api_evaluate(*a, "", "").status == 400);
    CHECK(api_evaluate(*a, "nan", "").status == 400);
    CHECK(api_evaluate(*a, "0.5", "0").status == 400);
    CHECK(api_evaluate(*a, "0.5", "2.5").status == 400);
}

TEST_CASE("qoi handler")
{
    const auto a = jets_archive();
    const json j = json::parse(api_qoi(*a, "5").body);
    REQUIRE(j.size() == 5);
    for (int k = 0; k < 5; ++k) {
        const double mu = 0.25 * k;
        CHECK(j[k]["mu"].get<double>() == doctest::Approx(mu));
        const auto [u, p] = evaluate_online(a->expansion, mu);
        CHECK(j[k]["p_drop"].get<double>() == doctest::Approx(pressure_drop(p, *a->flow.mesh, "jet_right")));
    }
    CHECK(json::parse(api_qoi(*a, "").body).size() == 21);
    CHECK(api_qoi(*a, "1").status == 400);
    CHECK(api_qoi(*a, "x").status == 400);
}

TEST_CASE("server under concurrent load")
{
    const auto a = jets_archive();
    ExpansionServer server(a);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client probe("127.0.0.1", port);
    auto meta = probe.Get("/api/meta");
    REQUIRE(meta);
    CHECK(meta->status == 200);
    auto missing = probe.Get("/api/nothing");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body).contains("error"));
    auto bad = probe.Get("/api/evaluate?mu=2");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    const std::string expected = api_evaluate(*a, "0.55", "2").body;
    json ref = json::parse(expected);
    ref.erase("eval_time_ms");
    std::atomic<int> ok{0}, wrong{0}, transport{0};
    std::vector<std::thread> clients;
    for (int i = 0; i < 100; ++i)
        clients.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(30, 0);
            if (i % 4 == 3) {
                auto r = c.Get("/api/qoi?samples=3");
                if (!r) ++transport;
                (r && r->status == 200 && json::parse(r->body).size() == 3) ? ++ok : ++wrong;
                return;
            }
            auto r = c.Get("/api/evaluate?mu=0.55&stride=2");
            if (!r || r->status != 200) {
                if (!r) ++transport;
                ++wrong;
                return;
            }
            json j = json::parse(r->body);
            j.erase("eval_time_ms");
            (j == ref) ? ++ok : ++wrong;
        });
    for (auto& c : clients) c.join();
    CHECK(ok.load() == 100);
    CHECK(wrong.load() == 0);
    CHECK(transport.load() == 0);

    server.stop();
    t.join();
}

TEST_CASE("server static mount")
{
    const auto dir = std::filesystem::temp_directory_path() / "pgdflow_unit_static";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "index.html") << "<html>hi</html>";
    }
    ExpansionServer server(jets_archive(), dir);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client c("127.0.0.1", port);
    auto r = c.Get("/index.html");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->body == "<html>hi</html>");
    server.stop();
    t.join();
    CHECK_THROWS(ExpansionServer(jets_archive(), dir / "missing"));
}
