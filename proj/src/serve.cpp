#include "pgdflow/serve.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace pgdflow {

using nlohmann::json;

namespace {

HttpReply error(int status, const std::string& what)
{
    return {status, json{{"error", what}}.dump()};
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, long& out)
{
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtol(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

double qoi_value(const Archive& a, const ScalarField& p)
{
    return pressure_drop(p, *a.flow.mesh, a.flow.qoi_patch);
}

}  // namespace

int default_stride(const Mesh2D& mesh)
{
    const int n = std::max(mesh.nx(), mesh.ny());
    return std::max(1, (n + 127) / 128);
}

HttpReply api_meta(const Archive& a)
{
    const Mesh2D& mesh = *a.flow.mesh;
    json amps = json::array();
    for (const Mode& m : a.expansion.modes)
        amps.push_back({{"origin", m.origin == ModeOrigin::computed ? "computed" : "boundary_condition"},
                        {"sigma_u", m.sigma_u},
                        {"sigma_p", m.sigma_p}});
    json j{{"case", a.expansion.case_name},
           {"mu_min", a.flow.grid->lo()},
           {"mu_max", a.flow.grid->hi()},
           {"n_modes", a.expansion.modes.size()},
           {"n_bc_modes", a.expansion.n_bc_modes()},
           {"n_computed", a.expansion.n_computed()},
           {"mesh", {{"nx", mesh.nx()}, {"ny", mesh.ny()},
                     {"origin", {mesh.origin().x, mesh.origin().y}},
                     {"extent", {mesh.extent().x, mesh.extent().y}}}},
           {"default_stride", default_stride(mesh)},
           {"qoi", a.flow.qoi_patch.empty() ? json(nullptr) : json("pressure_drop")},
           {"complete", a.complete},
           {"amplitudes", amps}};
    return {200, j.dump()};
}

HttpReply api_evaluate(const Archive& a, const std::string& mu_text, const std::string& stride_text)
{
    const Mesh2D& mesh = *a.flow.mesh;
    double mu = 0.0;
    if (!parse_double(mu_text, mu)) return error(400, "mu must be a finite number");
    if (!a.flow.grid->contains(mu)) return error(400, "mu outside [" + std::to_string(a.flow.grid->lo()) + ", " +
                                                          std::to_string(a.flow.grid->hi()) + "]");
    long stride = default_stride(mesh);
    if (!stride_text.empty() && (!parse_int(stride_text, stride) || stride < 1 || stride > std::max(mesh.nx(), mesh.ny())))
        return error(400, "stride must be an integer in [1, cells per side]");

    const auto t0 = std::chrono::steady_clock::now();
    const auto [u, p] = evaluate_online(a.expansion, mu);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const int s = static_cast<int>(stride);
    json umag = json::array(), pg = json::array(), xs = json::array(), ys = json::array();
    for (int i = 0; i < mesh.nx(); i += s) xs.push_back(mesh.cell_centroid(mesh.cell_index(i, 0)).x);
    for (int j = 0; j < mesh.ny(); j += s) {
        ys.push_back(mesh.cell_centroid(mesh.cell_index(0, j)).y);
        json ur = json::array(), pr = json::array();
        for (int i = 0; i < mesh.nx(); i += s) {
            const int c = mesh.cell_index(i, j);
            ur.push_back(std::hypot(u.cells[c].x, u.cells[c].y));
            pr.push_back(p.cells[c]);
        }
        umag.push_back(std::move(ur));
        pg.push_back(std::move(pr));
    }
    json j{{"mu", mu},
           {"stride", s},
           {"x", xs},
           {"y", ys},
           {"u_mag", umag},
           {"p", pg},
           {"p_drop", a.flow.qoi_patch.empty() ? json(nullptr) : json(qoi_value(a, p))},
           {"eval_time_ms", ms}};
    return {200, j.dump()};
}

HttpReply api_qoi(const Archive& a, const std::string& samples_text)
{
    long n = 21;
    if (!samples_text.empty() && (!parse_int(samples_text, n) || n < 2 || n > 10001))
        return error(400, "samples must be an integer in [2, 10001]");
    if (a.flow.qoi_patch.empty()) return error(400, "case '" + a.expansion.case_name + "' has no pressure-drop patch");
    const ParametricGrid& g = *a.flow.grid;
    json arr = json::array();
    for (long k = 0; k < n; ++k) {
        const double mu = k + 1 == n ? g.hi() : g.lo() + (g.hi() - g.lo()) * k / (n - 1);
        const auto [u, p] = evaluate_online(a.expansion, mu);
        arr.push_back({{"mu", mu}, {"p_drop", qoi_value(a, p)}});
    }
    return {200, arr.dump()};
}

// ---------------------------------------------------------------------------

struct ExpansionServer::Impl {
    std::shared_ptr<const Archive> archive;
    httplib::Server server;
};

ExpansionServer::ExpansionServer(std::shared_ptr<const Archive> archive, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>())
{
    if (!archive) throw std::invalid_argument("ExpansionServer: null archive");
    impl_->archive = std::move(archive);
    auto& srv = impl_->server;
    const Archive* a = impl_->archive.get();

    auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    srv.Get("/api/meta", [a, send](const httplib::Request&, httplib::Response& res) { send(res, api_meta(*a)); });
    srv.Get("/api/evaluate", [a, send](const httplib::Request& req, httplib::Response& res) {
        send(res, api_evaluate(*a, req.get_param_value("mu"), req.get_param_value("stride")));
    });
    srv.Get("/api/qoi", [a, send](const httplib::Request& req, httplib::Response& res) {
        send(res, api_qoi(*a, req.get_param_value("samples")));
    });
    if (!static_dir.empty() && !srv.set_mount_point("/", static_dir.string()))
        throw std::runtime_error("static directory " + static_dir.string() + " does not exist");
    srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404) res.set_content(json{{"error", "no route " + req.path}}.dump(), "application/json");
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", what}}.dump(), "application/json");
    });
}

ExpansionServer::~ExpansionServer() { stop(); }

int ExpansionServer::bind(const std::string& host, int port)
{
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ExpansionServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ExpansionServer::stop()
{
    if (impl_) impl_->server.stop();
}

void ExpansionServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace pgdflow
