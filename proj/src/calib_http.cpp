#include "fovnoise/calib/http.hpp"

#include "fovnoise/errors.hpp"

#include <httplib.h>

#include <functional>
#include <string>

namespace fovnoise::calib {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON body: ") + e.what());
  }
}

httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      send_json(res, {{"error", e.what()}}, 404);
    } catch (const ConflictError& e) {
      send_json(res, {{"error", e.what()}}, 409);
    } catch (const ConfigError& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace

void mount_routes(httplib::Server& server, CalibService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Expose-Headers", "X-Preview-Version, X-Preview-Rendering"}});
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });

  server.Get("/v1/stimuli", guarded([&](const httplib::Request&, httplib::Response& res) {
               send_json(res, service.stimuli());
             }));

  server.Post("/v1/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, to_json(service.create_session(session_request_from_json(parse_body(req)))), 201);
              }));

  server.Get(R"(/v1/sessions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, to_json(service.session(req.matches[1])));
             }));

  server.Post(R"(/v1/sessions/([^/]+)/param)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                ParamUpdate update;
                try {
                  if (body.contains("delta")) update.delta = body["delta"].get<double>();
                  if (body.contains("value")) update.value = body["value"].get<double>();
                } catch (const json::exception& e) {
                  throw ConfigError(std::string("param: ") + e.what());
                }
                send_json(res, to_json(service.set_param(req.matches[1], update)));
              }));

  server.Post(R"(/v1/sessions/([^/]+)/accept)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, to_json(service.accept(req.matches[1])));
              }));

  server.Get(R"(/v1/sessions/([^/]+)/preview\.png)",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               const bool wait = req.has_param("wait") && req.get_param_value("wait") != "0";
               const Preview p = service.preview(req.matches[1], wait);
               res.set_header("X-Preview-Version", std::to_string(p.version));
               res.set_header("X-Preview-Rendering", p.rendering ? "true" : "false");
               res.set_header("Cache-Control", "no-store");
               res.set_content(std::string(p.png.begin(), p.png.end()), "image/png");
             }));

  server.Get("/v1/export", guarded([&](const httplib::Request&, httplib::Response& res) {
               send_json(res, service.export_json());
             }));
}

}  // namespace fovnoise::calib
