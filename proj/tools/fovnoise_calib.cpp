#include "fovnoise/calib/http.hpp"
#include "fovnoise/calib/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <iostream>

namespace {
httplib::Server* g_server = nullptr;
}

int main(int argc, char** argv) {
  CLI::App app{"Calibration preview service"};
  std::string corpus;
  std::string host = "127.0.0.1";
  int port = 8080;
  fovnoise::calib::PreviewOptions preview;
  app.add_option("--corpus", corpus, "Directory of stimulus images (.png, .exr)")->required();
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--preview-width", preview.width);
  app.add_flag("--full-resolution", preview.full_resolution, "Render previews at stimulus resolution");
  CLI11_PARSE(app, argc, argv);

  try {
    fovnoise::calib::StimulusStore store;
    store.load_directory(corpus);
    fovnoise::calib::CalibService service(std::move(store), preview);
    httplib::Server server;
    fovnoise::calib::mount_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, [](int) { g_server->stop(); });
    std::signal(SIGTERM, [](int) { g_server->stop(); });
    std::cerr << "listening on " << host << ':' << port << " with " << service.stimuli().size() << " stimuli\n";
    if (!server.listen(host, port)) {
      std::cerr << "cannot bind " << host << ':' << port << '\n';
      return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
