#pragma once

#include "fovnoise/calib/service.hpp"

namespace httplib {
class Server;
}

namespace fovnoise::calib {

/// Mounts the /v1 API on `server`. Errors are {"error": message} with
/// 400 (bad request), 404 (unknown session or stimulus) or 409 (conflict).
void mount_routes(httplib::Server& server, CalibService& service);

}  // namespace fovnoise::calib
