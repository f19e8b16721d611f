#pragma once

// Everything except the HTTP binding (gacm/http_server.hpp).

#include "gacm/authz.hpp"
#include "gacm/config.hpp"
#include "gacm/engine.hpp"
#include "gacm/graph.hpp"
#include "gacm/hierarchy.hpp"
#include "gacm/model.hpp"
#include "gacm/random_policy.hpp"
#include "gacm/rulelang.hpp"
#include "gacm/schema.hpp"
#include "gacm/service.hpp"
