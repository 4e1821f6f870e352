// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "graphfree/graph.hpp"

namespace graphfree {

nlohmann::json graph_to_json(const graph &g);
graph graph_from_json(const nlohmann::json &j);

} // namespace graphfree
