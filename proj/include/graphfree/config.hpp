// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphfree/error.hpp"

namespace graphfree {

// Layered run configuration: compiled-in defaults, optionally merged with a
// JSON file, then with dotted-path overrides. Precedence: override > file >
// defaults. Keys and value types are validated against the defaults, so typos
// fail loudly instead of silently falling back.
class run_config {
  public:
    run_config();

    // Merges a JSON object file over the current values.
    void load_file(const std::string &path);

    // Applies one "section.key=value" override; the value is parsed as JSON
    // when possible and treated as a bare string otherwise.
    void set(const std::string &assignment);
    void set(const std::string &dotted_key, const std::string &value);

    std::string get_string(const std::string &dotted_key) const;
    double get_double(const std::string &dotted_key) const;
    int get_int(const std::string &dotted_key) const;
    bool get_bool(const std::string &dotted_key) const;
    uint64_t get_u64(const std::string &dotted_key) const;
    std::vector<uint64_t> get_u64_list(const std::string &dotted_key) const;

    // dataset.path, made absolute against $GRAPHFREE_DATA_ROOT when relative
    // and the variable is set.
    std::string dataset_path() const;

    // Full effective configuration, pretty-printed; written as config.frozen
    // next to every command's outputs.
    std::string frozen() const;

    const nlohmann::json &data() const { return data_; }

  private:
    const nlohmann::json &at(const std::string &dotted_key) const;
    nlohmann::json data_;
};

} // namespace graphfree
