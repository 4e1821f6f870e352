// SPDX-License-Identifier: Apache-2.0
#include "graphfree/config.hpp"

#include <cstdlib>
#include <fstream>

namespace graphfree {

namespace {

nlohmann::json default_config() {
    return nlohmann::json{
        {"dataset",
         {{"path", ""},
          {"name", ""},
          {"feature_mode", "one_hot_label"},
          {"split_ratio", 0.7},
          {"seed", 1},
          {"directed", false}}},
        {"teacher",
         {{"arch", "GCN-5-64"},
          {"readout", "sum"},
          {"epochs", 400},
          {"batch_size", 32},
          {"lr", 0.01},
          {"lr_decay", 0.5},
          {"decay_period", 50},
          {"weight_decay", 0.0},
          {"keep_best", true},
          {"seed", 1}}},
        {"generate",
         {{"method", "gfkd"},
          {"ratio", 1.0},
          {"lambda_bn", 1.0},
          {"lambda_ent", 1.0},
          {"lr_struct", 1.0},
          {"lr_feat", 0.01},
          {"iterations", 2500},
          {"n_samples", 1},
          {"graphs_per_batch", 32},
          {"decay_period", 1000},
          {"node_min", 0},
          {"node_max", 0},
          {"init_edge_prob", 0.5},
          {"learn_diagonal", true},
          {"feature_mode", "auto"},
          {"seed", 1}}},
        {"distill",
         {{"student_arch", "GCN-3-32"},
          {"tau", 2.0},
          {"epochs", 400},
          {"batch_size", 32},
          {"base_lr", 0.01},
          {"keep_best", true},
          {"seeds", {1, 2, 3}},
          {"use_real_data", false}}},
        {"eval", {{"checkpoint", ""}, {"split", "test"}}},
        {"verify", {{"n_draws", 200000}, {"seed", 1}}},
        {"output", {{"dir", "out"}, {"verbose", false}}},
    };
}

bool types_compatible(const nlohmann::json &def, const nlohmann::json &val) {
    if (def.is_number() && val.is_number()) return true;
    if (def.is_array() && val.is_array()) return true;
    return def.type() == val.type();
}

// Merge src over dst, insisting every key already exists with a compatible type.
void merge_strict(nlohmann::json &dst, const nlohmann::json &src, const std::string &prefix) {
    if (!src.is_object()) fail(errc::config, "configuration node '" + prefix + "' must be an object");
    for (auto it = src.begin(); it != src.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!dst.contains(it.key())) fail(errc::config, "unknown configuration key '" + path + "'");
        nlohmann::json &slot = dst[it.key()];
        if (slot.is_object()) {
            merge_strict(slot, it.value(), path);
        } else {
            if (!types_compatible(slot, it.value()))
                fail(errc::config, "configuration key '" + path + "' has the wrong type");
            slot = it.value();
        }
    }
}

} // namespace

run_config::run_config() : data_(default_config()) {}

void run_config::load_file(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(errc::io, "cannot open config file '" + path + "'");
    nlohmann::json parsed = nlohmann::json::parse(is, nullptr, false);
    if (parsed.is_discarded()) fail(errc::format, "config file '" + path + "' is not valid JSON");
    merge_strict(data_, parsed, "");
}

void run_config::set(const std::string &assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        fail(errc::config, "override '" + assignment + "' must look like section.key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void run_config::set(const std::string &dotted_key, const std::string &value) {
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded() || parsed.is_object()) parsed = value;

    nlohmann::json *node = &data_;
    size_t start = 0;
    std::string walked;
    while (true) {
        const size_t dot = dotted_key.find('.', start);
        const std::string key = dotted_key.substr(start, dot == std::string::npos ? dot : dot - start);
        walked = walked.empty() ? key : walked + "." + key;
        if (!node->is_object() || !node->contains(key))
            fail(errc::config, "unknown configuration key '" + walked + "'");
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_object()) fail(errc::config, "'" + dotted_key + "' names a section, not a value");
    if (!types_compatible(*node, parsed))
        fail(errc::config, "configuration key '" + dotted_key + "' has the wrong type");
    *node = parsed;
}

const nlohmann::json &run_config::at(const std::string &dotted_key) const {
    const nlohmann::json *node = &data_;
    size_t start = 0;
    while (true) {
        const size_t dot = dotted_key.find('.', start);
        const std::string key = dotted_key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!node->is_object() || !node->contains(key))
            fail(errc::config, "unknown configuration key '" + dotted_key + "'");
        node = &(*node)[key];
        if (dot == std::string::npos) return *node;
        start = dot + 1;
    }
}

std::string run_config::get_string(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_string()) fail(errc::config, "configuration key '" + k + "' is not a string");
    return v.get<std::string>();
}

double run_config::get_double(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_number()) fail(errc::config, "configuration key '" + k + "' is not a number");
    return v.get<double>();
}

int run_config::get_int(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_number_integer()) fail(errc::config, "configuration key '" + k + "' is not an integer");
    return v.get<int>();
}

bool run_config::get_bool(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_boolean()) fail(errc::config, "configuration key '" + k + "' is not a boolean");
    return v.get<bool>();
}

uint64_t run_config::get_u64(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<int64_t>() < 0))
        fail(errc::config, "configuration key '" + k + "' is not a non-negative integer");
    return v.get<uint64_t>();
}

std::vector<uint64_t> run_config::get_u64_list(const std::string &k) const {
    const auto &v = at(k);
    if (!v.is_array()) fail(errc::config, "configuration key '" + k + "' is not a list");
    std::vector<uint64_t> out;
    for (const auto &e : v) {
        if (!e.is_number_integer())
            fail(errc::config, "configuration key '" + k + "' must hold integers");
        out.push_back(e.get<uint64_t>());
    }
    return out;
}

std::string run_config::dataset_path() const {
    std::string path = get_string("dataset.path");
    if (path.empty()) fail(errc::config, "dataset.path is not set");
    const char *root = std::getenv("GRAPHFREE_DATA_ROOT");
    if (root && *root && path.front() != '/') path = std::string(root) + "/" + path;
    return path;
}

std::string run_config::frozen() const { return data_.dump(2) + "\n"; }

} // namespace graphfree
