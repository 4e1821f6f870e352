// SPDX-License-Identifier: Apache-2.0
#include "graphfree/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "graphfree/graph_json.hpp"
#include "graphfree/rng.hpp"

namespace fs = std::filesystem;

namespace graphfree {

feature_mode feature_mode_from_string(const std::string &s) {
    if (s == "raw") return feature_mode::raw;
    if (s == "one_hot_label") return feature_mode::one_hot_label;
    if (s == "degree_one_hot") return feature_mode::degree_one_hot;
    if (s == "degree_scalar") return feature_mode::degree_scalar;
    if (s == "constant") return feature_mode::constant;
    fail(errc::config, "unknown feature mode: " + s);
}

std::string to_string(feature_mode m) {
    switch (m) {
    case feature_mode::raw: return "raw";
    case feature_mode::one_hot_label: return "one_hot_label";
    case feature_mode::degree_one_hot: return "degree_one_hot";
    case feature_mode::degree_scalar: return "degree_scalar";
    case feature_mode::constant: return "constant";
    }
    fail(errc::internal, "bad feature_mode value");
}

std::vector<int> compute_degrees(const matrix &adjacency) {
    std::vector<int> deg(adjacency.rows(), 0);
    for (int i = 0; i < adjacency.rows(); ++i) {
        int d = 0;
        for (int j = 0; j < adjacency.cols(); ++j)
            if (adjacency(i, j) != 0.0) ++d;
        deg[i] = d;
    }
    return deg;
}

namespace {

std::vector<std::string> read_lines(const std::string &path, bool required) {
    std::ifstream in(path);
    if (!in) {
        if (required) fail(errc::io, "cannot open " + path);
        return {};
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        lines.push_back(line);
    }
    // Trailing blank lines are common in these files; interior blanks are not.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

int parse_int(const std::string &s, const std::string &what) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) fail(errc::format, what + ": trailing characters in '" + s + "'");
        return v;
    } catch (const error &) {
        throw;
    } catch (const std::exception &) {
        fail(errc::format, what + ": not an integer: '" + s + "'");
    }
}

std::string infer_prefix(const std::string &dir) {
    std::string found;
    std::error_code ec;
    for (const auto &entry : fs::directory_iterator(dir, ec)) {
        std::string fn = entry.path().filename().string();
        const std::string suffix = "_A.txt";
        if (fn.size() > suffix.size() && fn.compare(fn.size() - suffix.size(), suffix.size(), suffix) == 0) {
            std::string p = fn.substr(0, fn.size() - suffix.size());
            if (!found.empty() && found != p)
                fail(errc::format, dir + ": multiple *_A.txt files, pass an explicit dataset name");
            found = p;
        }
    }
    if (ec) fail(errc::io, "cannot list " + dir + ": " + ec.message());
    if (found.empty()) fail(errc::io, dir + ": no *_A.txt file found");
    return found;
}

} // namespace

std::vector<graph> load_tu_dataset(const std::string &dir, dataset_meta &meta,
                                   const meta_overrides &overrides) {
    const std::string name = overrides.name ? *overrides.name : infer_prefix(dir);
    const bool directed = overrides.directed.value_or(false);
    const std::string base = dir + "/" + name;

    auto indicator_lines = read_lines(base + "_graph_indicator.txt", true);
    auto label_lines = read_lines(base + "_graph_labels.txt", true);
    auto edge_lines = read_lines(base + "_A.txt", true);
    auto node_label_lines = read_lines(base + "_node_labels.txt", false);

    const int total_nodes = static_cast<int>(indicator_lines.size());
    if (total_nodes == 0) fail(errc::format, base + "_graph_indicator.txt is empty");
    if (!node_label_lines.empty() && static_cast<int>(node_label_lines.size()) != total_nodes)
        fail(errc::format, base + "_node_labels.txt: line count differs from graph_indicator");

    const int graph_count = static_cast<int>(label_lines.size());
    if (graph_count == 0) fail(errc::format, base + "_graph_labels.txt is empty");

    // Map global node id (1-based) -> (graph index, local node index).
    std::vector<int> node_graph(total_nodes), node_local(total_nodes);
    std::vector<int> graph_sizes(graph_count, 0);
    for (int v = 0; v < total_nodes; ++v) {
        int gid = parse_int(indicator_lines[v], base + "_graph_indicator.txt line " + std::to_string(v + 1));
        if (gid < 1 || gid > graph_count)
            fail(errc::format, base + "_graph_indicator.txt: graph id " + std::to_string(gid) +
                                   " out of range 1.." + std::to_string(graph_count));
        node_graph[v] = gid - 1;
        node_local[v] = graph_sizes[gid - 1]++;
    }
    for (int g = 0; g < graph_count; ++g)
        if (graph_sizes[g] == 0)
            fail(errc::format, base + ": graph " + std::to_string(g + 1) + " has no nodes");

    std::vector<graph> graphs(graph_count);
    for (int g = 0; g < graph_count; ++g) {
        graphs[g].node_count = graph_sizes[g];
        graphs[g].adjacency = matrix(graph_sizes[g], graph_sizes[g]);
        graphs[g].directed = directed;
        if (!node_label_lines.empty()) graphs[g].node_labels.resize(graph_sizes[g]);
    }
    if (!node_label_lines.empty()) {
        for (int v = 0; v < total_nodes; ++v)
            graphs[node_graph[v]].node_labels[node_local[v]] =
                parse_int(node_label_lines[v], base + "_node_labels.txt line " + std::to_string(v + 1));
    }

    for (size_t row = 0; row < edge_lines.size(); ++row) {
        std::string s = edge_lines[row];
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream iss(s);
        long a = 0, b = 0;
        if (!(iss >> a >> b))
            fail(errc::format, base + "_A.txt line " + std::to_string(row + 1) + ": expected 'i, j'");
        if (a < 1 || a > total_nodes || b < 1 || b > total_nodes)
            fail(errc::format, base + "_A.txt line " + std::to_string(row + 1) + ": node id out of range");
        int u = static_cast<int>(a - 1), w = static_cast<int>(b - 1);
        if (node_graph[u] != node_graph[w])
            fail(errc::format, base + "_A.txt line " + std::to_string(row + 1) + ": edge crosses graphs");
        graph &gr = graphs[node_graph[u]];
        gr.adjacency(node_local[u], node_local[w]) = 1.0;
        if (!directed) gr.adjacency(node_local[w], node_local[u]) = 1.0;
    }

    // Remap raw labels to contiguous ids in ascending raw order.
    std::vector<int> raw_labels(graph_count);
    std::map<int, int> remap;
    for (int g = 0; g < graph_count; ++g) {
        raw_labels[g] = parse_int(label_lines[g], base + "_graph_labels.txt line " + std::to_string(g + 1));
        remap[raw_labels[g]] = 0;
    }
    meta.original_labels.clear();
    for (auto &kv : remap) {
        kv.second = static_cast<int>(meta.original_labels.size());
        meta.original_labels.push_back(kv.first);
    }
    for (int g = 0; g < graph_count; ++g) graphs[g].label = remap[raw_labels[g]];

    meta.name = name;
    meta.num_classes = static_cast<int>(meta.original_labels.size());
    meta.mode = feature_mode::raw;
    meta.feature_dim = 0;
    meta.avg_node_count = static_cast<double>(total_nodes) / graph_count;
    meta.max_degree = 0;
    meta.directed = directed;
    meta.node_label_vocab.clear();
    for (const auto &g : graphs) {
        for (int d : compute_degrees(g.adjacency)) meta.max_degree = std::max(meta.max_degree, d);
    }
    return graphs;
}

void write_tu_dataset(const std::string &dir, const std::string &name,
                      const std::vector<graph> &graphs, const dataset_meta &meta) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(errc::io, "cannot create " + dir + ": " + ec.message());
    const std::string base = dir + "/" + name;

    std::ofstream fa(base + "_A.txt"), fi(base + "_graph_indicator.txt"), fl(base + "_graph_labels.txt");
    if (!fa || !fi || !fl) fail(errc::io, "cannot write dataset files under " + dir);
    bool have_node_labels = !graphs.empty() && !graphs.front().node_labels.empty();
    std::ofstream fn;
    if (have_node_labels) {
        fn.open(base + "_node_labels.txt");
        if (!fn) fail(errc::io, "cannot write " + base + "_node_labels.txt");
    }

    long offset = 0;
    for (size_t g = 0; g < graphs.size(); ++g) {
        const graph &gr = graphs[g];
        int raw = gr.label;
        if (gr.label >= 0 && gr.label < static_cast<int>(meta.original_labels.size()))
            raw = meta.original_labels[gr.label];
        fl << raw << "\n";
        for (int i = 0; i < gr.node_count; ++i) {
            fi << (g + 1) << "\n";
            if (have_node_labels) fn << gr.node_labels[i] << "\n";
            for (int j = 0; j < gr.node_count; ++j)
                if (gr.adjacency(i, j) != 0.0) fa << (offset + i + 1) << ", " << (offset + j + 1) << "\n";
        }
        offset += gr.node_count;
    }
}

void encode_features(std::vector<graph> &graphs, feature_mode mode, dataset_meta &meta, long *clamped) {
    switch (mode) {
    case feature_mode::raw:
        for (auto &g : graphs)
            if (g.features.rows() != g.node_count)
                fail(errc::argument, "encode_features(raw): graph has no features");
        if (!graphs.empty()) meta.feature_dim = graphs.front().features.cols();
        break;
    case feature_mode::one_hot_label: {
        if (meta.node_label_vocab.empty()) {
            std::map<int, int> vocab;
            for (const auto &g : graphs) {
                if (g.node_labels.empty())
                    fail(errc::argument, "encode_features(one_hot_label): graph has no node labels");
                for (int t : g.node_labels) vocab[t] = 0;
            }
            for (auto &kv : vocab) meta.node_label_vocab.push_back(kv.first);
        }
        const int dim = static_cast<int>(meta.node_label_vocab.size());
        for (auto &g : graphs) {
            g.features = matrix(g.node_count, dim);
            for (int i = 0; i < g.node_count; ++i) {
                auto it = std::lower_bound(meta.node_label_vocab.begin(), meta.node_label_vocab.end(),
                                           g.node_labels[i]);
                if (it == meta.node_label_vocab.end() || *it != g.node_labels[i])
                    fail(errc::argument, "encode_features: node label " + std::to_string(g.node_labels[i]) +
                                             " not in vocabulary");
                g.features(i, static_cast<int>(it - meta.node_label_vocab.begin())) = 1.0;
            }
        }
        meta.feature_dim = dim;
        break;
    }
    case feature_mode::degree_one_hot: {
        if (meta.max_degree <= 0) {
            for (const auto &g : graphs)
                for (int d : compute_degrees(g.adjacency)) meta.max_degree = std::max(meta.max_degree, d);
        }
        const int dim = meta.max_degree + 1;
        for (auto &g : graphs) {
            g.features = matrix(g.node_count, dim);
            auto deg = compute_degrees(g.adjacency);
            for (int i = 0; i < g.node_count; ++i) {
                int d = deg[i];
                if (d > meta.max_degree) {
                    d = meta.max_degree;
                    if (clamped) ++*clamped;
                }
                g.features(i, d) = 1.0;
            }
        }
        meta.feature_dim = dim;
        break;
    }
    case feature_mode::degree_scalar:
        for (auto &g : graphs) {
            g.features = matrix(g.node_count, 1);
            auto deg = compute_degrees(g.adjacency);
            for (int i = 0; i < g.node_count; ++i) g.features(i, 0) = deg[i];
        }
        meta.feature_dim = 1;
        break;
    case feature_mode::constant:
        for (auto &g : graphs) g.features = matrix(g.node_count, 1, 1.0);
        meta.feature_dim = 1;
        break;
    }
    meta.mode = mode;
}

dataset_split split_dataset(const std::vector<graph> &graphs, double ratio, uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) fail(errc::argument, "split_dataset: ratio must be in (0,1)");
    int num_classes = 0;
    for (const auto &g : graphs) num_classes = std::max(num_classes, g.label + 1);
    std::vector<std::vector<int>> by_class(num_classes);
    for (size_t i = 0; i < graphs.size(); ++i) {
        if (graphs[i].label < 0) fail(errc::argument, "split_dataset: unlabeled graph");
        by_class[graphs[i].label].push_back(static_cast<int>(i));
    }

    rng r(seed);
    dataset_split out;
    for (auto &idx : by_class) {
        if (idx.empty()) continue;
        for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[r.uniform_int(0, static_cast<int>(i) - 1)]);
        long k = std::lround(ratio * static_cast<double>(idx.size()));
        if (idx.size() >= 2) k = std::clamp(k, 1L, static_cast<long>(idx.size()) - 1);
        else k = 1;
        for (size_t i = 0; i < idx.size(); ++i)
            (static_cast<long>(i) < k ? out.train : out.test).push_back(graphs[idx[i]]);
    }
    return out;
}

nlohmann::json graph_to_json(const graph &g) {
    nlohmann::json j;
    j["n"] = g.node_count;
    auto edges = nlohmann::json::array();
    for (int i = 0; i < g.node_count; ++i) {
        int j0 = g.directed ? 0 : i;
        for (int k = j0; k < g.node_count; ++k)
            if (g.adjacency(i, k) != 0.0) edges.push_back({i, k});
    }
    j["edges"] = std::move(edges);
    std::vector<double> flat(g.features.data(), g.features.data() + g.features.size());
    j["features"] = std::move(flat);
    j["feature_dim"] = g.features.cols();
    j["label"] = g.label;
    j["directed"] = g.directed;
    if (!g.node_labels.empty()) j["node_labels"] = g.node_labels;
    return j;
}

graph graph_from_json(const nlohmann::json &j) {
    graph g;
    g.node_count = j.at("n").get<int>();
    if (g.node_count <= 0) fail(errc::format, "graph json: n must be positive");
    g.directed = j.value("directed", false);
    g.label = j.value("label", -1);
    g.adjacency = matrix(g.node_count, g.node_count);
    for (const auto &e : j.at("edges")) {
        int a = e.at(0).get<int>(), b = e.at(1).get<int>();
        if (a < 0 || a >= g.node_count || b < 0 || b >= g.node_count)
            fail(errc::format, "graph json: edge index out of range");
        g.adjacency(a, b) = 1.0;
        if (!g.directed) g.adjacency(b, a) = 1.0;
    }
    int dim = j.value("feature_dim", 0);
    auto flat = j.at("features").get<std::vector<double>>();
    if (dim == 0 && !flat.empty()) {
        if (flat.size() % g.node_count != 0) fail(errc::format, "graph json: feature length not divisible by n");
        dim = static_cast<int>(flat.size()) / g.node_count;
    }
    if (static_cast<size_t>(dim) * g.node_count != flat.size())
        fail(errc::format, "graph json: feature length mismatch");
    g.features = matrix(g.node_count, dim);
    std::copy(flat.begin(), flat.end(), g.features.data());
    if (auto it = j.find("node_labels"); it != j.end()) g.node_labels = it->get<std::vector<int>>();
    return g;
}

void write_graphs_jsonl(const std::string &path, const std::vector<graph> &graphs) {
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot write " + path);
    for (const auto &g : graphs) out << graph_to_json(g).dump() << "\n";
}

std::vector<graph> read_graphs_jsonl(const std::string &path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open " + path);
    std::vector<graph> graphs;
    std::string line;
    size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(errc::format, path + " line " + std::to_string(ln) + ": invalid json");
        try {
            graphs.push_back(graph_from_json(j));
        } catch (const error &e) {
            fail(e.code() == errc::format ? errc::format : e.code(),
                 path + " line " + std::to_string(ln) + ": " + e.what());
        }
    }
    return graphs;
}

} // namespace graphfree
