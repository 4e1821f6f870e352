// SPDX-License-Identifier: Apache-2.0
#include "graphfree/generate.hpp"

#include "graphfree/graph_json.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace graphfree {

gen_method gen_method_from_string(const std::string &s) {
    if (s == "gfkd") return gen_method::gfkd;
    if (s == "deepinvg") return gen_method::deepinvg;
    if (s == "randg") return gen_method::randg;
    fail(errc::config, "unknown generation method '" + s + "'");
}

std::string to_string(gen_method m) {
    switch (m) {
    case gen_method::gfkd: return "gfkd";
    case gen_method::deepinvg: return "deepinvg";
    case gen_method::randg: return "randg";
    }
    fail(errc::internal, "bad gen_method value");
}

std::pair<int, int> resolve_node_range(const dataset_meta &meta, const generation_config &config) {
    int lo = config.node_min, hi = config.node_max;
    if (lo <= 0) lo = static_cast<int>(std::lround(0.75 * meta.avg_node_count));
    if (hi <= 0) hi = static_cast<int>(std::lround(1.25 * meta.avg_node_count));
    if (lo < 1) lo = 1;
    if (hi < lo) fail(errc::config, "node count range is empty");
    return {lo, hi};
}

std::string generation_provenance(const generation_config &config) {
    std::ostringstream os;
    os << to_string(config.method) << '|' << config.lambda_bn << '|' << config.lambda_ent << '|'
       << config.lr_struct << '|' << config.lr_feat << '|' << config.iterations << '|'
       << config.n_samples << '|' << config.node_min << '|' << config.node_max << '|'
       << config.graphs_per_batch << '|' << config.decay_period << '|' << config.init_edge_prob
       << '|' << config.learn_diagonal << '|' << to_string(config.feature_mode) << '|'
       << config.feature_mode_auto << '|' << config.seed;
    const std::string s = os.str();
    // FNV-1a over the canonical config string.
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Hard features for one emitted graph. Rows [row0, row0+n) of the stacked
// parameters back the learned modes; derived modes recompute from the
// adjacency the graph actually carries.
matrix emit_features(const objective &obj, const feature_params &feats, const matrix &adjacency,
                     int row0) {
    const int n = adjacency.rows();
    switch (feats.mode) {
    case gen_feature_mode::free: {
        matrix out(n, feats.values.cols());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < feats.values.cols(); ++j) out(i, j) = feats.values(row0 + i, j);
        return out;
    }
    case gen_feature_mode::one_hot: {
        matrix out(n, feats.values.cols());
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int j = 1; j < feats.values.cols(); ++j)
                if (feats.values(row0 + i, j) > feats.values(row0 + i, best)) best = j;
            out(i, best) = 1.0;
        }
        return out;
    }
    case gen_feature_mode::degree:
    case gen_feature_mode::constant: {
        feature_params derived;
        derived.mode = feats.mode;
        return obj.effective_features({&adjacency}, derived);
    }
    }
    fail(errc::internal, "bad gen_feature_mode value");
}

[[noreturn]] void fail_at(int batch, int iteration, const std::string &what) {
    std::ostringstream os;
    os << "batch " << batch << " iteration " << iteration << ": " << what;
    fail(errc::numeric, os.str());
}

} // namespace

fake_graph_set run_generation(const gnn_model &teacher, const dataset_meta &meta,
                              const generation_config &config, int count,
                              std::vector<generation_log_row> *log, const progress_fn &progress) {
    if (config.method == gen_method::randg) return randg_baseline(meta, config, count);
    if (count <= 0) fail(errc::argument, "requested fake graph count must be positive");
    if (config.graphs_per_batch <= 0) fail(errc::config, "graphs_per_batch must be positive");
    if (config.iterations < 0) fail(errc::config, "iterations must be non-negative");
    if (config.n_samples < 1) fail(errc::config, "n_samples must be at least 1");
    if (config.decay_period <= 0) fail(errc::config, "decay_period must be positive");
    if (!(config.init_edge_prob > 0.0 && config.init_edge_prob < 1.0))
        fail(errc::config, "init_edge_prob must lie strictly inside (0,1)");
    if (meta.num_classes < 1) fail(errc::config, "dataset meta reports no classes");

    const bool is_gfkd = config.method == gen_method::gfkd;
    const gen_feature_mode fmode =
        config.feature_mode_auto ? gen_mode_for(meta.mode) : config.feature_mode;
    const bool feats_learnable =
        fmode == gen_feature_mode::free || fmode == gen_feature_mode::one_hot;

    // DeepInvG drops the entropy prior; the BN prior applies to both methods.
    objective obj = build_objective(teacher, meta, fmode, config.lambda_bn, config.lambda_ent, true,
                                    is_gfkd);

    auto [node_lo, node_hi] = resolve_node_range(meta, config);
    const double theta0 = std::log(config.init_edge_prob / (1.0 - config.init_edge_prob));

    fake_graph_set out;
    out.provenance = generation_provenance(config);
    out.graphs.reserve(count);
    out.labels.reserve(count);
    out.theta.reserve(count);

    rng master(config.seed);
    int produced = 0;
    int batch_index = 0;
    while (produced < count) {
        const int B = std::min(config.graphs_per_batch, count - produced);
        rng batch_rng = master.spawn(static_cast<uint64_t>(batch_index));

        std::vector<int> labels(B);
        for (int g = 0; g < B; ++g) labels[g] = (produced + g) % meta.num_classes;

        std::vector<structure_params> params;
        std::vector<int> offsets(1, 0);
        params.reserve(B);
        for (int g = 0; g < B; ++g) {
            const int n = batch_rng.uniform_int(node_lo, node_hi);
            params.push_back(make_structure(n, meta.directed, theta0, config.learn_diagonal));
            offsets.push_back(offsets.back() + n);
        }
        feature_params feats = init_feature_params(fmode, offsets.back(), teacher.input_dim, batch_rng);

        // DeepInvG draws each adjacency once and never revisits it.
        std::vector<matrix> fixed;
        std::vector<const matrix *> fixed_ptrs;
        if (!is_gfkd) {
            fixed.reserve(B);
            for (int g = 0; g < B; ++g) fixed.push_back(sample_structure(params[g], batch_rng));
            for (const auto &a : fixed) fixed_ptrs.push_back(&a);
        }

        for (int t = 0; t < config.iterations; ++t) {
            const double mult = std::pow(0.1, t / config.decay_period);
            objective_eval log_eval;
            bool have_log_eval = false;

            // Features step first.
            if (feats_learnable) {
                matrix fg;
                try {
                    if (is_gfkd) {
                        objective_eval ev;
                        fg = estimate_feature_grad(obj, feats, params, labels, config.n_samples,
                                                   batch_rng, log ? &ev : nullptr);
                        if (log) {
                            log_eval = std::move(ev);
                            have_log_eval = true;
                        }
                    } else {
                        objective_eval ev = obj.eval(fixed_ptrs, labels, feats, true);
                        fg = std::move(ev.feature_grad);
                        if (log) {
                            log_eval = std::move(ev);
                            have_log_eval = true;
                        }
                    }
                } catch (const error &e) {
                    if (e.code() != errc::numeric) throw;
                    fail_at(batch_index, t, e.what());
                }
                add_inplace(feats.values, fg, -config.lr_feat * mult);
                if (!all_finite(feats.values))
                    fail_at(batch_index, t, "feature parameters diverged");
            }

            // Structures step (learned topologies only).
            if (is_gfkd) {
                std::vector<matrix> sg;
                try {
                    sg = batch_structure_grads(obj, feats, params, labels, batch_rng);
                } catch (const error &e) {
                    if (e.code() != errc::numeric) throw;
                    fail_at(batch_index, t, e.what());
                }
                for (int g = 0; g < B; ++g) theta_step(params[g], sg[g], config.lr_struct * mult);
            }

            if (log) {
                if (!have_log_eval) {
                    // Parameter-free feature modes take no feature step; price
                    // the current state with one explicit evaluation.
                    std::vector<matrix> sampled;
                    std::vector<const matrix *> ptrs;
                    if (is_gfkd) {
                        sampled.reserve(B);
                        for (int g = 0; g < B; ++g)
                            sampled.push_back(sample_structure(params[g], batch_rng));
                        for (const auto &a : sampled) ptrs.push_back(&a);
                    } else {
                        ptrs = fixed_ptrs;
                    }
                    log_eval = obj.eval(ptrs, labels, feats, false);
                }
                log->push_back({batch_index, t, log_eval.total, log_eval.ce_mean, log_eval.bn_term,
                                log_eval.ent_term});
            }
            if (progress && ((t + 1) % 500 == 0 || t + 1 == config.iterations)) {
                std::ostringstream os;
                os << "batch " << batch_index << " iteration " << (t + 1) << "/"
                   << config.iterations;
                if (log && !log->empty()) os << " objective " << log->back().objective;
                progress(os.str());
            }
        }

        if (log) {
            // Closing row: the objective at the final parameters.
            std::vector<matrix> sampled;
            std::vector<const matrix *> ptrs;
            if (is_gfkd) {
                sampled.reserve(B);
                for (int g = 0; g < B; ++g) sampled.push_back(sample_structure(params[g], batch_rng));
                for (const auto &a : sampled) ptrs.push_back(&a);
            } else {
                ptrs = fixed_ptrs;
            }
            objective_eval ev = obj.eval(ptrs, labels, feats, false);
            log->push_back(
                {batch_index, config.iterations, ev.total, ev.ce_mean, ev.bn_term, ev.ent_term});
        }

        for (int g = 0; g < B; ++g) {
            graph fake;
            fake.directed = meta.directed;
            fake.label = labels[g];
            fake.adjacency = is_gfkd ? sample_structure(params[g], batch_rng) : fixed[g];
            fake.node_count = fake.adjacency.rows();
            fake.features = emit_features(obj, feats, fake.adjacency, offsets[g]);
            out.graphs.push_back(std::move(fake));
            out.labels.push_back(labels[g]);
            out.theta.push_back(theta_flat(params[g]));
        }
        produced += B;
        ++batch_index;
    }
    return out;
}

fake_graph_set randg_baseline(const dataset_meta &meta, const generation_config &config, int count) {
    if (count <= 0) fail(errc::argument, "requested fake graph count must be positive");
    if (meta.num_classes < 1) fail(errc::config, "dataset meta reports no classes");
    auto [node_lo, node_hi] = resolve_node_range(meta, config);

    fake_graph_set out;
    out.provenance = generation_provenance(config);
    out.graphs.reserve(count);
    out.labels.reserve(count);

    rng r(config.seed);
    for (int g = 0; g < count; ++g) {
        graph fake;
        fake.directed = meta.directed;
        fake.label = g % meta.num_classes;
        const int n = r.uniform_int(node_lo, node_hi);
        fake.node_count = n;
        fake.adjacency = matrix(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = meta.directed ? 0 : i; j < n; ++j) {
                const double a = r.uniform01() < 0.5 ? 1.0 : 0.0;
                fake.adjacency(i, j) = a;
                if (!meta.directed) fake.adjacency(j, i) = a;
            }

        switch (meta.mode) {
        case feature_mode::raw: {
            fake.features = matrix(n, meta.feature_dim);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < meta.feature_dim; ++j) fake.features(i, j) = r.uniform01();
            break;
        }
        case feature_mode::one_hot_label: {
            fake.features = matrix(n, meta.feature_dim);
            for (int i = 0; i < n; ++i)
                fake.features(i, r.uniform_int(0, meta.feature_dim - 1)) = 1.0;
            break;
        }
        case feature_mode::degree_one_hot:
        case feature_mode::degree_scalar:
        case feature_mode::constant: {
            std::vector<graph> one(1, fake);
            dataset_meta local = meta;
            long clamped = 0;
            encode_features(one, meta.mode, local, &clamped);
            fake.features = std::move(one[0].features);
            break;
        }
        }
        out.labels.push_back(fake.label);
        out.graphs.push_back(std::move(fake));
    }
    return out;
}

void write_fake_set(const std::string &path, const fake_graph_set &set) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(errc::io, "cannot open '" + path + "' for writing");
    nlohmann::json header;
    header["provenance"] = set.provenance;
    header["count"] = set.graphs.size();
    os << header.dump() << '\n';
    for (size_t i = 0; i < set.graphs.size(); ++i) {
        nlohmann::json j = graph_to_json(set.graphs[i]);
        j["sampled_label"] = set.labels[i];
        if (i < set.theta.size() && !set.theta[i].empty()) j["theta_upper"] = set.theta[i];
        os << j.dump() << '\n';
    }
    if (!os) fail(errc::io, "write to '" + path + "' failed");
}

fake_graph_set read_fake_set(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(errc::io, "cannot open '" + path + "' for reading");
    fake_graph_set set;
    std::string line;
    size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            std::ostringstream os;
            os << path << ":" << lineno << ": invalid JSON";
            fail(errc::format, os.str());
        }
        if (!saw_header && !j.contains("n")) {
            set.provenance = j.value("provenance", std::string());
            saw_header = true;
            continue;
        }
        graph g;
        try {
            g = graph_from_json(j);
        } catch (const error &e) {
            std::ostringstream os;
            os << path << ":" << lineno << ": " << e.what();
            fail(errc::format, os.str());
        }
        g.label = j.value("sampled_label", g.label);
        set.labels.push_back(g.label);
        if (j.contains("theta_upper"))
            set.theta.push_back(j.at("theta_upper").get<std::vector<double>>());
        else
            set.theta.emplace_back();
        set.graphs.push_back(std::move(g));
    }
    bool any_theta = false;
    for (const auto &t : set.theta)
        if (!t.empty()) any_theta = true;
    if (!any_theta) set.theta.clear();
    return set;
}

void write_generation_log(const std::string &path, const std::vector<generation_log_row> &rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(errc::io, "cannot open '" + path + "' for writing");
    os << "iteration,objective,ce_term,bn_term,entropy_term\n";
    char buf[256];
    for (const auto &r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", r.iteration, r.objective,
                      r.ce_term, r.bn_term, r.entropy_term);
        os << buf;
    }
    if (!os) fail(errc::io, "write to '" + path + "' failed");
}

} // namespace graphfree
