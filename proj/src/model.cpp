// SPDX-License-Identifier: Apache-2.0
#include "graphfree/model.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace graphfree {

namespace {

std::atomic<long> g_backward_calls{0};

// dst rows [r0, r0+n) = op(P) * src rows [r0, r0+n), with op identity or transpose.
void apply_block(const matrix &p, bool transpose, const matrix &src, int r0, matrix &dst) {
    const int n = p.rows(), d = src.cols();
    for (int i = 0; i < n; ++i) {
        double *out = dst.data() + static_cast<size_t>(r0 + i) * d;
        for (int j = 0; j < n; ++j) {
            const double w = transpose ? p(j, i) : p(i, j);
            if (w == 0.0) continue;
            const double *in = src.data() + static_cast<size_t>(r0 + j) * d;
            for (int c = 0; c < d; ++c) out[c] += w * in[c];
        }
    }
}

void add_bias_rows(matrix &m, const std::vector<double> &bias) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) += bias[j];
}

std::vector<double> column_sums(const matrix &m) {
    std::vector<double> s(m.cols(), 0.0);
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s[j] += m(i, j);
    return s;
}

struct span_d {
    double *p;
    size_t n;
};

std::vector<span_d> param_spans(gnn_model &m) {
    std::vector<span_d> s;
    for (auto &c : m.conv) {
        s.push_back({c.weight.data(), c.weight.size()});
        s.push_back({c.bias.data(), c.bias.size()});
    }
    for (auto &b : m.bn) {
        s.push_back({b.gamma.data(), b.gamma.size()});
        s.push_back({b.beta.data(), b.beta.size()});
    }
    s.push_back({m.cls_weight.data(), m.cls_weight.size()});
    s.push_back({m.cls_bias.data(), m.cls_bias.size()});
    return s;
}

// Same span order as param_spans so params, grads, and Adam state line up.
std::vector<span_d> grad_spans(model_grads &g) {
    std::vector<span_d> s;
    for (size_t l = 0; l < g.conv_weight.size(); ++l) {
        s.push_back({g.conv_weight[l].data(), g.conv_weight[l].size()});
        s.push_back({g.conv_bias[l].data(), g.conv_bias[l].size()});
    }
    for (size_t l = 0; l < g.bn_gamma.size(); ++l) {
        s.push_back({g.bn_gamma[l].data(), g.bn_gamma[l].size()});
        s.push_back({g.bn_beta[l].data(), g.bn_beta[l].size()});
    }
    s.push_back({g.cls_weight.data(), g.cls_weight.size()});
    s.push_back({g.cls_bias.data(), g.cls_bias.size()});
    return s;
}

} // namespace

arch_spec parse_arch(const std::string &s) {
    arch_spec out;
    size_t p1 = s.find('-');
    size_t p2 = p1 == std::string::npos ? std::string::npos : s.find('-', p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        fail(errc::config, "arch string must look like GCN-5-64, got '" + s + "'");
    std::string kind = s.substr(0, p1);
    if (kind == "GCN" || kind == "gcn") out.kind = arch_kind::gcn;
    else if (kind == "GIN" || kind == "gin") out.kind = arch_kind::gin;
    else fail(errc::config, "unknown arch '" + kind + "' (expected GCN or GIN)");
    auto strict_int = [&s](const std::string &part) {
        size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(part, &used);
        } catch (const std::exception &) {
            fail(errc::config, "arch string must look like GCN-5-64, got '" + s + "'");
        }
        if (used != part.size())
            fail(errc::config, "arch string must look like GCN-5-64, got '" + s + "'");
        return v;
    };
    out.layers = strict_int(s.substr(p1 + 1, p2 - p1 - 1));
    out.width = strict_int(s.substr(p2 + 1));
    if (out.layers < 1 || out.width < 1)
        fail(errc::config, "arch layers and width must be positive in '" + s + "'");
    return out;
}

std::string to_string(const arch_spec &a) {
    return std::string(a.kind == arch_kind::gcn ? "GCN" : "GIN") + "-" + std::to_string(a.layers) + "-" +
           std::to_string(a.width);
}

readout_kind readout_from_string(const std::string &s) {
    if (s == "sum") return readout_kind::sum;
    if (s == "mean") return readout_kind::mean;
    fail(errc::config, "unknown readout '" + s + "' (expected sum or mean)");
}

gnn_model make_model(const arch_spec &spec, int input_dim, int num_classes, readout_kind pool, rng &r) {
    if (input_dim < 1 || num_classes < 1) fail(errc::argument, "make_model: dimensions must be positive");
    gnn_model m;
    m.kind = spec.kind;
    m.pool = pool;
    m.input_dim = input_dim;
    m.hidden_dim = spec.width;
    m.num_classes = num_classes;
    m.gin_eps = 0.0;
    auto glorot = [&r](matrix &w) {
        double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) w(i, j) = r.uniform(-limit, limit);
    };
    for (int l = 0; l < spec.layers; ++l) {
        conv_layer c;
        c.weight = matrix(l == 0 ? input_dim : spec.width, spec.width);
        glorot(c.weight);
        c.bias.assign(spec.width, 0.0);
        m.conv.push_back(std::move(c));
        bn_layer b;
        b.gamma.assign(spec.width, 1.0);
        b.beta.assign(spec.width, 0.0);
        b.running_mean.assign(spec.width, 0.0);
        b.running_var.assign(spec.width, 1.0);
        m.bn.push_back(std::move(b));
    }
    m.cls_weight = matrix(spec.width, num_classes);
    glorot(m.cls_weight);
    m.cls_bias.assign(num_classes, 0.0);
    return m;
}

stacked_batch stack_graphs(const graph *graphs, size_t count) {
    if (count == 0) fail(errc::argument, "stack_graphs: empty batch");
    stacked_batch b;
    b.offsets.push_back(0);
    int dim = graphs[0].features.cols();
    int total = 0;
    for (size_t g = 0; g < count; ++g) {
        if (graphs[g].node_count <= 0) fail(errc::argument, "stack_graphs: graph with 0 nodes");
        if (graphs[g].features.cols() != dim) fail(errc::argument, "stack_graphs: mixed feature dims");
        total += graphs[g].node_count;
        b.offsets.push_back(total);
        b.adjacency.push_back(&graphs[g].adjacency);
    }
    b.features = matrix(total, dim);
    for (size_t g = 0; g < count; ++g) {
        const matrix &f = graphs[g].features;
        std::memcpy(b.features.data() + static_cast<size_t>(b.offsets[g]) * dim, f.data(),
                    f.size() * sizeof(double));
    }
    return b;
}

forward_trace model_forward(const gnn_model &model, const batch_view &batch, bn_mode mode) {
    if (!batch.features) fail(errc::argument, "model_forward: null features");
    const int graphs = static_cast<int>(batch.adjacency.size());
    if (graphs == 0 || batch.offsets.size() != static_cast<size_t>(graphs) + 1 || batch.offsets[0] != 0)
        fail(errc::argument, "model_forward: bad batch offsets");
    if (batch.features->cols() != model.input_dim)
        fail(errc::argument, "model_forward: feature dim " + std::to_string(batch.features->cols()) +
                                 " != model input dim " + std::to_string(model.input_dim));
    for (int g = 0; g < graphs; ++g) {
        int n = batch.offsets[g + 1] - batch.offsets[g];
        if (n <= 0) fail(errc::argument, "model_forward: graph with 0 nodes");
        if (batch.adjacency[g]->rows() != n || batch.adjacency[g]->cols() != n)
            fail(errc::argument, "model_forward: adjacency shape mismatch");
    }
    const int total = batch.offsets.back();
    if (batch.features->rows() != total) fail(errc::argument, "model_forward: feature rows != total nodes");

    forward_trace tr;
    tr.mode = mode;
    tr.offsets = batch.offsets;
    tr.input = *batch.features;

    tr.prop.reserve(graphs);
    for (int g = 0; g < graphs; ++g) {
        const matrix &a = *batch.adjacency[g];
        const int n = a.rows();
        matrix p(n, n);
        if (model.kind == arch_kind::gcn) {
            std::vector<double> deg(n, 0.0);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) deg[i] += a(i, j);
                deg[i] += 1.0;  // self-loop
            }
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double b = a(i, j) + (i == j ? 1.0 : 0.0);
                    if (b != 0.0) p(i, j) = b / std::sqrt(deg[i] * deg[j]);
                }
        } else {
            p = a;
            for (int i = 0; i < n; ++i) p(i, i) += 1.0 + model.gin_eps;
        }
        tr.prop.push_back(std::move(p));
    }

    const matrix *x = &tr.input;
    for (int l = 0; l < model.layer_count(); ++l) {
        layer_trace lt;
        lt.agg = matrix(total, x->cols());
        for (int g = 0; g < graphs; ++g) apply_block(tr.prop[g], false, *x, tr.offsets[g], lt.agg);
        matrix pre = matmul(lt.agg, model.conv[l].weight);
        add_bias_rows(pre, model.conv[l].bias);

        const bn_layer &bn = model.bn[l];
        const int width = pre.cols();
        lt.mean.assign(width, 0.0);
        lt.var.assign(width, 0.0);
        if (mode == bn_mode::batch) {
            for (int i = 0; i < pre.rows(); ++i)
                for (int c = 0; c < width; ++c) lt.mean[c] += pre(i, c);
            for (int c = 0; c < width; ++c) lt.mean[c] /= pre.rows();
            for (int i = 0; i < pre.rows(); ++i)
                for (int c = 0; c < width; ++c) {
                    double d = pre(i, c) - lt.mean[c];
                    lt.var[c] += d * d;
                }
            for (int c = 0; c < width; ++c) lt.var[c] /= pre.rows();
        } else {
            lt.mean = bn.running_mean;
            lt.var = bn.running_var;
        }
        std::vector<double> inv_sigma(width);
        for (int c = 0; c < width; ++c) inv_sigma[c] = 1.0 / std::sqrt(lt.var[c] + bn.eps);
        lt.normed = matrix(pre.rows(), width);
        lt.post = matrix(pre.rows(), width);
        for (int i = 0; i < pre.rows(); ++i)
            for (int c = 0; c < width; ++c) {
                double nv = (pre(i, c) - lt.mean[c]) * inv_sigma[c];
                lt.normed(i, c) = nv;
                double y = bn.gamma[c] * nv + bn.beta[c];
                lt.post(i, c) = y > 0.0 ? y : 0.0;
            }
        tr.layers.push_back(std::move(lt));
        x = &tr.layers.back().post;
    }

    tr.pooled = matrix(graphs, model.hidden_dim);
    for (int g = 0; g < graphs; ++g) {
        const int r0 = tr.offsets[g], n = tr.offsets[g + 1] - r0;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < model.hidden_dim; ++c) tr.pooled(g, c) += (*x)(r0 + i, c);
        if (model.pool == readout_kind::mean)
            for (int c = 0; c < model.hidden_dim; ++c) tr.pooled(g, c) /= n;
    }
    tr.logits = matmul(tr.pooled, model.cls_weight);
    add_bias_rows(tr.logits, model.cls_bias);
    return tr;
}

void update_running_stats(gnn_model &model, const forward_trace &trace) {
    if (trace.mode != bn_mode::batch) fail(errc::argument, "update_running_stats: trace is not batch-mode");
    const int total = trace.offsets.back();
    const double correction = total > 1 ? static_cast<double>(total) / (total - 1) : 1.0;
    for (int l = 0; l < model.layer_count(); ++l) {
        bn_layer &bn = model.bn[l];
        const layer_trace &lt = trace.layers[l];
        for (size_t c = 0; c < bn.running_mean.size(); ++c) {
            bn.running_mean[c] = (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * lt.mean[c];
            bn.running_var[c] = (1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * lt.var[c] * correction;
            if (!std::isfinite(bn.running_mean[c]) || !std::isfinite(bn.running_var[c]))
                fail(errc::numeric, "update_running_stats: non-finite running statistics");
        }
    }
}

model_grads make_zero_grads(const gnn_model &model, int total_nodes) {
    model_grads g;
    for (const auto &c : model.conv) {
        g.conv_weight.emplace_back(c.weight.rows(), c.weight.cols());
        g.conv_bias.emplace_back(c.bias.size(), 0.0);
    }
    for (const auto &b : model.bn) {
        g.bn_gamma.emplace_back(b.gamma.size(), 0.0);
        g.bn_beta.emplace_back(b.beta.size(), 0.0);
    }
    g.cls_weight = matrix(model.cls_weight.rows(), model.cls_weight.cols());
    g.cls_bias.assign(model.cls_bias.size(), 0.0);
    g.input = matrix(total_nodes, model.input_dim);
    return g;
}

model_grads model_backward(const gnn_model &model, const forward_trace &trace, const matrix &dlogits,
                           const stat_grads *inject) {
    g_backward_calls.fetch_add(1, std::memory_order_relaxed);
    const int graphs = static_cast<int>(trace.prop.size());
    const int total = trace.offsets.back();
    if (dlogits.rows() != graphs || dlogits.cols() != model.num_classes)
        fail(errc::argument, "model_backward: dlogits shape mismatch");
    if (static_cast<int>(trace.layers.size()) != model.layer_count())
        fail(errc::argument, "model_backward: trace does not match model");
    if (inject && trace.mode != bn_mode::batch)
        fail(errc::argument, "model_backward: statistic injection requires a batch-mode trace");

    model_grads g = make_zero_grads(model, total);

    g.cls_weight = matmul_tn(trace.pooled, dlogits);
    g.cls_bias = column_sums(dlogits);
    matrix dpooled = matmul_nt(dlogits, model.cls_weight);

    matrix dpost(total, model.hidden_dim);
    for (int gi = 0; gi < graphs; ++gi) {
        const int r0 = trace.offsets[gi], n = trace.offsets[gi + 1] - r0;
        const double s = model.pool == readout_kind::mean ? 1.0 / n : 1.0;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < model.hidden_dim; ++c) dpost(r0 + i, c) = dpooled(gi, c) * s;
    }

    for (int l = model.layer_count() - 1; l >= 0; --l) {
        const layer_trace &lt = trace.layers[l];
        const bn_layer &bn = model.bn[l];
        const int width = lt.post.cols();
        const int rows = lt.post.rows();

        // ReLU then BN affine.
        matrix dxhat(rows, width);
        for (int c = 0; c < width; ++c) {
            double dgamma = 0.0, dbeta = 0.0;
            for (int i = 0; i < rows; ++i) {
                double dy = lt.post(i, c) > 0.0 ? dpost(i, c) : 0.0;
                dgamma += dy * lt.normed(i, c);
                dbeta += dy;
                dxhat(i, c) = dy * bn.gamma[c];
            }
            g.bn_gamma[l][c] = dgamma;
            g.bn_beta[l][c] = dbeta;
        }

        // Normalization backward.
        matrix dpre(rows, width);
        for (int c = 0; c < width; ++c) {
            const double sigma = std::sqrt(lt.var[c] + bn.eps);
            if (trace.mode == bn_mode::batch) {
                double sum_dxhat = 0.0, sum_dxhat_x = 0.0, sum_x = 0.0;
                for (int i = 0; i < rows; ++i) {
                    const double xc = lt.normed(i, c) * sigma;  // pre - mean
                    sum_dxhat += dxhat(i, c);
                    sum_dxhat_x += dxhat(i, c) * xc;
                    sum_x += xc;
                }
                double dvar = sum_dxhat_x * (-0.5) / (sigma * sigma * sigma);
                double dmean = -sum_dxhat / sigma + dvar * (-2.0 / rows) * sum_x;
                if (inject) {
                    if (!inject->d_var.empty() && !inject->d_var[l].empty()) dvar += inject->d_var[l][c];
                    if (!inject->d_mean.empty() && !inject->d_mean[l].empty()) dmean += inject->d_mean[l][c];
                }
                for (int i = 0; i < rows; ++i) {
                    const double xc = lt.normed(i, c) * sigma;
                    dpre(i, c) = dxhat(i, c) / sigma + dvar * 2.0 * xc / rows + dmean / rows;
                }
            } else {
                for (int i = 0; i < rows; ++i) dpre(i, c) = dxhat(i, c) / sigma;
            }
        }

        g.conv_weight[l] = matmul_tn(lt.agg, dpre);
        g.conv_bias[l] = column_sums(dpre);
        matrix dagg = matmul_nt(dpre, model.conv[l].weight);

        matrix dx(total, dagg.cols());
        for (int gi = 0; gi < graphs; ++gi) apply_block(trace.prop[gi], true, dagg, trace.offsets[gi], dx);
        if (l == 0) g.input = std::move(dx);
        else dpost = std::move(dx);
    }
    return g;
}

long backward_pass_count() { return g_backward_calls.load(std::memory_order_relaxed); }
void reset_backward_pass_count() { g_backward_calls.store(0, std::memory_order_relaxed); }

double cross_entropy(const matrix &logits, const std::vector<int> &labels) {
    if (logits.rows() != static_cast<int>(labels.size()))
        fail(errc::argument, "cross_entropy: batch size mismatch");
    double total = 0.0;
    for (double v : per_graph_cross_entropy(logits, labels)) total += v;
    return total / logits.rows();
}

std::vector<double> per_graph_cross_entropy(const matrix &logits, const std::vector<int> &labels) {
    if (!all_finite(logits)) fail(errc::numeric, "cross_entropy: non-finite logits");
    std::vector<double> out(labels.size());
    for (int i = 0; i < logits.rows(); ++i) {
        if (labels[i] < 0 || labels[i] >= logits.cols())
            fail(errc::argument, "cross_entropy: label out of range");
        double mx = logits(i, 0);
        for (int j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (int j = 0; j < logits.cols(); ++j) sum += std::exp(logits(i, j) - mx);
        out[i] = std::log(sum) - (logits(i, labels[i]) - mx);
    }
    return out;
}

matrix cross_entropy_grad(const matrix &logits, const std::vector<int> &labels) {
    if (logits.rows() != static_cast<int>(labels.size()))
        fail(errc::argument, "cross_entropy_grad: batch size mismatch");
    matrix g = row_softmax(logits);
    const double inv = 1.0 / logits.rows();
    for (int i = 0; i < g.rows(); ++i) {
        g(i, labels[i]) -= 1.0;
        for (int j = 0; j < g.cols(); ++j) g(i, j) *= inv;
    }
    return g;
}

double accuracy(const matrix &logits, const std::vector<int> &labels) {
    if (logits.rows() != static_cast<int>(labels.size()) || logits.rows() == 0)
        fail(errc::argument, "accuracy: batch size mismatch or empty");
    int correct = 0;
    for (int i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        if (best == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / logits.rows();
}

double evaluate_accuracy(const gnn_model &model, const std::vector<graph> &graphs) {
    if (graphs.empty()) fail(errc::argument, "evaluate_accuracy: empty graph set");
    const size_t chunk = 64;
    int correct = 0;
    for (size_t start = 0; start < graphs.size(); start += chunk) {
        size_t count = std::min(chunk, graphs.size() - start);
        stacked_batch b = stack_graphs(graphs.data() + start, count);
        forward_trace tr = model_forward(model, b.view(), bn_mode::running);
        for (size_t i = 0; i < count; ++i) {
            int best = 0;
            for (int j = 1; j < tr.logits.cols(); ++j)
                if (tr.logits(static_cast<int>(i), j) > tr.logits(static_cast<int>(i), best)) best = j;
            if (best == graphs[start + i].label) ++correct;
        }
    }
    return static_cast<double>(correct) / graphs.size();
}

void adam_step(gnn_model &model, const model_grads &grads, adam_state &state, double lr_scale) {
    if (!state.initialized) {
        state.m = make_zero_grads(model, 0);
        state.v = make_zero_grads(model, 0);
        state.initialized = true;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    auto ps = param_spans(model);
    auto gs = grad_spans(const_cast<model_grads &>(grads));
    auto ms = grad_spans(state.m);
    auto vs = grad_spans(state.v);
    if (ps.size() != gs.size()) fail(errc::argument, "adam_step: gradient structure mismatch");
    const double step = state.lr * lr_scale;
    for (size_t k = 0; k < ps.size(); ++k) {
        if (ps[k].n != gs[k].n) fail(errc::argument, "adam_step: gradient size mismatch");
        for (size_t i = 0; i < ps[k].n; ++i) {
            double gr = gs[k].p[i];
            ms[k].p[i] = state.beta1 * ms[k].p[i] + (1.0 - state.beta1) * gr;
            vs[k].p[i] = state.beta2 * vs[k].p[i] + (1.0 - state.beta2) * gr * gr;
            double mhat = ms[k].p[i] / bc1;
            double vhat = vs[k].p[i] / bc2;
            ps[k].p[i] -= step * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

std::vector<epoch_metrics> train_teacher(gnn_model &model, const dataset_split &split,
                                         const teacher_train_config &config, const progress_fn &progress) {
    if (split.train.empty()) fail(errc::argument, "train_teacher: empty training set");
    if (config.batch_size < 1) fail(errc::argument, "train_teacher: batch_size must be positive");
    std::vector<epoch_metrics> metrics;
    if (config.epochs == 0) return metrics;

    rng r(config.seed);
    adam_state opt;
    opt.lr = config.lr;
    std::vector<int> order(split.train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    std::vector<graph> batch_graphs;
    double best_acc = -1.0;
    std::vector<uint8_t> best_state;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double lr_scale = 1.0;
        if (config.decay_period > 0)
            lr_scale = std::pow(config.lr_decay, static_cast<double>(epoch / config.decay_period));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[r.uniform_int(0, static_cast<int>(i) - 1)]);
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t count = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
            batch_graphs.clear();
            std::vector<int> labels;
            for (size_t i = 0; i < count; ++i) {
                batch_graphs.push_back(split.train[order[start + i]]);
                labels.push_back(batch_graphs.back().label);
            }
            stacked_batch b = stack_graphs(batch_graphs.data(), count);
            forward_trace tr = model_forward(model, b.view(), bn_mode::batch);
            double loss = cross_entropy(tr.logits, labels);
            if (!std::isfinite(loss))
                fail(errc::numeric, "train_teacher: non-finite loss at epoch " + std::to_string(epoch));
            loss_sum += loss * count;
            update_running_stats(model, tr);
            model_grads g = model_backward(model, tr, cross_entropy_grad(tr.logits, labels));
            if (config.weight_decay > 0.0) {
                for (int l = 0; l < model.layer_count(); ++l)
                    for (size_t k = 0; k < g.conv_weight[l].size(); ++k)
                        g.conv_weight[l].data()[k] += config.weight_decay * model.conv[l].weight.data()[k];
                for (size_t k = 0; k < g.cls_weight.size(); ++k)
                    g.cls_weight.data()[k] += config.weight_decay * model.cls_weight.data()[k];
            }
            adam_step(model, g, opt, lr_scale);
        }
        epoch_metrics em;
        em.epoch = epoch;
        em.train_loss = loss_sum / split.train.size();
        em.test_acc = split.test.empty() ? std::nan("") : evaluate_accuracy(model, split.test);
        metrics.push_back(em);
        if (config.keep_best && !split.test.empty() && em.test_acc > best_acc) {
            best_acc = em.test_acc;
            best_state = save_checkpoint(model);
        }
        if (progress) {
            std::ostringstream os;
            os << "epoch " << epoch << " train_loss " << em.train_loss << " test_acc " << em.test_acc;
            progress(os.str());
        }
    }
    if (!best_state.empty()) model = load_checkpoint(best_state);
    return metrics;
}

namespace {

constexpr char kCkptMagic[8] = {'G', 'F', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kCkptVersion = 1;

void put_bytes(std::vector<uint8_t> &out, const void *p, size_t n) {
    const uint8_t *b = static_cast<const uint8_t *>(p);
    out.insert(out.end(), b, b + n);
}
template <typename T> void put(std::vector<uint8_t> &out, T v) { put_bytes(out, &v, sizeof(T)); }
void put_doubles(std::vector<uint8_t> &out, const double *p, size_t n) { put_bytes(out, p, n * sizeof(double)); }

struct reader {
    const std::vector<uint8_t> &buf;
    size_t pos = 0;
    void get_bytes(void *p, size_t n) {
        if (pos + n > buf.size()) fail(errc::format, "checkpoint truncated");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    template <typename T> T get() {
        T v;
        get_bytes(&v, sizeof(T));
        return v;
    }
    void get_doubles(double *p, size_t n) { get_bytes(p, n * sizeof(double)); }
};

} // namespace

std::vector<uint8_t> save_checkpoint(const gnn_model &model) {
    std::vector<uint8_t> out;
    put_bytes(out, kCkptMagic, sizeof(kCkptMagic));
    put<uint32_t>(out, kCkptVersion);
    put<uint8_t>(out, model.kind == arch_kind::gcn ? 0 : 1);
    put<uint8_t>(out, model.pool == readout_kind::sum ? 0 : 1);
    put<uint16_t>(out, 0);
    put<int32_t>(out, model.layer_count());
    put<int32_t>(out, model.input_dim);
    put<int32_t>(out, model.hidden_dim);
    put<int32_t>(out, model.num_classes);
    put<double>(out, model.gin_eps);
    for (int l = 0; l < model.layer_count(); ++l) {
        const conv_layer &c = model.conv[l];
        const bn_layer &b = model.bn[l];
        put<double>(out, b.momentum);
        put<double>(out, b.eps);
        put_doubles(out, c.weight.data(), c.weight.size());
        put_doubles(out, c.bias.data(), c.bias.size());
        put_doubles(out, b.gamma.data(), b.gamma.size());
        put_doubles(out, b.beta.data(), b.beta.size());
        put_doubles(out, b.running_mean.data(), b.running_mean.size());
        put_doubles(out, b.running_var.data(), b.running_var.size());
    }
    put_doubles(out, model.cls_weight.data(), model.cls_weight.size());
    put_doubles(out, model.cls_bias.data(), model.cls_bias.size());
    return out;
}

gnn_model load_checkpoint(const std::vector<uint8_t> &bytes) {
    reader rd{bytes};
    char magic[8];
    rd.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) fail(errc::format, "checkpoint: bad magic");
    uint32_t ver = rd.get<uint32_t>();
    if (ver != kCkptVersion)
        fail(errc::format, "checkpoint: unsupported format version " + std::to_string(ver));
    uint8_t kind = rd.get<uint8_t>();
    uint8_t pool = rd.get<uint8_t>();
    rd.get<uint16_t>();
    if (kind > 1) fail(errc::format, "checkpoint: unknown arch tag");
    if (pool > 1) fail(errc::format, "checkpoint: unknown readout tag");
    int32_t layers = rd.get<int32_t>();
    int32_t input_dim = rd.get<int32_t>();
    int32_t hidden = rd.get<int32_t>();
    int32_t classes = rd.get<int32_t>();
    if (layers < 1 || input_dim < 1 || hidden < 1 || classes < 1)
        fail(errc::format, "checkpoint: bad dimensions");

    gnn_model m;
    m.kind = kind == 0 ? arch_kind::gcn : arch_kind::gin;
    m.pool = pool == 0 ? readout_kind::sum : readout_kind::mean;
    m.input_dim = input_dim;
    m.hidden_dim = hidden;
    m.num_classes = classes;
    m.gin_eps = rd.get<double>();
    for (int l = 0; l < layers; ++l) {
        conv_layer c;
        bn_layer b;
        b.momentum = rd.get<double>();
        b.eps = rd.get<double>();
        c.weight = matrix(l == 0 ? input_dim : hidden, hidden);
        rd.get_doubles(c.weight.data(), c.weight.size());
        c.bias.resize(hidden);
        rd.get_doubles(c.bias.data(), c.bias.size());
        b.gamma.resize(hidden);
        rd.get_doubles(b.gamma.data(), b.gamma.size());
        b.beta.resize(hidden);
        rd.get_doubles(b.beta.data(), b.beta.size());
        b.running_mean.resize(hidden);
        rd.get_doubles(b.running_mean.data(), b.running_mean.size());
        b.running_var.resize(hidden);
        rd.get_doubles(b.running_var.data(), b.running_var.size());
        m.conv.push_back(std::move(c));
        m.bn.push_back(std::move(b));
    }
    m.cls_weight = matrix(hidden, classes);
    rd.get_doubles(m.cls_weight.data(), m.cls_weight.size());
    m.cls_bias.resize(classes);
    rd.get_doubles(m.cls_bias.data(), m.cls_bias.size());
    if (rd.pos != bytes.size()) fail(errc::format, "checkpoint: trailing bytes");
    return m;
}

void save_checkpoint_file(const gnn_model &model, const std::string &path) {
    auto bytes = save_checkpoint(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write " + path);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(errc::io, "short write to " + path);
}

gnn_model load_checkpoint_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_checkpoint(bytes);
}

} // namespace graphfree
