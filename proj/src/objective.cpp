// SPDX-License-Identifier: Apache-2.0
#include "graphfree/objective.hpp"

#include <cmath>

namespace graphfree {

gen_feature_mode gen_feature_mode_from_string(const std::string &s) {
    if (s == "free") return gen_feature_mode::free;
    if (s == "one_hot") return gen_feature_mode::one_hot;
    if (s == "degree") return gen_feature_mode::degree;
    if (s == "constant") return gen_feature_mode::constant;
    fail(errc::config, "unknown generation feature mode: " + s);
}

std::string to_string(gen_feature_mode m) {
    switch (m) {
    case gen_feature_mode::free: return "free";
    case gen_feature_mode::one_hot: return "one_hot";
    case gen_feature_mode::degree: return "degree";
    case gen_feature_mode::constant: return "constant";
    }
    fail(errc::internal, "bad gen_feature_mode value");
}

gen_feature_mode gen_mode_for(feature_mode m) {
    switch (m) {
    case feature_mode::raw: return gen_feature_mode::free;
    case feature_mode::one_hot_label: return gen_feature_mode::one_hot;
    case feature_mode::degree_one_hot:
    case feature_mode::degree_scalar: return gen_feature_mode::degree;
    case feature_mode::constant: return gen_feature_mode::constant;
    }
    fail(errc::internal, "bad feature_mode value");
}

double bn_regularizer(const forward_trace &trace, const gnn_model &teacher) {
    if (trace.mode != bn_mode::batch)
        fail(errc::argument, "bn_regularizer: trace must use batch statistics");
    if (static_cast<int>(trace.layers.size()) != teacher.layer_count())
        fail(errc::argument, "bn_regularizer: trace does not match model");
    double r = 0.0;
    for (int l = 0; l < teacher.layer_count(); ++l) {
        const bn_layer &bn = teacher.bn[l];
        const layer_trace &lt = trace.layers[l];
        for (size_t c = 0; c < bn.running_mean.size(); ++c) {
            const double dm = lt.mean[c] - bn.running_mean[c];
            const double dv = lt.var[c] - bn.running_var[c];
            r += dm * dm + dv * dv;
        }
    }
    return r;
}

double onehot_entropy(const matrix &omega) {
    if (omega.rows() == 0) return 0.0;
    matrix p = row_softmax(omega);
    double total = 0.0;
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j)
            if (p(i, j) > 0.0) total -= p(i, j) * std::log(p(i, j));
    return total / p.rows();
}

matrix onehot_entropy_grad(const matrix &omega) {
    matrix p = row_softmax(omega);
    matrix g(omega.rows(), omega.cols());
    const double inv_rows = 1.0 / omega.rows();
    for (int i = 0; i < p.rows(); ++i) {
        double ent = 0.0;
        for (int j = 0; j < p.cols(); ++j)
            if (p(i, j) > 0.0) ent -= p(i, j) * std::log(p(i, j));
        for (int j = 0; j < p.cols(); ++j) {
            const double pj = p(i, j);
            g(i, j) = pj > 0.0 ? -pj * (std::log(pj) + ent) * inv_rows : 0.0;
        }
    }
    return g;
}

objective::objective(const gnn_model *teacher, dataset_meta meta, double lambda_bn, double lambda_ent,
                     bool use_bn, bool use_ent)
    : teacher_(teacher), meta_(std::move(meta)), lambda_bn_(lambda_bn), lambda_ent_(lambda_ent),
      use_bn_(use_bn), use_ent_(use_ent) {}

matrix objective::effective_features(const std::vector<const matrix *> &adjacency,
                                     const feature_params &feats) const {
    int total = 0;
    for (const matrix *a : adjacency) total += a->rows();
    switch (feats.mode) {
    case gen_feature_mode::free:
        if (feats.values.rows() != total || feats.values.cols() != teacher_->input_dim)
            fail(errc::argument, "effective_features: free-mode values shape mismatch");
        return feats.values;
    case gen_feature_mode::one_hot:
        if (feats.values.rows() != total || feats.values.cols() != teacher_->input_dim)
            fail(errc::argument, "effective_features: one-hot omega shape mismatch");
        return row_softmax(feats.values);
    case gen_feature_mode::degree: {
        matrix h(total, teacher_->input_dim);
        int row = 0;
        for (const matrix *a : adjacency) {
            auto deg = compute_degrees(*a);
            for (int i = 0; i < a->rows(); ++i, ++row) {
                if (meta_.mode == feature_mode::degree_scalar) {
                    h(row, 0) = deg[i];
                } else {
                    int d = std::min(deg[i], meta_.max_degree);
                    h(row, d) = 1.0;
                }
            }
        }
        return h;
    }
    case gen_feature_mode::constant:
        return matrix(total, teacher_->input_dim, 1.0);
    }
    fail(errc::internal, "bad gen_feature_mode value");
}

objective_eval objective::eval(const std::vector<const matrix *> &adjacency, const std::vector<int> &labels,
                               const feature_params &feats, bool want_feature_grad) const {
    if (adjacency.empty()) fail(errc::argument, "objective: empty batch");
    if (adjacency.size() != labels.size()) fail(errc::argument, "objective: labels/batch size mismatch");

    batch_view view;
    matrix h = effective_features(adjacency, feats);
    view.features = &h;
    view.adjacency = adjacency;
    view.offsets.push_back(0);
    for (const matrix *a : adjacency) view.offsets.push_back(view.offsets.back() + a->rows());

    forward_trace tr = model_forward(*teacher_, view, bn_mode::batch);

    objective_eval out;
    const int m = static_cast<int>(adjacency.size());
    std::vector<double> ce = per_graph_cross_entropy(tr.logits, labels);
    for (double v : ce) out.ce_mean += v;
    out.ce_mean /= m;
    out.bn_term = use_bn_ ? bn_regularizer(tr, *teacher_) : 0.0;
    const bool ent_active = use_ent_ && feats.mode == gen_feature_mode::one_hot;
    out.ent_term = ent_active ? onehot_entropy(feats.values) : 0.0;
    out.total = out.ce_mean + lambda_bn_ * out.bn_term + lambda_ent_ * out.ent_term;
    if (!std::isfinite(out.total)) fail(errc::numeric, "objective: non-finite value");

    out.per_graph.resize(m);
    for (int g = 0; g < m; ++g) out.per_graph[g] = ce[g] + lambda_bn_ * out.bn_term;

    const bool has_params =
        feats.mode == gen_feature_mode::free || feats.mode == gen_feature_mode::one_hot;
    if (want_feature_grad && has_params) {
        matrix dlogits = cross_entropy_grad(tr.logits, labels);
        stat_grads inject;
        const stat_grads *inj = nullptr;
        if (use_bn_ && lambda_bn_ != 0.0) {
            inject.d_mean.resize(teacher_->layer_count());
            inject.d_var.resize(teacher_->layer_count());
            for (int l = 0; l < teacher_->layer_count(); ++l) {
                const bn_layer &bn = teacher_->bn[l];
                const layer_trace &lt = tr.layers[l];
                inject.d_mean[l].resize(bn.running_mean.size());
                inject.d_var[l].resize(bn.running_var.size());
                for (size_t c = 0; c < bn.running_mean.size(); ++c) {
                    inject.d_mean[l][c] = lambda_bn_ * 2.0 * (lt.mean[c] - bn.running_mean[c]);
                    inject.d_var[l][c] = lambda_bn_ * 2.0 * (lt.var[c] - bn.running_var[c]);
                }
            }
            inj = &inject;
        }
        model_grads back = model_backward(*teacher_, tr, dlogits, inj);
        if (feats.mode == gen_feature_mode::free) {
            out.feature_grad = std::move(back.input);
        } else {
            // Chain through the row softmax: dJ/domega_j = p_j*(dh_j - sum_d dh_d*p_d).
            matrix p = row_softmax(feats.values);
            out.feature_grad = matrix(p.rows(), p.cols());
            for (int i = 0; i < p.rows(); ++i) {
                double dot = 0.0;
                for (int j = 0; j < p.cols(); ++j) dot += back.input(i, j) * p(i, j);
                for (int j = 0; j < p.cols(); ++j)
                    out.feature_grad(i, j) = p(i, j) * (back.input(i, j) - dot);
            }
            if (ent_active && lambda_ent_ != 0.0)
                add_inplace(out.feature_grad, onehot_entropy_grad(feats.values), lambda_ent_);
        }
        if (!all_finite(out.feature_grad)) fail(errc::numeric, "objective: non-finite feature gradient");
    }
    return out;
}

objective build_objective(const gnn_model &teacher, const dataset_meta &meta, gen_feature_mode mode,
                          double lambda_bn, double lambda_ent, bool use_bn_reg, bool use_ent_reg) {
    switch (mode) {
    case gen_feature_mode::free:
        break;
    case gen_feature_mode::one_hot:
        if (meta.mode == feature_mode::one_hot_label &&
            static_cast<int>(meta.node_label_vocab.size()) != teacher.input_dim)
            fail(errc::config, "one-hot feature mode: vocabulary size does not match teacher input dim");
        break;
    case gen_feature_mode::degree:
        if (meta.mode == feature_mode::degree_one_hot) {
            if (meta.max_degree + 1 != teacher.input_dim)
                fail(errc::config, "degree feature mode: max_degree+1 does not match teacher input dim");
        } else if (meta.mode == feature_mode::degree_scalar) {
            if (teacher.input_dim != 1)
                fail(errc::config, "degree-scalar feature mode requires teacher input dim 1");
        } else {
            fail(errc::config, "degree feature mode requires a degree-encoded dataset");
        }
        break;
    case gen_feature_mode::constant:
        if (teacher.input_dim != 1)
            fail(errc::config, "constant feature mode requires teacher input dim 1");
        break;
    }
    if (lambda_bn < 0.0 || lambda_ent < 0.0) fail(errc::config, "lambda weights must be nonnegative");
    return objective(&teacher, meta, lambda_bn, lambda_ent, use_bn_reg, use_ent_reg);
}

feature_params init_feature_params(gen_feature_mode mode, int total_nodes, int feature_dim, rng &r) {
    feature_params f;
    f.mode = mode;
    if (mode == gen_feature_mode::free || mode == gen_feature_mode::one_hot) {
        f.values = matrix(total_nodes, feature_dim);
        for (int i = 0; i < total_nodes; ++i)
            for (int j = 0; j < feature_dim; ++j) f.values(i, j) = r.normal();
    }
    return f;
}

} // namespace graphfree
