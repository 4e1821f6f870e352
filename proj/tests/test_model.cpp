// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "graphfree/model.hpp"
#include "graphfree/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

using namespace graphfree;

namespace {

graph random_graph(int n, int dim, double edge_p, int label, rng &r) {
    graph g;
    g.node_count = n;
    g.label = label;
    g.adjacency = matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (r.uniform01() < edge_p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
    g.features = matrix(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) g.features(i, j) = r.normal();
    return g;
}

// Central finite difference of the batch cross entropy in one scalar slot.
double fd_slot(double *slot, const gnn_model &model, const batch_view &view,
               const std::vector<int> &labels, bn_mode mode, double h) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = cross_entropy(model_forward(model, view, mode).logits, labels);
    *slot = saved - h;
    const double down = cross_entropy(model_forward(model, view, mode).logits, labels);
    *slot = saved;
    return (up - down) / (2.0 * h);
}

struct gradcheck_stats {
    double gap = 0.0, scale = 1e-12;
    void add(double analytic, double numeric) {
        gap = std::max(gap, std::abs(analytic - numeric));
        scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
    }
    double rel() const { return gap / scale; }
};

// Compares model_backward against finite differences over every parameter and
// the input features.
double full_gradcheck(gnn_model &model, std::vector<graph> &graphs, bn_mode mode) {
    stacked_batch sb = stack_graphs(graphs.data(), graphs.size());
    batch_view view = sb.view();
    std::vector<int> labels;
    for (const auto &g : graphs) labels.push_back(g.label);

    forward_trace tr = model_forward(model, view, mode);
    matrix dlogits = cross_entropy_grad(tr.logits, labels);
    model_grads grads = model_backward(model, tr, dlogits);

    const double h = 1e-6;
    gradcheck_stats st;
    for (int l = 0; l < model.layer_count(); ++l) {
        matrix &w = model.conv[l].weight;
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j)
                st.add(grads.conv_weight[l](i, j), fd_slot(&w(i, j), model, view, labels, mode, h));
        for (size_t c = 0; c < model.conv[l].bias.size(); ++c)
            st.add(grads.conv_bias[l][c],
                   fd_slot(&model.conv[l].bias[c], model, view, labels, mode, h));
        for (size_t c = 0; c < model.bn[l].gamma.size(); ++c) {
            st.add(grads.bn_gamma[l][c],
                   fd_slot(&model.bn[l].gamma[c], model, view, labels, mode, h));
            st.add(grads.bn_beta[l][c],
                   fd_slot(&model.bn[l].beta[c], model, view, labels, mode, h));
        }
    }
    for (int i = 0; i < model.cls_weight.rows(); ++i)
        for (int j = 0; j < model.cls_weight.cols(); ++j)
            st.add(grads.cls_weight(i, j),
                   fd_slot(&model.cls_weight(i, j), model, view, labels, mode, h));
    for (size_t c = 0; c < model.cls_bias.size(); ++c)
        st.add(grads.cls_bias[c], fd_slot(&model.cls_bias[c], model, view, labels, mode, h));

    // Input features: perturb the stacked copy the view points at.
    for (int i = 0; i < sb.features.rows(); ++i)
        for (int j = 0; j < sb.features.cols(); ++j)
            st.add(grads.input(i, j), fd_slot(&sb.features(i, j), model, view, labels, mode, h));
    return st.rel();
}

} // namespace

TEST_CASE("parse_arch accepts the naming convention and rejects junk") {
    arch_spec a = parse_arch("GCN-5-64");
    CHECK(a.kind == arch_kind::gcn);
    CHECK(a.layers == 5);
    CHECK(a.width == 64);
    arch_spec b = parse_arch("gin-3-32");
    CHECK(b.kind == arch_kind::gin);
    CHECK(to_string(b) == "GIN-3-32");

    for (const char *bad : {"GCN-5", "MLP-3-32", "GCN-0-16", "GCN-3--2", "GCN-3-32-7", ""})
        CHECK_THROWS_AS(parse_arch(bad), error);
    CHECK(readout_from_string("sum") == readout_kind::sum);
    CHECK(readout_from_string("mean") == readout_kind::mean);
    CHECK_THROWS_AS(readout_from_string("max"), error);
}

TEST_CASE("stack_graphs concatenates rows and tracks offsets") {
    rng r(1);
    std::vector<graph> gs = {random_graph(3, 4, 0.5, 0, r), random_graph(5, 4, 0.5, 1, r)};
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    CHECK(sb.offsets == std::vector<int>{0, 3, 8});
    CHECK(sb.features.rows() == 8);
    CHECK(sb.features(3, 2) == gs[1].features(0, 2));
    CHECK(sb.adjacency.size() == 2);

    gs[1].features = matrix(5, 3);  // mismatched width
    CHECK_THROWS_AS(stack_graphs(gs.data(), gs.size()), error);
}

TEST_CASE("GCN and GIN propagation operators on a 2-node path") {
    rng r(3);
    graph g = random_graph(2, 3, 0.0, 0, r);
    g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;

    gnn_model gcn = make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r);
    stacked_batch sb = stack_graphs(&g, 1);
    forward_trace tr = model_forward(gcn, sb.view(), bn_mode::batch);
    // A+I = all-ones, degrees 2 -> every entry 1/2.
    REQUIRE(tr.prop.size() == 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(tr.prop[0](i, j) == doctest::Approx(0.5));

    gnn_model gin = make_model(parse_arch("GIN-1-4"), 3, 2, readout_kind::sum, r);
    forward_trace tg = model_forward(gin, sb.view(), bn_mode::batch);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(tg.prop[0](i, j) == doctest::Approx(1.0));
}

TEST_CASE("forward matches a hand computation with BN neutralized") {
    // One graph: path 0-1, features eye-ish, weights identity, BN frozen to the
    // identity transform (running stats mean 0, var 1-eps), sum readout.
    graph g;
    g.node_count = 2;
    g.label = 0;
    g.adjacency = matrix(2, 2);
    g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
    g.features = matrix(2, 2);
    g.features(0, 0) = 2.0;
    g.features(1, 1) = 4.0;

    rng r(5);
    gnn_model m = make_model(parse_arch("GCN-1-2"), 2, 2, readout_kind::sum, r);
    m.conv[0].weight = matrix(2, 2);
    m.conv[0].weight(0, 0) = m.conv[0].weight(1, 1) = 1.0;
    m.conv[0].bias = {0.0, 0.0};
    for (auto &bn : m.bn)
        for (size_t c = 0; c < bn.running_mean.size(); ++c) {
            bn.running_mean[c] = 0.0;
            bn.running_var[c] = 1.0 - bn.eps;
        }
    m.cls_weight = matrix(2, 2);
    m.cls_weight(0, 0) = 1.0;
    m.cls_weight(1, 1) = -1.0;
    m.cls_bias = {0.25, 0.0};

    stacked_batch sb = stack_graphs(&g, 1);
    forward_trace tr = model_forward(m, sb.view(), bn_mode::running);
    // A_hat*X = [[1,2],[1,2]]; identity W and BN; ReLU no-op; sum pool = [2,4].
    CHECK(tr.pooled(0, 0) == doctest::Approx(2.0));
    CHECK(tr.pooled(0, 1) == doctest::Approx(4.0));
    // Logits = pooled * cls_weight + bias = [2.25, -4].
    CHECK(tr.logits(0, 0) == doctest::Approx(2.25));
    CHECK(tr.logits(0, 1) == doctest::Approx(-4.0));

    // Mean readout halves the pooled vector.
    m.pool = readout_kind::mean;
    forward_trace tm = model_forward(m, sb.view(), bn_mode::running);
    CHECK(tm.pooled(0, 0) == doctest::Approx(1.0));
    CHECK(tm.pooled(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("batch-mode BN standardizes each channel") {
    rng r(7);
    std::vector<graph> gs = {random_graph(6, 3, 0.5, 0, r), random_graph(5, 3, 0.4, 1, r)};
    gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, r);
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    forward_trace tr = model_forward(m, sb.view(), bn_mode::batch);

    for (const auto &lt : tr.layers) {
        const int T = lt.normed.rows();
        for (int c = 0; c < lt.normed.cols(); ++c) {
            double mean = 0.0;
            for (int i = 0; i < T; ++i) mean += lt.normed(i, c);
            mean /= T;
            double var = 0.0;
            for (int i = 0; i < T; ++i) var += (lt.normed(i, c) - mean) * (lt.normed(i, c) - mean);
            var /= T;
            CHECK(std::abs(mean) < 1e-10);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps in the denominator
        }
    }
}

TEST_CASE("update_running_stats applies the momentum rule with unbiased variance") {
    rng r(9);
    std::vector<graph> gs = {random_graph(4, 3, 0.5, 0, r), random_graph(3, 3, 0.5, 1, r)};
    gnn_model m = make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r);
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    forward_trace tr = model_forward(m, sb.view(), bn_mode::batch);

    const double rm0 = m.bn[0].running_mean[1];
    const double rv0 = m.bn[0].running_var[1];
    const int T = sb.features.rows();
    update_running_stats(m, tr);
    const double unbiased = tr.layers[0].var[1] * T / (T - 1);
    CHECK(m.bn[0].running_mean[1] ==
          doctest::Approx(0.9 * rm0 + 0.1 * tr.layers[0].mean[1]).epsilon(1e-12));
    CHECK(m.bn[0].running_var[1] == doctest::Approx(0.9 * rv0 + 0.1 * unbiased).epsilon(1e-12));

    // Running-mode traces carry no batch statistics to fold in.
    forward_trace te = model_forward(m, sb.view(), bn_mode::running);
    CHECK_THROWS_AS(update_running_stats(m, te), error);
}

TEST_CASE("logits are invariant to node relabeling") {
    rng r(11);
    graph g = random_graph(7, 4, 0.5, 0, r);
    // Reverse-order permutation of nodes.
    graph p = g;
    const int n = g.node_count;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) p.adjacency(n - 1 - i, n - 1 - j) = g.adjacency(i, j);
        for (int c = 0; c < 4; ++c) p.features(n - 1 - i, c) = g.features(i, c);
    }
    for (auto pool : {readout_kind::sum, readout_kind::mean}) {
        gnn_model m = make_model(parse_arch("GIN-2-5"), 4, 3, pool, r);
        stacked_batch a = stack_graphs(&g, 1), b = stack_graphs(&p, 1);
        forward_trace ta = model_forward(m, a.view(), bn_mode::batch);
        forward_trace tb = model_forward(m, b.view(), bn_mode::batch);
        for (int j = 0; j < 3; ++j)
            CHECK(ta.logits(0, j) == doctest::Approx(tb.logits(0, j)).epsilon(1e-10));
    }
}

TEST_CASE("backward matches finite differences everywhere") {
    rng r(13);
    std::vector<graph> gs = {random_graph(4, 3, 0.6, 0, r), random_graph(5, 3, 0.4, 1, r),
                             random_graph(3, 3, 0.7, 1, r)};

    SUBCASE("GCN, batch statistics, sum readout") {
        gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, r);
        CHECK(full_gradcheck(m, gs, bn_mode::batch) < 1e-5);
    }
    SUBCASE("GIN, batch statistics, mean readout") {
        gnn_model m = make_model(parse_arch("GIN-2-3"), 3, 2, readout_kind::mean, r);
        CHECK(full_gradcheck(m, gs, bn_mode::batch) < 1e-5);
    }
    SUBCASE("GCN, running statistics") {
        gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, r);
        for (auto &bn : m.bn)
            for (size_t c = 0; c < bn.running_mean.size(); ++c) {
                bn.running_mean[c] = 0.2 * r.normal();
                bn.running_var[c] = std::exp(0.2 * r.normal());
            }
        CHECK(full_gradcheck(m, gs, bn_mode::running) < 1e-5);
    }
}

TEST_CASE("backward counter instruments every call") {
    rng r(15);
    std::vector<graph> gs = {random_graph(3, 3, 0.5, 0, r)};
    gnn_model m = make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r);
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    forward_trace tr = model_forward(m, sb.view(), bn_mode::batch);

    reset_backward_pass_count();
    CHECK(backward_pass_count() == 0);
    matrix dlogits = cross_entropy_grad(tr.logits, {0});
    model_backward(m, tr, dlogits);
    model_backward(m, tr, dlogits);
    CHECK(backward_pass_count() == 2);
    reset_backward_pass_count();
}

TEST_CASE("cross entropy values and gradient") {
    matrix logits(1, 2);
    logits(0, 0) = 1.0;
    logits(0, 1) = 2.0;
    // -log softmax[1] = log(1 + e^-1).
    CHECK(cross_entropy(logits, {1}) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));

    matrix two(2, 3);
    two(0, 0) = 0.3; two(0, 1) = -1.0; two(0, 2) = 0.9;
    two(1, 0) = -0.2; two(1, 1) = 0.4; two(1, 2) = 0.0;
    std::vector<int> labels = {2, 0};
    auto per = per_graph_cross_entropy(two, labels);
    CHECK(cross_entropy(two, labels) == doctest::Approx((per[0] + per[1]) / 2.0).epsilon(1e-12));

    matrix g = cross_entropy_grad(two, labels);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
            matrix up = two, dn = two;
            up(i, j) += h;
            dn(i, j) -= h;
            const double fd = (cross_entropy(up, labels) - cross_entropy(dn, labels)) / (2 * h);
            CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }

    CHECK_THROWS_AS(cross_entropy(two, {0}), error);
    CHECK_THROWS_AS(cross_entropy(two, {2, 3}), error);
    CHECK(accuracy(two, {2, 1}) == doctest::Approx(1.0));
    CHECK(accuracy(two, {0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("adam_step descends a simple objective") {
    rng r(17);
    std::vector<graph> gs = {random_graph(4, 3, 0.5, 0, r), random_graph(4, 3, 0.5, 1, r)};
    gnn_model m = make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r);
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    std::vector<int> labels = {0, 1};

    adam_state opt;
    opt.lr = 0.05;
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 40; ++step) {
        forward_trace tr = model_forward(m, sb.view(), bn_mode::batch);
        const double loss = cross_entropy(tr.logits, labels);
        if (step == 0) first = loss;
        last = loss;
        model_grads grads = model_backward(m, tr, cross_entropy_grad(tr.logits, labels));
        adam_step(m, grads, opt);
    }
    CHECK(last < first * 0.5);

    // lr_scale 0 freezes the parameters.
    const double w = m.conv[0].weight(0, 0);
    forward_trace tr = model_forward(m, sb.view(), bn_mode::batch);
    model_grads grads = model_backward(m, tr, cross_entropy_grad(tr.logits, labels));
    adam_step(m, grads, opt, 0.0);
    CHECK(m.conv[0].weight(0, 0) == w);
}

TEST_CASE("train_teacher contract") {
    rng r(19);
    dataset_split split;
    for (int i = 0; i < 12; ++i) split.train.push_back(random_graph(4 + i % 3, 3, 0.5, i % 2, r));
    for (int i = 0; i < 4; ++i) split.test.push_back(random_graph(4 + i % 3, 3, 0.5, i % 2, r));

    teacher_train_config tc;
    tc.epochs = 0;
    rng mr(21);
    gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, mr);
    std::vector<uint8_t> before = save_checkpoint(m);
    CHECK(train_teacher(m, split, tc).empty());
    CHECK(save_checkpoint(m) == before);

    tc.epochs = 15;
    tc.batch_size = 4;
    std::vector<epoch_metrics> a = train_teacher(m, split, tc);
    REQUIRE(a.size() == 15);
    CHECK(a.back().train_loss < a.front().train_loss);

    // Same seed, fresh model: identical trajectory.
    rng mr2(21);
    gnn_model m2 = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, mr2);
    std::vector<epoch_metrics> b = train_teacher(m2, split, tc);
    REQUIRE(b.size() == a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].train_loss == b[i].train_loss);
        CHECK(a[i].test_acc == b[i].test_acc);
    }
    CHECK(save_checkpoint(m) == save_checkpoint(m2));

    dataset_split empty;
    CHECK_THROWS_AS(train_teacher(m, empty, tc), error);
}

TEST_CASE("train_teacher keep_best restores the peak-accuracy epoch") {
    rng r(31);
    dataset_split split;
    for (int i = 0; i < 12; ++i) split.train.push_back(random_graph(4 + i % 3, 3, 0.5, i % 2, r));
    for (int i = 0; i < 6; ++i) split.test.push_back(random_graph(4 + i % 3, 3, 0.5, i % 2, r));

    teacher_train_config tc;
    tc.epochs = 20;
    tc.batch_size = 4;
    tc.keep_best = true;
    rng mr(33);
    gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, mr);
    std::vector<epoch_metrics> hist = train_teacher(m, split, tc);
    double peak = -1.0;
    for (const auto &em : hist) peak = std::max(peak, em.test_acc);
    CHECK(evaluate_accuracy(m, split.test) == doctest::Approx(peak).epsilon(1e-12));

    // Without keep_best the model stays at the final epoch.
    tc.keep_best = false;
    rng mr2(33);
    gnn_model m2 = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, mr2);
    std::vector<epoch_metrics> hist2 = train_teacher(m2, split, tc);
    CHECK(evaluate_accuracy(m2, split.test) == doctest::Approx(hist2.back().test_acc).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip is bit exact") {
    rng r(23);
    gnn_model m = make_model(parse_arch("GIN-3-5"), 4, 3, readout_kind::mean, r);
    m.bn[1].running_mean[2] = 0.75;
    m.bn[2].running_var[0] = 2.5;

    std::vector<uint8_t> bytes = save_checkpoint(m);
    gnn_model back = load_checkpoint(bytes);
    CHECK(save_checkpoint(back) == bytes);
    CHECK(back.kind == arch_kind::gin);
    CHECK(back.pool == readout_kind::mean);
    CHECK(back.hidden_dim == 5);
    CHECK(back.bn[1].running_mean[2] == 0.75);

    // Same logits after reload.
    std::vector<graph> gs = {random_graph(4, 4, 0.5, 0, r)};
    stacked_batch sb = stack_graphs(gs.data(), gs.size());
    forward_trace t1 = model_forward(m, sb.view(), bn_mode::running);
    forward_trace t2 = model_forward(back, sb.view(), bn_mode::running);
    for (int j = 0; j < 3; ++j) CHECK(t1.logits(0, j) == t2.logits(0, j));

    SUBCASE("corrupted magic") {
        bytes[0] ^= 0xff;
        CHECK_THROWS_AS(load_checkpoint(bytes), error);
    }
    SUBCASE("truncated payload") {
        bytes.resize(bytes.size() / 2);
        CHECK_THROWS_AS(load_checkpoint(bytes), error);
    }
    SUBCASE("trailing garbage") {
        bytes.push_back(0);
        CHECK_THROWS_AS(load_checkpoint(bytes), error);
    }
    SUBCASE("file round trip") {
        namespace fs = std::filesystem;
        const std::string path = (fs::temp_directory_path() / "graphfree_ckpt_test.bin").string();
        save_checkpoint_file(m, path);
        gnn_model fromfile = load_checkpoint_file(path);
        CHECK(save_checkpoint(fromfile) == save_checkpoint(m));
        fs::remove(path);
        CHECK_THROWS_AS(load_checkpoint_file(path), error);
    }
}

TEST_CASE("evaluate_accuracy agrees with per-graph eval-mode forwards") {
    rng r(25);
    std::vector<graph> gs;
    for (int i = 0; i < 70; ++i) gs.push_back(random_graph(3 + i % 4, 3, 0.5, i % 2, r));
    gnn_model m = make_model(parse_arch("GCN-2-4"), 3, 2, readout_kind::sum, r);

    int hits = 0;
    for (const auto &g : gs) {
        stacked_batch sb = stack_graphs(&g, 1);
        forward_trace tr = model_forward(m, sb.view(), bn_mode::running);
        int best = 0;
        for (int j = 1; j < 2; ++j)
            if (tr.logits(0, j) > tr.logits(0, best)) best = j;
        hits += best == g.label ? 1 : 0;
    }
    CHECK(evaluate_accuracy(m, gs) == doctest::Approx(static_cast<double>(hits) / gs.size()));
    CHECK_THROWS_AS(evaluate_accuracy(m, {}), error);
}

TEST_CASE("model_forward validates its inputs") {
    rng r(27);
    gnn_model m = make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r);
    graph g = random_graph(3, 3, 0.5, 0, r);
    stacked_batch sb = stack_graphs(&g, 1);

    batch_view bad = sb.view();
    bad.offsets = {0, 2};  // does not cover the feature rows
    CHECK_THROWS_AS(model_forward(m, bad, bn_mode::batch), error);

    graph wrong = random_graph(3, 5, 0.5, 0, r);  // feature width mismatch
    stacked_batch sw = stack_graphs(&wrong, 1);
    CHECK_THROWS_AS(model_forward(m, sw.view(), bn_mode::batch), error);
}
