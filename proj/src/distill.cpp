// SPDX-License-Identifier: Apache-2.0
#include "graphfree/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace graphfree {

namespace {

void check_kd_args(const matrix &t, const matrix &s, double tau) {
    if (!t.same_shape(s)) fail(errc::argument, "kd loss: logit shapes differ");
    if (t.rows() == 0) fail(errc::argument, "kd loss: empty batch");
    if (!(tau > 0.0)) fail(errc::argument, "kd loss: tau must be positive");
}

// Row-wise log-softmax of m/tau; max-shifted for stability.
matrix log_softmax_scaled(const matrix &m, double tau) {
    matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m.cols(); ++j) mx = std::max(mx, m(i, j) / tau);
        double sum = 0.0;
        for (int j = 0; j < m.cols(); ++j) sum += std::exp(m(i, j) / tau - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / tau - lse;
    }
    return out;
}

} // namespace

double kd_loss(const matrix &teacher_logits, const matrix &student_logits, double tau) {
    check_kd_args(teacher_logits, student_logits, tau);
    matrix log_p = log_softmax_scaled(teacher_logits, tau);
    matrix log_q = log_softmax_scaled(student_logits, tau);
    double total = 0.0;
    for (int i = 0; i < log_p.rows(); ++i)
        for (int j = 0; j < log_p.cols(); ++j) {
            const double p = std::exp(log_p(i, j));
            total += p * (log_p(i, j) - log_q(i, j));
        }
    return tau * tau * total / teacher_logits.rows();
}

matrix kd_loss_grad_student(const matrix &teacher_logits, const matrix &student_logits, double tau) {
    check_kd_args(teacher_logits, student_logits, tau);
    matrix p = log_softmax_scaled(teacher_logits, tau);
    matrix q = log_softmax_scaled(student_logits, tau);
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) {
            p(i, j) = std::exp(p(i, j));
            q(i, j) = std::exp(q(i, j));
        }
    matrix g(p.rows(), p.cols());
    const double scale = tau / p.rows();
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) g(i, j) = scale * (q(i, j) - p(i, j));
    return g;
}

std::vector<distill_epoch_metrics> train_student(gnn_model &student, const gnn_model &teacher,
                                                 const std::vector<graph> &transfer,
                                                 const std::vector<graph> &test,
                                                 const distill_config &config,
                                                 const progress_fn &progress) {
    if (transfer.empty()) fail(errc::argument, "distillation: empty transfer set");
    if (student.input_dim != teacher.input_dim)
        fail(errc::argument, "distillation: student/teacher input dims differ");
    if (student.num_classes != teacher.num_classes)
        fail(errc::argument, "distillation: student/teacher class counts differ");
    if (!(config.tau > 0.0)) fail(errc::config, "distillation: tau must be positive");
    if (config.epochs < 0) fail(errc::config, "distillation: epochs must be non-negative");
    if (config.batch_size < 1) fail(errc::config, "distillation: batch_size must be positive");

    std::vector<distill_epoch_metrics> metrics;
    if (config.epochs == 0) return metrics;
    metrics.reserve(config.epochs);

    rng r(config.seed);
    adam_state opt;
    opt.lr = config.base_lr;

    std::vector<size_t> order(transfer.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<graph> batch;
    double best_acc = -1.0;
    std::vector<uint8_t> best_state;

    for (int e = 0; e < config.epochs; ++e) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[r.uniform_int(0, static_cast<int>(i) - 1)]);
        const double lr_scale = static_cast<double>(config.epochs - e) / config.epochs;

        double loss_sum = 0.0;
        long seen = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (size_t i = start; i < stop; ++i) batch.push_back(transfer[order[i]]);
            stacked_batch sb = stack_graphs(batch.data(), batch.size());
            batch_view view = sb.view();

            forward_trace t_tr = model_forward(teacher, view, bn_mode::running);
            forward_trace s_tr = model_forward(student, view, bn_mode::batch);
            const double loss = kd_loss(t_tr.logits, s_tr.logits, config.tau);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "distillation diverged at epoch " << e << " (non-finite kd loss)";
                fail(errc::numeric, os.str());
            }
            loss_sum += loss * static_cast<double>(stop - start);
            seen += static_cast<long>(stop - start);

            update_running_stats(student, s_tr);
            matrix dlogits = kd_loss_grad_student(t_tr.logits, s_tr.logits, config.tau);
            model_grads grads = model_backward(student, s_tr, dlogits);
            adam_step(student, grads, opt, lr_scale);
        }

        distill_epoch_metrics em;
        em.epoch = e;
        em.kd = loss_sum / seen;
        em.test_acc =
            test.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate_accuracy(student, test);
        metrics.push_back(em);
        if (config.keep_best && !test.empty() && em.test_acc > best_acc) {
            best_acc = em.test_acc;
            best_state = save_checkpoint(student);
        }
        if (progress && ((e + 1) % 50 == 0 || e + 1 == config.epochs)) {
            std::ostringstream os;
            os << "epoch " << (e + 1) << "/" << config.epochs << " kd " << em.kd;
            if (!test.empty()) os << " test_acc " << em.test_acc;
            progress(os.str());
        }
    }
    if (!best_state.empty()) student = load_checkpoint(best_state);
    return metrics;
}

} // namespace graphfree
