// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/model.hpp"

namespace graphfree {

struct distill_config {
    double tau = 2.0;
    int epochs = 400;
    int batch_size = 32;
    double base_lr = 0.01;  // Adam rate, multiplied by a linear-to-zero schedule
    bool keep_best = false; // restore the highest-test-accuracy epoch after training
    uint64_t seed = 1;
};

// tau^2 * mean over rows of KL(softmax(teacher/tau) || softmax(student/tau)).
double kd_loss(const matrix &teacher_logits, const matrix &student_logits, double tau);

// d(kd_loss)/d(student_logits) = tau * (softmax(s/tau) - softmax(t/tau)) / rows.
// The teacher side receives no gradient.
matrix kd_loss_grad_student(const matrix &teacher_logits, const matrix &student_logits, double tau);

struct distill_epoch_metrics {
    int epoch = 0;
    double kd = 0.0;        // mean kd_loss over the epoch's batches
    double test_acc = 0.0;  // NaN when no test set is supplied
};

// Minimizes kd_loss over the transfer set with Adam; the teacher runs on its
// running statistics and stays frozen, the student trains on batch statistics.
// Learning rate multiplier for epoch e (0-based) is (epochs - e) / epochs.
std::vector<distill_epoch_metrics> train_student(gnn_model &student, const gnn_model &teacher,
                                                 const std::vector<graph> &transfer,
                                                 const std::vector<graph> &test,
                                                 const distill_config &config,
                                                 const progress_fn &progress = nullptr);

// Fraction of argmax-correct predictions under running statistics.
inline double evaluate(const gnn_model &model, const std::vector<graph> &graphs) {
    return evaluate_accuracy(model, graphs);
}

} // namespace graphfree
