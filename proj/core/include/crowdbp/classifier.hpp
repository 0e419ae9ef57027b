#pragma once

#include <cstdint>
#include <string_view>

#include "crowdbp/common.hpp"

namespace crowdbp {

enum class ClassifierKind { Logistic, Mlp1 };

ClassifierKind parse_classifier_kind(std::string_view text);
const char* to_string(ClassifierKind kind);

struct ClassifierConfig
{
    ClassifierKind kind = ClassifierKind::Logistic;
    Index hidden_units = 16;
    double l2_lambda = 1e-4;
    /// Mlp1 hidden weights start uniform in [-init_scale, init_scale]. The
    /// output layer (all of a logistic model) starts at zero, so an untrained
    /// model predicts exactly uniform rows.
    double init_scale = 0.1;
    Index epochs = 50;
    double learning_rate = 0.1;
    bool backtracking = false;
};

/**
 * Probabilistic classifier f_phi(k; x).
 *
 * Logistic: softmax(W x + b). Mlp1: softmax(W2 tanh(W1 x + b1) + b2).
 * All parameters live in one flat vector so that gradients and finite
 * differences share a layout.
 */
class ClassifierModel
{
public:
    ClassifierModel() = default;
    ClassifierModel(ClassifierKind kind, Index input_dim, Index num_classes, Index hidden_units,
                    double l2_lambda, double init_scale, std::uint64_t seed);

    static ClassifierModel from_config(const ClassifierConfig& config, Index input_dim, Index num_classes,
                                       std::uint64_t seed);

    ClassifierKind kind() const noexcept { return kind_; }
    Index input_dim() const noexcept { return input_dim_; }
    Index num_classes() const noexcept { return num_classes_; }
    Index hidden_units() const noexcept { return hidden_; }
    double l2_lambda() const noexcept { return l2_lambda_; }

    const Vector& parameters() const noexcept { return params_; }
    void set_parameters(Vector params);

    /// N x K rows of class probabilities.
    Matrix predict_proba(const Matrix& features) const;

    /// -sum_i sum_k q_ik log f(k; x_i) + l2_lambda * ||phi||^2.
    double loss(const Matrix& features, const Matrix& q) const;
    /// Gradient of loss() with respect to parameters().
    Vector gradient(const Matrix& features, const Matrix& q) const;

private:
    struct Forward
    {
        Matrix hidden;  // N x H (mlp1 only)
        Matrix logits;  // N x K
    };

    Forward forward(const Matrix& features) const;
    void check_width(const Matrix& features) const;

    ClassifierKind kind_ = ClassifierKind::Logistic;
    Index input_dim_ = 0;
    Index num_classes_ = 0;
    Index hidden_ = 0;
    double l2_lambda_ = 0.0;
    Vector params_;
};

double loss_weighted(const ClassifierModel& model, const Matrix& features, const Matrix& q);

/// Full-batch gradient descent on loss_weighted. The step is `learning_rate`
/// times the per-task mean gradient; with backtracking the step is halved
/// until the loss does not increase. Returns the trained copy.
ClassifierModel fit_weighted(ClassifierModel model, const Matrix& features, const Matrix& q, Index epochs,
                             double learning_rate, bool backtracking = false);

/// Caps every probability at c and spreads the removed mass evenly over the
/// classes still below the cap, repeating until no entry exceeds c.
Matrix clip_probs(const Matrix& rows, double c);

} // namespace crowdbp
