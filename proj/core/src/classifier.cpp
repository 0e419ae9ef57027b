#include "crowdbp/classifier.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "crowdbp/rng.hpp"

namespace crowdbp {

namespace {

using ConstMap = Eigen::Map<const Matrix>;

// Row-wise log-softmax of the logits.
Matrix log_softmax(const Matrix& logits)
{
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        double total = 0.0;
        for (Eigen::Index k = 0; k < logits.cols(); ++k) total += std::exp(logits(i, k) - top);
        const double lse = top + std::log(total);
        out.row(i) = logits.row(i).array() - lse;
    }
    return out;
}

} // namespace

ClassifierKind parse_classifier_kind(std::string_view text)
{
    if (text == "logistic") return ClassifierKind::Logistic;
    if (text == "mlp1") return ClassifierKind::Mlp1;
    throw UsageError {"unknown classifier kind '" + std::string {text} + "'"};
}

const char* to_string(ClassifierKind kind)
{
    return kind == ClassifierKind::Logistic ? "logistic" : "mlp1";
}

ClassifierModel::ClassifierModel(ClassifierKind kind, Index input_dim, Index num_classes, Index hidden_units,
                                 double l2_lambda, double init_scale, std::uint64_t seed)
: kind_ {kind}
, input_dim_ {input_dim}
, num_classes_ {num_classes}
, hidden_ {kind == ClassifierKind::Mlp1 ? hidden_units : 0}
, l2_lambda_ {l2_lambda}
{
    if (input_dim == 0 || num_classes < 2) throw UsageError {"classifier needs d >= 1 and K >= 2"};
    if (kind == ClassifierKind::Mlp1 && hidden_units == 0) throw UsageError {"mlp1 needs hidden units"};
    if (!(l2_lambda >= 0.0)) throw UsageError {"l2_lambda must be nonnegative"};
    if (!(init_scale >= 0.0)) throw UsageError {"init_scale must be nonnegative"};
    const Index d = input_dim, k = num_classes, h = hidden_;
    const Index size = kind == ClassifierKind::Logistic ? k * d + k : h * d + h + k * h + k;
    params_ = Vector::Zero(static_cast<Eigen::Index>(size));
    // The output layer starts at zero so that the untrained model predicts
    // exactly uniform rows; only the mlp1 hidden layer is drawn at random.
    if (init_scale > 0.0 && kind == ClassifierKind::Mlp1) {
        Rng rng {seed};
        std::uniform_real_distribution<double> draw {-init_scale, init_scale};
        for (Index i = 0; i < h * d + h; ++i) params_(static_cast<Eigen::Index>(i)) = draw(rng);
    }
}

ClassifierModel ClassifierModel::from_config(const ClassifierConfig& config, Index input_dim, Index num_classes,
                                             std::uint64_t seed)
{
    return {config.kind, input_dim, num_classes, config.hidden_units, config.l2_lambda, config.init_scale, seed};
}

void ClassifierModel::set_parameters(Vector params)
{
    if (params.size() != params_.size()) throw UsageError {"parameter vector has the wrong length"};
    params_ = std::move(params);
}

void ClassifierModel::check_width(const Matrix& features) const
{
    if (static_cast<Index>(features.cols()) != input_dim_) {
        throw UsageError {"feature width " + std::to_string(features.cols()) + " does not match classifier input " +
                          std::to_string(input_dim_)};
    }
}

ClassifierModel::Forward ClassifierModel::forward(const Matrix& features) const
{
    check_width(features);
    const auto d = static_cast<Eigen::Index>(input_dim_);
    const auto k = static_cast<Eigen::Index>(num_classes_);
    const auto h = static_cast<Eigen::Index>(hidden_);
    const double* p = params_.data();
    Forward out;
    if (kind_ == ClassifierKind::Logistic) {
        ConstMap w {p, k, d};
        Eigen::Map<const Eigen::RowVectorXd> b {p + k * d, k};
        out.logits = features * w.transpose();
        out.logits.rowwise() += b;
        return out;
    }
    ConstMap w1 {p, h, d};
    Eigen::Map<const Eigen::RowVectorXd> b1 {p + h * d, h};
    ConstMap w2 {p + h * d + h, k, h};
    Eigen::Map<const Eigen::RowVectorXd> b2 {p + h * d + h + k * h, k};
    out.hidden = features * w1.transpose();
    out.hidden.rowwise() += b1;
    out.hidden = out.hidden.array().tanh().matrix();
    out.logits = out.hidden * w2.transpose();
    out.logits.rowwise() += b2;
    return out;
}

Matrix ClassifierModel::predict_proba(const Matrix& features) const
{
    // Plain max-shifted softmax: zero logits give exactly 1/K.
    Matrix probs = forward(features).logits;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double top = probs.row(i).maxCoeff();
        probs.row(i) = (probs.row(i).array() - top).exp().matrix();
        probs.row(i) /= probs.row(i).sum();
    }
    return probs;
}

double ClassifierModel::loss(const Matrix& features, const Matrix& q) const
{
    if (q.rows() != features.rows() || static_cast<Index>(q.cols()) != num_classes_) {
        throw UsageError {"q must be N x K"};
    }
    const Matrix logp = log_softmax(forward(features).logits);
    return -(q.array() * logp.array()).sum() + l2_lambda_ * params_.squaredNorm();
}

Vector ClassifierModel::gradient(const Matrix& features, const Matrix& q) const
{
    if (q.rows() != features.rows() || static_cast<Index>(q.cols()) != num_classes_) {
        throw UsageError {"q must be N x K"};
    }
    const auto d = static_cast<Eigen::Index>(input_dim_);
    const auto k = static_cast<Eigen::Index>(num_classes_);
    const auto h = static_cast<Eigen::Index>(hidden_);
    const Forward fw = forward(features);
    const Matrix probs = log_softmax(fw.logits).array().exp().matrix();

    // d loss / d logits = f * sum_k q_ik - q
    Matrix g = probs;
    for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) *= q.row(i).sum();
    g -= q;

    Vector grad = 2.0 * l2_lambda_ * params_;
    double* out = grad.data();
    if (kind_ == ClassifierKind::Logistic) {
        Eigen::Map<Matrix> {out, k, d} += g.transpose() * features;
        Eigen::Map<Eigen::RowVectorXd> {out + k * d, k} += g.colwise().sum();
        return grad;
    }
    const double* p = params_.data();
    ConstMap w2 {p + h * d + h, k, h};
    Eigen::Map<Matrix> {out + h * d + h, k, h} += g.transpose() * fw.hidden;
    Eigen::Map<Eigen::RowVectorXd> {out + h * d + h + k * h, k} += g.colwise().sum();
    const Matrix da = ((g * w2).array() * (1.0 - fw.hidden.array().square())).matrix();
    Eigen::Map<Matrix> {out, h, d} += da.transpose() * features;
    Eigen::Map<Eigen::RowVectorXd> {out + h * d, h} += da.colwise().sum();
    return grad;
}

double loss_weighted(const ClassifierModel& model, const Matrix& features, const Matrix& q)
{
    return model.loss(features, q);
}

ClassifierModel fit_weighted(ClassifierModel model, const Matrix& features, const Matrix& q, Index epochs,
                             double learning_rate, bool backtracking)
{
    if (epochs == 0 || features.rows() == 0) return model;
    if (!(learning_rate > 0.0)) throw UsageError {"learning rate must be positive"};
    const double scale = learning_rate / static_cast<double>(features.rows());
    double current = model.loss(features, q);
    if (!std::isfinite(current)) throw NumericalError {"initial classifier loss is not finite"};

    for (Index epoch = 0; epoch < epochs; ++epoch) {
        const Vector grad = model.gradient(features, q);
        if (!grad.allFinite()) {
            throw NumericalError {"classifier gradient is not finite at epoch " + std::to_string(epoch)};
        }
        const Vector start = model.parameters();
        double step = scale;
        model.set_parameters(start - step * grad);
        double next = model.loss(features, q);
        if (backtracking) {
            int halvings = 0;
            while (!(next <= current) && halvings < 40) {
                step *= 0.5;
                model.set_parameters(start - step * grad);
                next = model.loss(features, q);
                ++halvings;
            }
            if (!(next <= current)) {
                model.set_parameters(start);
                break;
            }
        }
        if (!std::isfinite(next)) {
            throw NumericalError {"classifier loss became non-finite at epoch " + std::to_string(epoch) +
                                  " (learning rate " + std::to_string(learning_rate) + ")"};
        }
        current = next;
    }
    return model;
}

Matrix clip_probs(const Matrix& rows, double c)
{
    const auto k = rows.cols();
    if (k == 0) return rows;
    if (!(c > 1.0 / static_cast<double>(k)) || c > 1.0) {
        throw UsageError {"clipping parameter must lie in (1/K, 1]"};
    }
    Matrix out = rows;
    std::vector<char> capped(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        std::fill(capped.begin(), capped.end(), 0);
        for (;;) {
            double excess = 0.0;
            Eigen::Index free = 0;
            for (Eigen::Index z = 0; z < k; ++z) {
                if (out(i, z) > c) {
                    excess += out(i, z) - c;
                    out(i, z) = c;
                    capped[static_cast<std::size_t>(z)] = 1;
                }
                free += capped[static_cast<std::size_t>(z)] == 0;
            }
            if (excess == 0.0 || free == 0) break;
            const double share = excess / static_cast<double>(free);
            for (Eigen::Index z = 0; z < k; ++z) {
                if (!capped[static_cast<std::size_t>(z)]) out(i, z) += share;
            }
        }
    }
    return out;
}

} // namespace crowdbp
