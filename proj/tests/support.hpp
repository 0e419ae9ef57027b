#pragma once

// Random instance generators and small independent reference computations
// shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "crowdbp/dataset.hpp"
#include "crowdbp/priors.hpp"
#include "crowdbp/rng.hpp"

namespace support {

using namespace crowdbp;

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double> {lo, hi}(rng);
}

inline Index uniform_index(Rng& rng, Index lo, Index hi)
{
    return std::uniform_int_distribution<Index> {lo, hi}(rng);
}

inline Matrix random_simplex_rows(Rng& rng, Index rows, Index k, double floor = 0.02)
{
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, floor, 1.0);
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

enum class Family { Dirichlet, OneCoin, TwoCoin };

inline WorkerPrior random_prior(Rng& rng, Index k, Family family)
{
    switch (family) {
    case Family::OneCoin: return WorkerPrior::one_coin(k, uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 3.0));
    case Family::TwoCoin: return WorkerPrior::two_coin(k, uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 3.0));
    case Family::Dirichlet: break;
    }
    Matrix alpha(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha.data()[i] = uniform(rng, 0.5, 3.0);
    return WorkerPrior::full_dirichlet(alpha);
}

inline WorkerPrior random_prior(Rng& rng, Index k)
{
    return random_prior(rng, k, static_cast<Family>(uniform_index(rng, 0, 2)));
}

/// Each (task, worker) pair is answered with probability `density`; labels are uniform.
inline Observations random_observations(Rng& rng, Index n, Index m, Index k, double density,
                                        std::optional<Index> feature_dim = std::nullopt)
{
    std::vector<Answer> answers;
    for (Index i = 0; i < n; ++i) {
        for (Index u = 0; u < m; ++u) {
            if (uniform(rng, 0.0, 1.0) < density) answers.push_back({i, u, static_cast<Label>(uniform_index(rng, 0, k - 1))});
        }
    }
    std::optional<Matrix> features;
    if (feature_dim) {
        features = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(*feature_dim));
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < features->size(); ++i) features->data()[i] = normal(rng);
    }
    return {n, m, k, std::move(answers), std::move(features)};
}

/// Random bipartite forest on at most `max_tasks` tasks: every new node is
/// attached to one existing node of the other side (or, rarely, left alone).
inline Observations random_tree(Rng& rng, Index max_tasks, Index k)
{
    const Index n = uniform_index(rng, 1, max_tasks);
    const Index m = uniform_index(rng, 1, n + 1);
    Index tasks = 1, workers = 0;
    std::vector<std::pair<Index, Index>> edges;
    while (tasks < n || workers < m) {
        const bool add_task = tasks < n && workers > 0 && (workers == m || uniform(rng, 0.0, 1.0) < 0.5);
        const bool isolated = uniform(rng, 0.0, 1.0) < 0.05;
        if (add_task) {
            if (!isolated) edges.emplace_back(tasks, uniform_index(rng, 0, workers - 1));
            ++tasks;
        } else {
            if (!isolated) edges.emplace_back(uniform_index(rng, 0, tasks - 1), workers);
            ++workers;
        }
    }
    std::vector<Answer> answers;
    for (auto [i, u] : edges) answers.push_back({i, u, static_cast<Label>(uniform_index(rng, 0, k - 1))});
    return {n, m, k, std::move(answers)};
}

/// E[p^a (1-p)^b] for p ~ Beta(a1, a2) and integer a, b, by the product formula.
inline double beta_moment(double a1, double a2, int a, int b)
{
    double v = 1.0;
    for (int i = 0; i < a; ++i) v *= (a1 + i) / (a1 + a2 + i);
    for (int j = 0; j < b; ++j) v *= (a2 + j) / (a1 + a2 + a + j);
    return v;
}

/// psi(n) = H_{n-1} - Euler's gamma for positive integers.
inline double integer_digamma(int n)
{
    double h = 0.0;
    for (int i = 1; i < n; ++i) h += 1.0 / i;
    return h - 0.57721566490153286;
}

/// psi(x) for x > 0: recurrence up to x >= 10, then the asymptotic series.
inline double series_digamma(double x)
{
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    return shift + std::log(x) - 0.5 / x -
           r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132)))));
}

/// Composite Simpson rule with `intervals` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals)
{
    const double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

inline double total_variation(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b)
{
    return 0.5 * (a - b).cwiseAbs().sum();
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Relabels classes by `perm` (class c becomes perm[c]) in answers.
inline Observations permute_classes(const Observations& data, const std::vector<Label>& perm)
{
    std::vector<Answer> answers = data.answers();
    for (auto& a : answers) a.label = perm[a.label];
    std::optional<Matrix> features;
    if (data.has_features()) features = data.features();
    return {data.num_tasks(), data.num_workers(), data.num_classes(), std::move(answers), std::move(features)};
}

inline Matrix permute_columns(const Matrix& m, const std::vector<Label>& perm)
{
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(perm[static_cast<std::size_t>(c)]) = m.col(c);
    return out;
}

inline Matrix permute_both(const Matrix& m, const std::vector<Label>& perm)
{
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]) = m(r, c);
    }
    return out;
}

} // namespace support
