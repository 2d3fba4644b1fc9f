#include "stressmkl/baselines.hpp"

#include <cmath>

#include "stressmkl/error.hpp"

namespace stressmkl {

namespace {

void check_binary(const Vector& y) {
    const bool pos = (y.array() == 1.0).any(), neg = (y.array() == -1.0).any();
    if (((y.array() != 1.0) && (y.array() != -1.0)).any())
        throw Error(ErrorKind::InvalidParameter, "labels must be -1 or +1");
    if (!pos || !neg) throw Error(ErrorKind::MissingClass, "logistic regression needs both classes");
}

// log(1 + exp(-m)) without overflow
double softplus_neg(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double mean_loss(const Matrix& X, const Vector& y, const Vector& w, double b) {
    const Vector margin = (y.array() * ((X * w).array() + b)).matrix();
    double total = 0.0;
    for (Eigen::Index i = 0; i < margin.size(); ++i) total += softplus_neg(margin[i]);
    return total / static_cast<double>(y.size());
}

// gradient of the mean loss w.r.t. (w, b)
void loss_gradient(const Matrix& X, const Vector& y, const Vector& w, double b, Vector& gw, double& gb) {
    const Vector z = ((X * w).array() + b).matrix();
    Vector coef(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) coef[i] = -y[i] * sigmoid(-y[i] * z[i]);
    coef /= static_cast<double>(y.size());
    gw = X.transpose() * coef;
    gb = coef.sum();
}

double penalty_value(const Vector& w, Penalty p, double lambda) {
    return p == Penalty::L1 ? lambda * w.lpNorm<1>() : 0.5 * lambda * w.squaredNorm();
}

Vector soft_threshold(const Vector& v, double t) {
    return v.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
}

}  // namespace

double logreg_objective(const Matrix& X, const Vector& y, const Vector& w, double b, Penalty penalty, double lambda) {
    return mean_loss(X, y, w, b) + penalty_value(w, penalty, lambda);
}

LogRegModel logreg_fit(const Matrix& X, const Vector& y, Penalty penalty, double lambda, const LogRegOptions& opts) {
    if (X.rows() != y.size()) throw Error(ErrorKind::Shape, "feature rows differ from label count");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidParameter, "lambda must be non-negative");
    check_binary(y);

    LogRegModel model;
    model.penalty = penalty;
    model.lambda = lambda;
    Vector w = Vector::Zero(X.cols());
    const double n_pos = static_cast<double>((y.array() > 0).count());
    double b = std::log(n_pos / (static_cast<double>(y.size()) - n_pos));

    double t = 1.0;
    double obj = logreg_objective(X, y, w, b, penalty, lambda);
    if (opts.record_objective) model.objective_trace.push_back(obj);
    Vector gw;
    double gb = 0.0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        loss_gradient(X, y, w, b, gw, gb);
        if (penalty == Penalty::L2) {
            gw += lambda * w;
            const double gnorm = std::sqrt(gw.squaredNorm() + gb * gb);
            if (gnorm <= opts.tolerance) {
                model.converged = true;
                break;
            }
            // Armijo backtracking
            t = std::min(1.0, t * 2.0);
            const double loss0 = obj;
            for (;;) {
                Vector w_new = w - t * gw;
                const double b_new = b - t * gb;
                const double obj_new = logreg_objective(X, y, w_new, b_new, penalty, lambda);
                if (obj_new <= loss0 - 0.5 * t * gnorm * gnorm || t < 1e-16) {
                    w = std::move(w_new);
                    b = b_new;
                    obj = obj_new;
                    break;
                }
                t *= 0.5;
            }
        } else {
            // proximal gradient; stop on the gradient-mapping norm
            t = std::min(1.0, t * 2.0);
            const double smooth0 = mean_loss(X, y, w, b);
            Vector w_new;
            double b_new = 0.0;
            double mapping = 0.0;
            for (;;) {
                w_new = soft_threshold(w - t * gw, t * lambda);
                b_new = b - t * gb;
                const Vector dw = w_new - w;
                const double db = b_new - b;
                const double smooth_new = mean_loss(X, y, w_new, b_new);
                const double quad = smooth0 + gw.dot(dw) + gb * db + (dw.squaredNorm() + db * db) / (2.0 * t);
                if (smooth_new <= quad + 1e-15 || t < 1e-16) {
                    mapping = std::sqrt(dw.squaredNorm() + db * db) / t;
                    break;
                }
                t *= 0.5;
            }
            w = std::move(w_new);
            b = b_new;
            obj = logreg_objective(X, y, w, b, penalty, lambda);
            if (opts.record_objective) model.objective_trace.push_back(obj);
            model.iterations = iter + 1;
            if (mapping <= opts.tolerance) {
                model.converged = true;
                break;
            }
            continue;
        }
        if (opts.record_objective) model.objective_trace.push_back(obj);
        model.iterations = iter + 1;
    }
    model.weights = w;
    model.bias = b;
    return model;
}

LogRegPrediction logreg_predict(const LogRegModel& model, const Matrix& X) {
    if (X.cols() != model.weights.size())
        throw Error(ErrorKind::Shape, "expected " + std::to_string(model.weights.size()) + " features, got " +
                                          std::to_string(X.cols()));
    LogRegPrediction out;
    const Vector z = ((X * model.weights).array() + model.bias).matrix();
    out.probabilities.resize(z.size());
    out.labels.resize(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out.probabilities[i] = sigmoid(z[i]);
        out.labels[static_cast<std::size_t>(i)] = out.probabilities[i] >= 0.5 ? 1 : -1;
    }
    return out;
}

SingleTaskKernelModel single_task_kernel_fit(const Matrix& X, const Vector& y, const KernelSpec& spec, double C,
                                             GramCache* cache) {
    SingleTaskKernelModel model;
    model.spec = spec;
    model.train_X = X;
    const Matrix K = cache ? *cache->get(X, X, spec) : gram(X, X, spec);
    model.solution = lssvm_fit(K, y, C);
    return model;
}

Vector single_task_kernel_scores(const SingleTaskKernelModel& model, const Matrix& X, GramCache* cache) {
    const Matrix K = cache ? *cache->get(X, model.train_X, model.spec) : gram(X, model.train_X, model.spec);
    return lssvm_decision(model.solution, K);
}

}  // namespace stressmkl
