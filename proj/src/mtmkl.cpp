#include "stressmkl/mtmkl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stressmkl/error.hpp"

namespace stressmkl {

std::string to_string(Regularizer reg) { return reg == Regularizer::L1 ? "l1" : "l2"; }

Regularizer parse_regularizer(const std::string& text) {
    if (text == "l1" || text == "L1") return Regularizer::L1;
    if (text == "l2" || text == "L2") return Regularizer::L2;
    throw Error(ErrorKind::InvalidParameter, "unknown regularizer '" + text + "' (expected l1 or l2)");
}

std::string to_string(OmegaSign sign) { return sign == OmegaSign::Default ? "default" : "similarity"; }

OmegaSign parse_omega_sign(const std::string& text) {
    if (text == "default") return OmegaSign::Default;
    if (text == "similarity") return OmegaSign::Similarity;
    throw Error(ErrorKind::InvalidParameter, "unknown omega_sign '" + text + "' (expected default or similarity)");
}

void MtMklConfig::validate() const {
    kernel.validate();
    if (!(nu >= 0.0)) throw Error(ErrorKind::InvalidParameter, "nu must be non-negative");
    if (!(C > 0.0)) throw Error(ErrorKind::InvalidParameter, "C must be positive");
    if (!(step_size > 0.0)) throw Error(ErrorKind::InvalidParameter, "step_size must be positive");
    if (max_outer_iters < 1) throw Error(ErrorKind::InvalidParameter, "max_outer_iters must be >= 1");
    if (!(eta_tolerance > 0.0)) throw Error(ErrorKind::InvalidParameter, "eta_tolerance must be positive");
}

namespace {

double l1_sign(Regularizer reg, OmegaSign sign) {
    return (reg == Regularizer::L1 && sign == OmegaSign::Similarity) ? -1.0 : 1.0;
}

}  // namespace

double omega(std::span<const Vector> etas, Regularizer reg, double nu, OmegaSign sign) {
    double total = 0.0;
    for (std::size_t r = 0; r < etas.size(); ++r) {
        for (std::size_t s = 0; s < etas.size(); ++s) {
            total += reg == Regularizer::L1 ? etas[r].dot(etas[s]) : (etas[r] - etas[s]).norm();
        }
    }
    return -nu * l1_sign(reg, sign) * total;
}

Vector omega_gradient(std::span<const Vector> etas, Regularizer reg, double nu, std::size_t r, OmegaSign sign) {
    Vector g = Vector::Zero(etas[r].size());
    if (reg == Regularizer::L1) {
        // (r, s) and (s, r) both contribute; the (r, r) term gives 2 eta_r
        for (const auto& e : etas) g += e;
        g *= -2.0 * nu * l1_sign(reg, sign);
    } else {
        for (std::size_t s = 0; s < etas.size(); ++s) {
            if (s == r) continue;
            const Vector diff = etas[r] - etas[s];
            const double norm = diff.norm();
            if (norm > 0.0) g += diff / norm;
        }
        g *= -2.0 * nu;
    }
    return g;
}

namespace {

void check_task_shapes(std::size_t r, std::span<const Vector> etas, std::span<const Vector> multipliers,
                       std::span<const TaskGrams> view_grams, std::span<const Vector> labels) {
    if (r >= etas.size() || multipliers.size() != etas.size() || view_grams.size() != etas.size() ||
        labels.size() != etas.size())
        throw Error(ErrorKind::Shape, "per-task inputs disagree on the number of tasks");
    const auto& grams = view_grams[r];
    if (grams.size() != static_cast<std::size_t>(etas[r].size()))
        throw Error(ErrorKind::Shape, "task has " + std::to_string(grams.size()) + " view Grams but eta has " +
                                          std::to_string(etas[r].size()) + " entries");
    const Eigen::Index n = labels[r].size();
    if (multipliers[r].size() != n) throw Error(ErrorKind::Shape, "multiplier and label lengths differ");
    for (const auto& K : grams)
        if (K.rows() != n || K.cols() != n) throw Error(ErrorKind::Shape, "view Gram does not match task size");
}

Vector quadratic_terms(const Vector& a, const Vector& y, const TaskGrams& grams) {
    const Vector ay = a.cwiseProduct(y);
    Vector q(static_cast<Eigen::Index>(grams.size()));
    for (std::size_t m = 0; m < grams.size(); ++m) q[static_cast<Eigen::Index>(m)] = ay.dot(grams[m] * ay);
    return q;
}

}  // namespace

Vector objective_gradient(std::size_t r, std::span<const Vector> etas, std::span<const Vector> multipliers,
                          std::span<const TaskGrams> view_grams, std::span<const Vector> labels, Regularizer reg,
                          double nu, OmegaSign sign) {
    check_task_shapes(r, etas, multipliers, view_grams, labels);
    const Vector q = quadratic_terms(multipliers[r], labels[r], view_grams[r]);
    return -2.0 * omega_gradient(etas, reg, nu, r, sign) - 0.5 * q;
}

double fixed_alpha_objective(std::span<const Vector> etas, std::span<const Vector> multipliers,
                             std::span<const TaskGrams> view_grams, std::span<const Vector> labels, Regularizer reg,
                             double nu, OmegaSign sign) {
    double value = -2.0 * omega(etas, reg, nu, sign);
    for (std::size_t r = 0; r < etas.size(); ++r) {
        check_task_shapes(r, etas, multipliers, view_grams, labels);
        value -= 0.5 * etas[r].dot(quadratic_terms(multipliers[r], labels[r], view_grams[r]));
    }
    return value;
}

EtaVector project_simplex(const Vector& v) {
    const Eigen::Index M = v.size();
    if (M == 0) throw Error(ErrorKind::Shape, "empty vector");
    if (!v.allFinite()) throw Error(ErrorKind::InvalidParameter, "cannot project a non-finite vector");
    std::vector<double> u(v.data(), v.data() + M);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (Eigen::Index j = 0; j < M; ++j) {
        cumulative += u[static_cast<std::size_t>(j)];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
    }
    Vector w = (v.array() - theta).cwiseMax(0.0);
    // absorb rounding so the sum is 1 to machine precision
    const double s = w.sum();
    if (s > 0.0) w /= s;
    return EtaVector(w);
}

namespace {

std::vector<Matrix> task_grams(const TaskData& t, const KernelSpec& spec, GramCache* cache) {
    std::vector<Matrix> out;
    out.reserve(t.views.size());
    for (const auto& X : t.views) {
        if (cache)
            out.push_back(*cache->get(X, X, spec));
        else
            out.push_back(gram(X, X, spec));
    }
    return out;
}

std::vector<Vector> weights_of(const std::vector<EtaVector>& etas) {
    std::vector<Vector> out;
    for (const auto& e : etas) out.push_back(e.weights());
    return out;
}

}  // namespace

MtMklModel mtmkl_train(std::span<const TaskData> tasks, const MtMklConfig& config, GramCache* cache) {
    config.validate();
    if (tasks.empty()) throw Error(ErrorKind::InvalidParameter, "no tasks to train");
    const std::size_t M = tasks[0].views.size();
    if (M == 0) throw Error(ErrorKind::Shape, "tasks have no views");
    for (std::size_t r = 0; r < tasks.size(); ++r) {
        const auto& t = tasks[r];
        if (t.views.size() != M) throw Error(ErrorKind::Shape, "tasks disagree on view count");
        if (t.y.size() == 0) throw Error(ErrorKind::EmptyInput, "task " + std::to_string(r + 1) + " is empty");
        for (const auto& X : t.views)
            if (X.rows() != t.y.size()) throw Error(ErrorKind::Shape, "view rows differ from label count");
        const bool pos = (t.y.array() > 0).any(), neg = (t.y.array() < 0).any();
        if (!pos || !neg)
            throw Error(ErrorKind::MissingClass, "task " + std::to_string(r + 1) + " has a single class");
    }

    std::vector<TaskGrams> grams;
    std::vector<Vector> labels;
    for (const auto& t : tasks) {
        grams.push_back(task_grams(t, config.kernel, cache));
        labels.push_back(t.y);
    }

    std::vector<EtaVector> etas;
    for (std::size_t r = 0; r < tasks.size(); ++r) {
        if (config.initial_eta) {
            if (static_cast<std::size_t>(config.initial_eta->size()) != M)
                throw Error(ErrorKind::Shape, "initial_eta length differs from view count");
            etas.emplace_back(*config.initial_eta);
        } else {
            etas.push_back(EtaVector::uniform(M));
        }
    }

    MtMklModel model;
    model.config = config;
    model.eta_history.push_back(weights_of(etas));

    auto fit_all = [&](std::vector<LssvmSolution>& sols) {
        sols.clear();
        for (std::size_t r = 0; r < tasks.size(); ++r) {
            try {
                sols.push_back(lssvm_fit(combined_gram(grams[r], etas[r]), labels[r], config.C));
            } catch (const Error& e) {
                rethrow_with_context(e, "task " + std::to_string(r + 1));
            }
        }
    };

    std::vector<LssvmSolution> sols;
    fit_all(sols);
    if (!config.learn_eta) model.converged = true;

    for (int iter = 0; config.learn_eta && iter < config.max_outer_iters; ++iter) {
        const std::vector<Vector> current = weights_of(etas);
        std::vector<Vector> multipliers;
        for (std::size_t r = 0; r < tasks.size(); ++r) multipliers.push_back(sols[r].alpha.cwiseProduct(labels[r]));
        // the quadratic terms are fixed within one step, so the surrogate is
        // cheap to re-evaluate while halving
        std::vector<Vector> q;
        for (std::size_t r = 0; r < tasks.size(); ++r) q.push_back(quadratic_terms(multipliers[r], labels[r], grams[r]));
        auto surrogate = [&](const std::vector<Vector>& e) {
            double value = -2.0 * omega(e, config.reg, config.nu, config.omega_sign);
            for (std::size_t r = 0; r < e.size(); ++r) value -= 0.5 * e[r].dot(q[r]);
            return value;
        };
        std::vector<Vector> grads;
        for (std::size_t r = 0; r < tasks.size(); ++r)
            grads.push_back(-2.0 * omega_gradient(current, config.reg, config.nu, r, config.omega_sign) - 0.5 * q[r]);
        const double base = surrogate(current);

        std::vector<EtaVector> next = etas;
        double step = config.step_size;
        for (int h = 0; h <= config.max_step_halvings; ++h, step *= 0.5) {
            std::vector<EtaVector> cand;
            for (std::size_t r = 0; r < tasks.size(); ++r) cand.push_back(project_simplex(current[r] - step * grads[r]));
            if (surrogate(weights_of(cand)) <= base + 1e-12 * std::abs(base)) {
                next = std::move(cand);
                break;
            }
        }

        double change = 0.0;
        for (std::size_t r = 0; r < tasks.size(); ++r)
            change = std::max(change, (next[r].weights() - etas[r].weights()).cwiseAbs().maxCoeff());
        etas = std::move(next);
        model.eta_history.push_back(weights_of(etas));
        model.iterations = iter + 1;
        fit_all(sols);
        if (change < config.eta_tolerance) {
            model.converged = true;
            break;
        }
    }

    for (std::size_t r = 0; r < tasks.size(); ++r) {
        TaskModel tm;
        tm.eta = etas[r];
        tm.solution = sols[r];
        tm.train_views = tasks[r].views;
        tm.y = tasks[r].y;
        model.tasks.push_back(std::move(tm));
    }
    model.assignment.tasks = static_cast<int>(tasks.size());
    return model;
}

Vector mtmkl_task_scores(const MtMklModel& model, std::size_t task, std::span<const Matrix> test_views,
                         GramCache* cache) {
    if (task >= model.tasks.size()) throw Error(ErrorKind::InvalidParameter, "task index out of range");
    const TaskModel& tm = model.tasks[task];
    if (test_views.size() != tm.train_views.size())
        throw Error(ErrorKind::Shape, "expected " + std::to_string(tm.train_views.size()) + " views");
    std::vector<Matrix> cross;
    for (std::size_t m = 0; m < test_views.size(); ++m) {
        if (cache)
            cross.push_back(*cache->get(test_views[m], tm.train_views[m], model.config.kernel));
        else
            cross.push_back(gram(test_views[m], tm.train_views[m], model.config.kernel));
    }
    return lssvm_decision(tm.solution, combined_gram(cross, tm.eta));
}

Prediction mtmkl_predict(const MtMklModel& model, std::span<const Matrix> views, const std::string& drive_id) {
    // a single-task model has one routing target for every drive
    const int task = model.tasks.size() == 1 ? 0 : model.assignment.task(drive_id);
    const Vector s = mtmkl_task_scores(model, static_cast<std::size_t>(task), views);
    if (s.size() != 1) throw Error(ErrorKind::Shape, "mtmkl_predict expects a single instance");
    return {decision_label(s[0]), s[0]};
}

}  // namespace stressmkl
