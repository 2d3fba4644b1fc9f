#include "stressmkl/serialize.hpp"

#include "stressmkl/error.hpp"

namespace stressmkl {

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, what + ": " + e.what());
    }
}

namespace {

Json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vector(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json mat(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
}

Matrix to_matrix(const Json& j, Eigen::Index cols) {
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorKind::Schema, "matrix row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                                               " entries, expected " + std::to_string(cols));
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

Json kernel_json(const KernelSpec& k) {
    Json j{{"kind", to_string(k.kind)}};
    if (k.kind == KernelKind::Rbf) j["gamma"] = k.gamma;
    return j;
}

KernelSpec kernel_from(const Json& j) {
    return parse_kernel_kind(j.at("kind").get<std::string>()) == KernelKind::Linear
               ? KernelSpec::linear()
               : KernelSpec::rbf(j.at("gamma").get<double>());
}

Json hp_json(const HyperParams& hp) { return {{"C", hp.C}, {"nu", hp.nu}, {"gamma", hp.gamma}}; }

HyperParams hp_from(const Json& j) { return {j.at("C").get<double>(), j.at("nu").get<double>(), j.at("gamma").get<double>()}; }

Json solution_json(const LssvmSolution& s) {
    return {{"alpha", vec(s.alpha)}, {"bias", s.bias}, {"C", s.C}, {"residual", s.residual}, {"jittered", s.jittered}};
}

LssvmSolution solution_from(const Json& j) {
    LssvmSolution s;
    s.alpha = to_vector(j.at("alpha"));
    s.bias = j.at("bias").get<double>();
    s.C = j.at("C").get<double>();
    s.residual = j.value("residual", 0.0);
    s.jittered = j.value("jittered", false);
    return s;
}

}  // namespace

Json assignment_to_json(const TaskAssignment& a, const std::vector<std::string>& fallback, std::uint64_t seed) {
    Json tasks = Json::object();
    for (const auto& [drive, t] : a.task_of) tasks[drive] = t + 1;
    return {{"format", "stressmkl-assignment"}, {"version", 1},       {"tasks", a.tasks},
            {"seed", seed},                     {"assignment", tasks}, {"fallback_drives", fallback}};
}

TaskAssignment assignment_from_json(const Json& j) {
    try {
        TaskAssignment a;
        a.tasks = j.at("tasks").get<int>();
        for (const auto& [drive, t] : j.at("assignment").items()) {
            const int task = t.get<int>();
            if (task < 1 || task > a.tasks)
                throw Error(ErrorKind::Schema, "drive '" + drive + "' assigned to task " + std::to_string(task) +
                                                   " outside 1.." + std::to_string(a.tasks));
            a.task_of[drive] = task - 1;
        }
        return a;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("assignment: ") + e.what());
    }
}

Json experiment_to_json(const ExperimentConfig& cfg) {
    return {{"model", to_string(cfg.family)},
            {"tasks", cfg.tasks},
            {"kernel", to_string(cfg.kernel)},
            {"reg", to_string(cfg.reg)},
            {"omega_sign", to_string(cfg.mtmkl.omega_sign)},
            {"n_outer", cfg.n_outer},
            {"n_inner", cfg.n_inner},
            {"seed", cfg.seed},
            {"group_by_drive", cfg.group_by_drive},
            {"grid", {{"C", cfg.grid.C}, {"nu", cfg.grid.nu}, {"gamma", cfg.grid.gamma}}}};
}

Json to_json(const TrainedModel& m, const ExperimentConfig& cfg) {
    Json j;
    j["format"] = "stressmkl-model";
    j["version"] = 1;
    j["kind"] = to_string(m.family);
    j["feature_names"] = feature_names();
    j["scaler"] = {{"min", m.scaler.min}, {"max", m.scaler.max}};
    j["hyperparameters"] = hp_json(m.hp);
    j["experiment"] = experiment_to_json(cfg);
    if (m.logreg) {
        const auto& lr = *m.logreg;
        j["logreg"] = {{"penalty", lr.penalty == Penalty::L1 ? "l1" : "l2"},
                       {"lambda", lr.lambda},
                       {"weights", vec(lr.weights)},
                       {"bias", lr.bias},
                       {"iterations", lr.iterations},
                       {"converged", lr.converged}};
    }
    if (m.stk) {
        j["stk"] = {{"kernel", kernel_json(m.stk->spec)},
                    {"solution", solution_json(m.stk->solution)},
                    {"train_X", mat(m.stk->train_X)}};
    }
    if (m.mtmkl) {
        const auto& mt = *m.mtmkl;
        Json tasks = Json::array();
        for (std::size_t t = 0; t < mt.tasks.size(); ++t) {
            const auto& tm = mt.tasks[t];
            Json views = Json::array();
            for (const auto& v : tm.train_views) views.push_back(mat(v));
            tasks.push_back({{"task", t + 1},
                             {"eta", vec(tm.eta.weights())},
                             {"solution", solution_json(tm.solution)},
                             {"y", vec(tm.y)},
                             {"train_views", views}});
        }
        Json assignment = Json::object();
        for (const auto& [drive, t] : mt.assignment.task_of) assignment[drive] = t + 1;
        j["mtmkl"] = {{"kernel", kernel_json(mt.config.kernel)},
                      {"reg", to_string(mt.config.reg)},
                      {"omega_sign", to_string(mt.config.omega_sign)},
                      {"nu", mt.config.nu},
                      {"C", mt.config.C},
                      {"converged", mt.converged},
                      {"iterations", mt.iterations},
                      {"assignment", assignment},
                      {"task_centroids", mat(m.task_centroids)},
                      {"tasks", tasks}};
    }
    return j;
}

TrainedModel model_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "stressmkl-model")
            throw Error(ErrorKind::Schema, "not a model file (format '" + j.at("format").get<std::string>() + "')");
        const auto names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& expected = feature_names();
        if (names != std::vector<std::string>(expected.begin(), expected.end()))
            throw Error(ErrorKind::Schema, "model feature names differ from this build's feature set");
        TrainedModel m;
        m.family = parse_model_family(j.at("kind").get<std::string>());
        m.hp = hp_from(j.at("hyperparameters"));
        m.scaler.min = j.at("scaler").at("min").get<std::array<double, kFeatureCount>>();
        m.scaler.max = j.at("scaler").at("max").get<std::array<double, kFeatureCount>>();
        switch (m.family) {
            case ModelFamily::LogRegL1:
            case ModelFamily::LogRegL2: {
                const auto& l = j.at("logreg");
                LogRegModel lr;
                lr.penalty = l.at("penalty").get<std::string>() == "l1" ? Penalty::L1 : Penalty::L2;
                lr.lambda = l.at("lambda").get<double>();
                lr.weights = to_vector(l.at("weights"));
                lr.bias = l.at("bias").get<double>();
                lr.iterations = l.value("iterations", 0);
                lr.converged = l.value("converged", true);
                m.logreg = lr;
                break;
            }
            case ModelFamily::StkLinear:
            case ModelFamily::StkRbf: {
                const auto& s = j.at("stk");
                SingleTaskKernelModel stk;
                stk.spec = kernel_from(s.at("kernel"));
                stk.solution = solution_from(s.at("solution"));
                stk.train_X = to_matrix(s.at("train_X"), static_cast<Eigen::Index>(kFeatureCount));
                m.stk = stk;
                break;
            }
            case ModelFamily::MtMkl: {
                const auto& s = j.at("mtmkl");
                MtMklModel mt;
                mt.config.kernel = kernel_from(s.at("kernel"));
                mt.config.reg = parse_regularizer(s.at("reg").get<std::string>());
                mt.config.omega_sign = parse_omega_sign(s.at("omega_sign").get<std::string>());
                mt.config.nu = s.at("nu").get<double>();
                mt.config.C = s.at("C").get<double>();
                mt.converged = s.at("converged").get<bool>();
                mt.iterations = s.at("iterations").get<int>();
                const auto& tasks = s.at("tasks");
                mt.assignment.tasks = static_cast<int>(tasks.size());
                for (const auto& [drive, t] : s.at("assignment").items()) mt.assignment.task_of[drive] = t.get<int>() - 1;
                m.task_centroids = to_matrix(s.at("task_centroids"), static_cast<Eigen::Index>(kFeatureCount));
                const Eigen::Index dims[2] = {static_cast<Eigen::Index>(kEdaFeatureCount),
                                              static_cast<Eigen::Index>(kHrFeatureCount)};
                for (const auto& t : tasks) {
                    TaskModel tm;
                    tm.eta = EtaVector(to_vector(t.at("eta")));
                    tm.solution = solution_from(t.at("solution"));
                    tm.y = to_vector(t.at("y"));
                    const auto& views = t.at("train_views");
                    if (views.size() != 2) throw Error(ErrorKind::Schema, "mtmkl task needs 2 views");
                    for (std::size_t v = 0; v < 2; ++v) tm.train_views.push_back(to_matrix(views[v], dims[v]));
                    mt.tasks.push_back(std::move(tm));
                }
                m.mtmkl = std::move(mt);
                break;
            }
        }
        return m;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("model: ") + e.what());
    }
}

Json report_to_json(const CvReport& r) {
    Json folds = Json::array();
    for (const auto& f : r.folds) {
        Json grid = Json::array();
        for (const auto& g : f.grid) {
            Json p = hp_json(g.hp);
            p["mean_accuracy"] = g.mean_accuracy;
            p["failed"] = g.failed;
            if (!g.failure.empty()) p["failure"] = g.failure;
            grid.push_back(p);
        }
        Json etas = Json::array();
        for (const auto& e : f.etas) etas.push_back(vec(e));
        const auto& c = f.metrics.confusion;
        Json fold{{"fold", f.fold + 1},
                  {"n_train", f.n_train},
                  {"n_test", f.n_test},
                  {"metrics",
                   {{"accuracy", f.metrics.accuracy},
                    {"precision", f.metrics.precision},
                    {"recall", f.metrics.recall},
                    {"f1", f.metrics.f1},
                    {"degenerate", f.metrics.degenerate},
                    {"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}}}},
                  {"selected", hp_json(f.selected)},
                  {"grid", grid},
                  {"etas", etas},
                  {"fallback_drives", f.fallback_drives},
                  {"converged", f.converged},
                  {"leakage_check", f.leakage_check}};
        if (f.assignment) {
            Json a = Json::object();
            for (const auto& [drive, t] : f.assignment->task_of) a[drive] = t + 1;
            fold["assignment"] = a;
        } else {
            fold["assignment"] = nullptr;
        }
        folds.push_back(fold);
    }
    return {{"format", "stressmkl-cv-report"},
            {"version", 1},
            {"config", experiment_to_json(r.config)},
            {"folds", folds},
            {"mean",
             {{"accuracy", r.mean_accuracy}, {"precision", r.mean_precision}, {"recall", r.mean_recall}, {"f1", r.mean_f1}}},
            {"leakage_check", r.leakage_check}};
}

CvReport report_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "stressmkl-cv-report")
            throw Error(ErrorKind::Schema, "not a cv report (format '" + j.at("format").get<std::string>() + "')");
        CvReport r;
        const auto& c = j.at("config");
        r.config.family = parse_model_family(c.at("model").get<std::string>());
        r.config.tasks = c.at("tasks").get<int>();
        r.config.kernel = parse_kernel_kind(c.at("kernel").get<std::string>());
        r.config.reg = parse_regularizer(c.at("reg").get<std::string>());
        r.config.n_outer = c.at("n_outer").get<int>();
        r.config.n_inner = c.at("n_inner").get<int>();
        r.config.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& f : j.at("folds")) {
            FoldReport fr;
            fr.fold = f.at("fold").get<int>() - 1;
            fr.n_train = f.at("n_train").get<std::size_t>();
            fr.n_test = f.at("n_test").get<std::size_t>();
            const auto& m = f.at("metrics");
            fr.metrics.accuracy = m.at("accuracy").get<double>();
            fr.metrics.precision = m.at("precision").get<double>();
            fr.metrics.recall = m.at("recall").get<double>();
            fr.metrics.f1 = m.at("f1").get<double>();
            fr.metrics.degenerate = m.at("degenerate").get<bool>();
            fr.selected = hp_from(f.at("selected"));
            for (const auto& e : f.at("etas")) fr.etas.push_back(to_vector(e));
            fr.converged = f.at("converged").get<bool>();
            fr.leakage_check = f.at("leakage_check").get<bool>();
            r.folds.push_back(std::move(fr));
        }
        const auto& mean = j.at("mean");
        r.mean_accuracy = mean.at("accuracy").get<double>();
        r.mean_precision = mean.at("precision").get<double>();
        r.mean_recall = mean.at("recall").get<double>();
        r.mean_f1 = mean.at("f1").get<double>();
        r.leakage_check = j.at("leakage_check").get<bool>();
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("cv report: ") + e.what());
    }
}

}  // namespace stressmkl
