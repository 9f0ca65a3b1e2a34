#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpgs/model_io.hpp"
#include "dpgs/pipeline.hpp"
#include "dpgs/planted.hpp"

namespace py = pybind11;
using namespace dpgs;

namespace {

py::array_t<std::int32_t> label_array(const std::vector<std::int32_t>& labels) {
    return py::array_t<std::int32_t>(static_cast<py::ssize_t>(labels.size()), labels.data());
}

EmbeddingDataset dataset_from(const Matrix& points, const std::vector<std::int32_t>& labels) {
    EmbeddingDataset ds;
    ds.points = points;
    if (!labels.empty()) ds.labels = labels;
    ds.validate();
    return ds;
}

PrivacyBudget budget_from(double epsilon, double delta) {
    PrivacyBudget budget{epsilon, delta};
    budget.validate();
    return budget;
}

PipelineConfig config_from(double epsilon, double delta, int k, double clip, double est_clip,
                           double cov_clip, int iterations, const std::string& cov_model,
                           Eigen::Index generations, bool filtering, double threshold,
                           int jobs) {
    PipelineConfig cfg;
    cfg.budget = budget_from(epsilon, delta);
    cfg.kmeans.k = k;
    cfg.kmeans.clip_radius = clip;
    cfg.kmeans.lloyd_iterations = iterations;
    cfg.kmeans.init = KMeansConfig::Init::noisy_sample;
    cfg.estimator.clip_radius = est_clip > 0.0 ? est_clip : clip;
    cfg.estimator.cov_clip_radius = cov_clip;
    cfg.estimator.covariance_model =
        cov_model == "full" ? CovarianceModel::full : CovarianceModel::diagonal;
    cfg.generations = generations;
    cfg.filtering = filtering;
    cfg.vote_threshold = threshold;
    cfg.jobs = jobs;
    return cfg;
}

py::dict model_to_dict(std::int32_t label, const GmmModel& model) {
    py::dict out;
    out["label"] = label;
    out["weights"] = Vector(model.weights);
    out["means"] = Matrix(model.means);
    py::list covs;
    for (const auto& c : model.covariances) covs.append(Matrix(c.to_matrix()));
    out["covariances"] = covs;
    return out;
}

py::dict report_to_dict(const SyntheticReport& report) {
    py::dict out;
    out["points"] = Matrix(report.synthetic.points);
    out["labels"] = label_array(report.synthetic.labels ? *report.synthetic.labels
                                                        : std::vector<std::int32_t>{});
    py::list classes;
    for (const auto& cls : report.classes) {
        py::dict c = model_to_dict(cls.label, cls.model);
        c["generated"] = static_cast<std::int64_t>(cls.generated);
        c["survivors"] = static_cast<std::int64_t>(cls.survivors);
        c["reseeds"] = cls.reseeds;
        classes.append(c);
    }
    out["classes"] = classes;
    py::list spends;
    for (const auto& e : report.ledger.entries()) {
        py::dict s;
        s["subroutine"] = e.subroutine;
        s["epsilon"] = e.spent.epsilon;
        s["delta"] = e.spent.delta;
        s["parallel"] = e.kind == Composition::parallel;
        spends.append(s);
    }
    out["ledger"] = spends;
    PrivacyBudget composed = report.ledger.composed();
    out["spent_epsilon"] = composed.epsilon;
    out["spent_delta"] = composed.delta;
    return out;
}

} // namespace

PYBIND11_MODULE(_dpgs, m) {
    m.doc() = "Differentially private GMM synthesis for embedding datasets";

    m.def(
        "plant",
        [](int classes, int k, int d, Eigen::Index n_per_class, double sigma, double separation,
           std::uint64_t seed) {
            PlantedGmmSpec spec;
            spec.classes = classes;
            spec.k = k;
            spec.d = d;
            spec.n_per_class = n_per_class;
            spec.sigma = sigma;
            spec.delta_sep =
                separation >= 0.0 ? separation : 30.0 * sigma * std::sqrt(static_cast<double>(d));
            if (k == 3) {
                spec.weights.resize(3);
                spec.weights << 0.5, 0.3, 0.2;
            }
            spec.seed = seed;
            RngStream rng(seed);
            PlantedInstance inst = plant_gmm(spec, rng);
            py::dict out;
            out["points"] = Matrix(inst.data.points);
            out["labels"] = label_array(*inst.data.labels);
            out["components"] = label_array(inst.components);
            py::list truths;
            for (std::size_t ci = 0; ci < inst.truths.size(); ++ci)
                truths.append(model_to_dict(static_cast<std::int32_t>(ci), inst.truths[ci]));
            out["truths"] = truths;
            return out;
        },
        py::arg("classes") = 2, py::arg("k") = 3, py::arg("d") = 8,
        py::arg("n_per_class") = 30000, py::arg("sigma") = 0.5, py::arg("separation") = -1.0,
        py::arg("seed") = 1, "Sample a planted ground-truth mixture dataset.");

    m.def(
        "fit",
        [](const Matrix& points, const std::vector<std::int32_t>& labels, double epsilon,
           double delta, int k, double clip, double est_clip, double cov_clip, int iterations,
           const std::string& cov_model, int jobs, std::uint64_t seed) {
            EmbeddingDataset ds = dataset_from(points, labels);
            PipelineConfig cfg = config_from(epsilon, delta, k, clip, est_clip, cov_clip,
                                             iterations, cov_model, 0, false, 6.0, jobs);
            RngStream rng(seed);
            SyntheticReport report = run_pipeline(ds, cfg, rng);
            py::list models;
            for (const auto& cls : report.classes) models.append(model_to_dict(cls.label, cls.model));
            return models;
        },
        py::arg("points"), py::arg("labels"), py::arg("epsilon"), py::arg("delta"), py::arg("k"),
        py::arg("clip"), py::arg("est_clip") = 0.0, py::arg("cov_clip") = 0.0,
        py::arg("iterations") = 5, py::arg("cov_model") = "diagonal", py::arg("jobs") = 1,
        py::arg("seed") = 1, "Fit one private mixture per class; returns per-class parameters.");

    m.def(
        "synthesize",
        [](const Matrix& points, const std::vector<std::int32_t>& labels, double epsilon,
           double delta, int k, double clip, double est_clip, double cov_clip,
           Eigen::Index generations, double multiplier, bool filtering, double threshold,
           int iterations, const std::string& cov_model, int jobs, std::uint64_t seed) {
            EmbeddingDataset ds = dataset_from(points, labels);
            PipelineConfig cfg = config_from(epsilon, delta, k, clip, est_clip, cov_clip,
                                             iterations, cov_model, generations, filtering,
                                             threshold, jobs);
            cfg.generation_multiplier = multiplier;
            RngStream rng(seed);
            return report_to_dict(run_pipeline(ds, cfg, rng));
        },
        py::arg("points"), py::arg("labels"), py::arg("epsilon"), py::arg("delta"), py::arg("k"),
        py::arg("clip"), py::arg("est_clip") = 0.0, py::arg("cov_clip") = 0.0,
        py::arg("generations") = 1000, py::arg("multiplier") = 6.0, py::arg("filtering") = true,
        py::arg("threshold") = 6.0, py::arg("iterations") = 5, py::arg("cov_model") = "diagonal",
        py::arg("jobs") = 1, py::arg("seed") = 1,
        "Run the private fit/sample/filter pipeline; returns rows, models and the ledger.");

    m.def(
        "train_eval_mlp",
        [](const Matrix& train_points, const std::vector<std::int32_t>& train_labels,
           const Matrix& test_points, const std::vector<std::int32_t>& test_labels, int epochs,
           int hidden, std::uint64_t seed) {
            MlpConfig cfg;
            cfg.epochs = epochs;
            cfg.hidden = hidden;
            RngStream rng(seed);
            MlpModel model = train_mlp(dataset_from(train_points, train_labels), cfg, rng);
            return evaluate(model, dataset_from(test_points, test_labels));
        },
        py::arg("train_points"), py::arg("train_labels"), py::arg("test_points"),
        py::arg("test_labels"), py::arg("epochs") = 50, py::arg("hidden") = 128,
        py::arg("seed") = 1,
        "Train the two-layer classifier and return its holdout accuracy.");

    m.def("non_private_epsilon", [] { return PrivacyBudget::non_private().epsilon; },
          "Budget value that disables noise.");
}
