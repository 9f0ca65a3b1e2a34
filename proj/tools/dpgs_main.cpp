#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpgs/errors.hpp"
#include "dpgs/model_io.hpp"
#include "dpgs/pipeline.hpp"
#include "dpgs/planted.hpp"
#include "dpgs/sweep.hpp"

namespace {

using namespace dpgs;

// Argument-level problems discovered after CLI11 parsing; exit 64.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DatasetFormat format_of(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0
               ? DatasetFormat::csv
               : DatasetFormat::binary;
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value) {
    if (opt->count() > 0) return value;
    if (const char* env = std::getenv("DPGS_SEED")) {
        std::uint64_t parsed = 0;
        const char* end = env + std::strlen(env);
        auto res = std::from_chars(env, end, parsed);
        if (res.ec != std::errc{} || res.ptr != end)
            throw UsageError("DPGS_SEED is not an unsigned integer: " + std::string(env));
        return parsed;
    }
    return 1;
}

// CLI11 only reads config files attached to the top-level app, never to a
// subcommand, so --config is expanded here into injected default flags
// before parsing. Explicit flags win because present keys are skipped.
std::vector<std::string> expand_config(const CLI::App& app, int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

    std::string path;
    std::size_t cfg_at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            cfg_at = i;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            cfg_at = i;
            break;
        }
    }
    if (path.empty()) return args;

    const CLI::App* sub = nullptr;
    std::size_t insert_at = cfg_at;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i].empty() || args[i][0] == '-') continue;
        for (const auto* cand :
             app.get_subcommands([](const CLI::App*) { return true; })) {
            if (cand->check_name(args[i])) {
                sub = cand;
                insert_at = std::max(cfg_at, i + 1);
                break;
            }
        }
        break;
    }
    if (sub == nullptr) return args;

    std::vector<std::string> inject;
    for (const auto& [key, value] : load_key_values(path)) {
        const auto* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw UsageError("unknown config key '" + key + "' for " + sub->get_name());
        bool given = false;
        for (const auto& token : args) {
            const auto base = token.substr(0, token.find('='));
            if (base.size() > 1 && base[0] == '-' && opt->check_name(base)) {
                given = true;
                break;
            }
        }
        if (given) continue;
        if (opt->get_expected_min() == 0) {
            inject.push_back(value.empty() ? "--" + key : "--" + key + "=" + value);
        } else {
            inject.push_back("--" + key);
            std::istringstream parts(value);
            for (std::string piece; parts >> piece;) inject.push_back(piece);
        }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), inject.begin(),
                inject.end());
    return args;
}

PrivacyBudget budget_from(bool non_private, const CLI::Option* eps_opt, double epsilon,
                          double delta) {
    if (non_private) return PrivacyBudget::non_private();
    if (eps_opt->count() == 0) throw UsageError("--epsilon is required without --non-private");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw UsageError("--epsilon must be positive and finite");
    if (!(delta >= 0.0) || delta >= 1.0) throw UsageError("--delta must lie in [0, 1)");
    return PrivacyBudget{epsilon, delta};
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(start, comma - start);
        if (item.empty()) throw UsageError(flag + ": empty list entry");
        if (item == "inf") {
            out.push_back(std::numeric_limits<double>::infinity());
        } else {
            double v = 0.0;
            auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
                throw UsageError(flag + ": cannot parse '" + item + "'");
            out.push_back(v);
        }
        start = comma + 1;
    }
    return out;
}

EmbeddingDataset load_labeled(const std::string& path) {
    EmbeddingDataset ds = load_dataset(path, format_of(path), true);
    if (!ds.has_labels()) throw ContractError(path + ": dataset has no labels");
    return ds;
}

std::string fmt_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void print_empty_audit() {
    BudgetLedger ledger(PrivacyBudget::non_private());
    std::cout << ledger.format();
}

// Shared fit/generate knobs.
struct FitFlags {
    double epsilon = 0.0;
    double delta = 1e-5;
    bool non_private = false;
    int k = 0;
    double clip = 1.0;
    double est_clip = 0.0;
    double cov_clip = 0.0;
    int iterations = 5;
    std::string init = "noisy-sample";
    std::string cov_model = "diagonal";
    double variance_floor = 1e-6;
    int jobs = 1;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, CLI::Option*& eps_opt) {
    eps_opt = cmd->add_option("--epsilon", f.epsilon, "Total privacy budget per class");
    cmd->add_option("--delta", f.delta, "Privacy failure probability");
    cmd->add_flag("--non-private", f.non_private, "Disable all noise");
    cmd->add_option("--k", f.k, "Mixture components per class")->required();
    cmd->add_option("--clip", f.clip, "Clustering clip radius about the origin")->required();
    cmd->add_option("--est-clip", f.est_clip,
                    "Mean-stage deviation clip radius (default: --clip)");
    cmd->add_option("--cov-clip", f.cov_clip,
                    "Covariance-stage deviation clip radius (default: --est-clip)");
    cmd->add_option("--iterations", f.iterations, "Lloyd iterations");
    cmd->add_option("--init", f.init, "Center initialization")
        ->check(CLI::IsMember({"noisy-sample", "random"}));
    cmd->add_option("--cov", f.cov_model, "Covariance representation")
        ->check(CLI::IsMember({"diagonal", "full"}));
    cmd->add_option("--variance-floor", f.variance_floor, "Smallest admissible variance");
    cmd->add_option("--jobs", f.jobs, "Parallel class fits");
}

PipelineConfig config_from(const FitFlags& f, const CLI::Option* eps_opt) {
    PipelineConfig cfg;
    cfg.budget = budget_from(f.non_private, eps_opt, f.epsilon, f.delta);
    if (f.k < 1) throw UsageError("--k must be positive");
    if (!(f.clip > 0.0)) throw UsageError("--clip must be positive");
    cfg.kmeans.k = f.k;
    cfg.kmeans.clip_radius = f.clip;
    cfg.kmeans.lloyd_iterations = f.iterations;
    cfg.kmeans.init = f.init == "random" ? KMeansConfig::Init::random_from_ball
                                         : KMeansConfig::Init::noisy_sample;
    cfg.estimator.clip_radius = f.est_clip > 0.0 ? f.est_clip : f.clip;
    cfg.estimator.cov_clip_radius = f.cov_clip;
    cfg.estimator.covariance_model =
        f.cov_model == "full" ? CovarianceModel::full : CovarianceModel::diagonal;
    cfg.estimator.variance_floor = f.variance_floor;
    cfg.jobs = f.jobs;
    return cfg;
}

int cmd_fit(const std::string& input, const std::string& out, const FitFlags& flags,
            const CLI::Option* eps_opt, std::uint64_t seed) {
    PipelineConfig cfg = config_from(flags, eps_opt);
    cfg.generations = 0;
    cfg.filtering = false;
    EmbeddingDataset ds = load_labeled(input);

    RngStream rng(seed);
    SyntheticReport report = run_pipeline(ds, cfg, rng);

    ModelFile file;
    file.budget = cfg.budget;
    file.shares = cfg.shares;
    for (const auto& cls : report.classes) file.models.emplace_back(cls.label, cls.model);
    save_models(out, file);

    for (const auto& cls : report.classes)
        std::cout << "class " << cls.label << ": " << cls.model.components()
                  << " components, reseeds " << cls.reseeds << "\n";
    std::cout << "model written to " << out << "\n" << report.ledger.format();
    return 0;
}

int cmd_generate(const std::string& model_path, const std::string& out, Eigen::Index count,
                 double multiplier, bool filter, const std::string& original_path,
                 double threshold, std::uint64_t seed) {
    if (count < 1) throw UsageError("--count must be positive");
    if (!(multiplier >= 1.0)) throw UsageError("--multiplier must be at least 1");
    if (filter && original_path.empty()) throw UsageError("--filter needs --original");

    ModelFile file = load_models(model_path);
    if (file.shares.size() != 5)
        throw ParseError(model_path + ": model file carries no five-way budget split");
    const auto budgets = split_budget(file.budget, file.shares);

    std::vector<std::pair<std::int32_t, EmbeddingDataset>> original_parts;
    if (filter) original_parts = split_by_label(load_labeled(original_path));

    BudgetLedger ledger(file.budget);
    RngStream root(seed);
    const auto per_class =
        static_cast<Eigen::Index>(std::llround(static_cast<double>(count) * multiplier));

    EmbeddingDataset synthetic;
    std::vector<std::int32_t> labels;
    Eigen::Index dim = file.models.front().second.dim();
    std::vector<Matrix> blocks;
    Eigen::Index total = 0;
    for (const auto& [label, model] : file.models) {
        RngStream class_rng = root.derive("class-" + std::to_string(label));
        RngStream sample_rng = class_rng.derive("sample");
        EmbeddingDataset rows = sample_gmm(model, per_class, sample_rng);
        std::cout << "class " << label << ": generated " << rows.rows();
        if (filter) {
            const EmbeddingDataset* part = nullptr;
            for (const auto& [olabel, ods] : original_parts)
                if (olabel == label) part = &ods;
            if (part == nullptr)
                throw ContractError("--original has no rows for class " + std::to_string(label));
            RngStream filter_rng = class_rng.derive("dp-filter");
            FilterResult filtered =
                dp_filter_embeddings(rows, *part, threshold, budgets[3], filter_rng);
            ledger.record("dp-filter[class-" + std::to_string(label) + "]", budgets[3],
                          Composition::parallel, "dp-filter");
            if (filtered.empty_warning)
                std::cerr << "warning: no synthetic row of class " << label
                          << " cleared the vote threshold\n";
            rows = std::move(filtered.survivors);
            std::cout << ", survivors " << rows.rows();
        }
        std::cout << "\n";
        blocks.push_back(rows.points);
        labels.insert(labels.end(), static_cast<std::size_t>(rows.rows()), label);
        total += rows.rows();
    }
    synthetic.points.resize(total, dim);
    Eigen::Index at = 0;
    for (const auto& block : blocks) {
        if (block.rows() > 0) synthetic.points.middleRows(at, block.rows()) = block;
        at += block.rows();
    }
    synthetic.labels = std::move(labels);

    ledger.verify();
    save_dataset(synthetic, out, format_of(out));
    std::cout << "synthetic dataset written to " << out << " (" << total << " rows)\n"
              << ledger.format();
    return 0;
}

int cmd_filter(const std::string& synthetic_path, const std::string& original_path,
               const std::string& out, double threshold, bool non_private,
               const CLI::Option* eps_opt, double epsilon, double delta, std::uint64_t seed) {
    PrivacyBudget budget = budget_from(non_private, eps_opt, epsilon, delta);
    EmbeddingDataset synthetic = load_labeled(synthetic_path);
    EmbeddingDataset original = load_labeled(original_path);

    auto synth_parts = split_by_label(synthetic);
    auto orig_parts = split_by_label(original);

    BudgetLedger ledger(budget);
    RngStream root(seed);
    std::vector<Matrix> blocks;
    std::vector<std::int32_t> labels;
    Eigen::Index total = 0;
    for (const auto& [label, rows] : synth_parts) {
        const EmbeddingDataset* part = nullptr;
        for (const auto& [olabel, ods] : orig_parts)
            if (olabel == label) part = &ods;
        if (part == nullptr)
            throw ContractError("original dataset has no rows for class " +
                                std::to_string(label));
        RngStream filter_rng = root.derive("class-" + std::to_string(label)).derive("dp-filter");
        FilterResult filtered = dp_filter_embeddings(rows, *part, threshold, budget, filter_rng);
        ledger.record("dp-filter[class-" + std::to_string(label) + "]", budget,
                      Composition::parallel, "dp-filter");
        if (filtered.empty_warning)
            std::cerr << "warning: no synthetic row of class " << label
                      << " cleared the vote threshold\n";
        std::cout << "class " << label << ": " << filtered.survivors.rows() << " of "
                  << rows.rows() << " rows survive\n";
        blocks.push_back(filtered.survivors.points);
        labels.insert(labels.end(), static_cast<std::size_t>(filtered.survivors.rows()), label);
        total += filtered.survivors.rows();
    }

    EmbeddingDataset survivors;
    survivors.points.resize(total, synthetic.dim());
    Eigen::Index at = 0;
    for (const auto& block : blocks) {
        if (block.rows() > 0) survivors.points.middleRows(at, block.rows()) = block;
        at += block.rows();
    }
    survivors.labels = std::move(labels);

    ledger.verify();
    save_dataset(survivors, out, format_of(out));
    std::cout << "filtered dataset written to " << out << " (" << total << " rows)\n"
              << ledger.format();
    return 0;
}

int cmd_train_mlp(const std::string& input, const std::string& out, const MlpConfig& cfg,
                  std::uint64_t seed) {
    EmbeddingDataset train = load_labeled(input);
    RngStream rng(seed);
    MlpModel model = train_mlp(train, cfg, rng);
    save_mlp(out, model);
    std::cout << "first epoch loss = " << fmt_double(model.first_epoch_loss) << "\n"
              << "final epoch loss = " << fmt_double(model.final_epoch_loss) << "\n"
              << "train accuracy = " << fmt_double(evaluate(model, train)) << "\n"
              << "classifier written to " << out << "\n";
    print_empty_audit();
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& test_path) {
    MlpModel model = load_mlp(model_path);
    EmbeddingDataset test = load_labeled(test_path);
    std::cout << "accuracy = " << fmt_double(evaluate(model, test)) << "\n";
    print_empty_audit();
    return 0;
}

// Planted-spec knobs shared by plant and bench.
struct SpecFlags {
    int classes = 2;
    int k = 3;
    int d = 8;
    Eigen::Index n = 30000;
    double sigma = 0.5;
    double separation = -1.0; // negative = 30 sigma sqrt(d)
    std::string placement = "simplex";
    double radius = 1.0;
    std::string weights;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& s) {
    cmd->add_option("--classes", s.classes, "Class count");
    cmd->add_option("--true-k", s.k, "Components per class");
    cmd->add_option("--dim", s.d, "Embedding dimension");
    cmd->add_option("--n-per-class", s.n, "Rows per class");
    cmd->add_option("--sigma", s.sigma, "Component scale");
    cmd->add_option("--separation", s.separation,
                    "Minimum distance between component means (default 30 sigma sqrt(dim))");
    cmd->add_option("--placement", s.placement, "Mean placement")
        ->check(CLI::IsMember({"simplex", "ball"}));
    cmd->add_option("--radius", s.radius, "Ball placement radius");
    cmd->add_option("--weights", s.weights, "Comma-separated component weights");
}

PlantedGmmSpec spec_from(const SpecFlags& s, std::uint64_t seed) {
    PlantedGmmSpec spec;
    spec.classes = s.classes;
    spec.k = s.k;
    spec.d = s.d;
    spec.n_per_class = s.n;
    spec.sigma = s.sigma;
    spec.delta_sep = s.separation >= 0.0
                         ? s.separation
                         : 30.0 * s.sigma * std::sqrt(static_cast<double>(s.d));
    spec.placement = s.placement == "ball" ? PlantedGmmSpec::Placement::random_ball
                                           : PlantedGmmSpec::Placement::simplex_scaled;
    spec.mean_radius = s.radius;
    spec.seed = seed;
    if (!s.weights.empty()) {
        auto parsed = parse_double_list(s.weights, "--weights");
        spec.weights.resize(static_cast<Eigen::Index>(parsed.size()));
        for (std::size_t i = 0; i < parsed.size(); ++i)
            spec.weights[static_cast<Eigen::Index>(i)] = parsed[i];
    } else if (s.k == 3) {
        spec.weights.resize(3);
        spec.weights << 0.5, 0.3, 0.2;
    }
    return spec;
}

int cmd_plant(const SpecFlags& sflags, const std::string& out,
              const std::string& components_out, const std::string& truth_out,
              std::uint64_t seed) {
    PlantedGmmSpec spec = spec_from(sflags, seed);
    RngStream rng(seed);
    PlantedInstance inst = plant_gmm(spec, rng);
    if (inst.count_flagged)
        std::cerr << "warning: a component count fell outside its concentration window\n";

    save_dataset(inst.data, out, format_of(out));
    if (!components_out.empty()) {
        std::ofstream cf(components_out, std::ios::trunc);
        if (!cf) throw IoError("cannot open " + components_out + " for writing");
        for (auto c : inst.components) cf << c << "\n";
        if (!cf) throw IoError("write failed on " + components_out);
    }
    if (!truth_out.empty()) {
        ModelFile file;
        file.budget = PrivacyBudget::non_private();
        file.shares = {1.0, 1.0, 1.0, 1.0, 1.0};
        for (std::size_t ci = 0; ci < inst.truths.size(); ++ci)
            file.models.emplace_back(static_cast<std::int32_t>(ci), inst.truths[ci]);
        save_models(truth_out, file);
    }
    std::cout << "planted dataset written to " << out << " (" << inst.data.rows() << " rows, "
              << spec.classes << " classes, min separation "
              << fmt_double(inst.separation.delta_sep) << ")\n";
    print_empty_audit();
    return 0;
}

struct BenchFlags {
    std::string k_grid = "3";
    std::string clip_grid = "6";
    std::string epsilon_grid = "1";
    int seeds = 20;
    std::string seed_list;
    double delta = 1e-5;
    double cov_clip = -1.0; // negative = sigma * (sqrt(dim) + 3)
    int lloyd_iterations = 5;
    bool filtering = false;
    double multiplier = 6.0;
    double threshold = 6.0;
    Eigen::Index generations = 0;
    Eigen::Index test_per_class = 5000;
    bool no_classifiers = false;
    int jobs = 1;
    std::string out = "sweep.tsv";
    double max_weight_l1 = 0.05;
    double max_mean_l2 = -1.0; // negative = 0.5 sigma
    double max_cov_fro = -1.0; // negative = 0.2 sigma^2 sqrt(d)
    double min_purity = 0.99;
    double max_acc_gap = 0.02;
};

int cmd_bench(const SpecFlags& sflags, const BenchFlags& b, const MlpConfig& mlp,
              std::uint64_t seed) {
    SweepGrid grid;
    for (double k : parse_double_list(b.k_grid, "--k-grid")) {
        if (!(k >= 1.0) || k != std::floor(k)) throw UsageError("--k-grid entries must be integers");
        grid.ks.push_back(static_cast<int>(k));
    }
    grid.clips = parse_double_list(b.clip_grid, "--clip-grid");
    grid.epsilons = parse_double_list(b.epsilon_grid, "--epsilon-grid");
    if (!b.seed_list.empty()) {
        for (double s : parse_double_list(b.seed_list, "--seed-list"))
            grid.seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
        if (b.seeds < 1) throw UsageError("--seeds must be positive");
        for (int i = 0; i < b.seeds; ++i) grid.seeds.push_back(seed + static_cast<std::uint64_t>(i));
    }
    if (grid.seeds.size() == 1)
        std::cerr << "warning: medians over a single seed are degenerate\n";

    SweepOptions opt;
    opt.spec = spec_from(sflags, seed);
    opt.delta = b.delta;
    opt.cov_clip = b.cov_clip >= 0.0
                       ? b.cov_clip
                       : opt.spec.sigma * (std::sqrt(static_cast<double>(opt.spec.d)) + 3.0);
    opt.lloyd_iterations = b.lloyd_iterations;
    opt.filtering = b.filtering;
    opt.generation_multiplier = b.multiplier;
    opt.vote_threshold = b.threshold;
    opt.generations = b.generations;
    opt.test_per_class = b.test_per_class;
    opt.train_classifiers = !b.no_classifiers;
    opt.mlp = mlp;
    opt.jobs = b.jobs;

    SweepResult result = run_sweep(grid, opt);

    std::ofstream tsv(b.out, std::ios::trunc);
    if (!tsv) throw IoError("cannot open " + b.out + " for writing");
    tsv << format_sweep_tsv(result);
    if (!tsv) throw IoError("write failed on " + b.out);
    tsv.close();

    const double max_mean_l2 = b.max_mean_l2 >= 0.0 ? b.max_mean_l2 : 0.5 * opt.spec.sigma;
    const double max_cov_fro =
        b.max_cov_fro >= 0.0
            ? b.max_cov_fro
            : 0.2 * opt.spec.sigma * opt.spec.sigma * std::sqrt(static_cast<double>(opt.spec.d));

    std::cout << format_sweep_summary(result) << "\n";
    bool failed = false;
    for (const auto& s : result.summaries) {
        std::string verdict = "PASS";
        std::string reasons;
        const auto& m = s.median;
        if (!std::isfinite(m.weight_l1) || !std::isfinite(m.mean_l2_max) ||
            !std::isfinite(m.cov_fro_max) || !std::isfinite(m.purity)) {
            verdict = "SKIP";
            reasons = " (component count differs from the planted truth)";
        } else {
            auto check = [&](bool ok, const char* what) {
                if (!ok) {
                    verdict = "FAIL";
                    reasons += std::string(" ") + what;
                }
            };
            check(m.weight_l1 <= b.max_weight_l1, "weight_l1");
            check(m.mean_l2_max <= max_mean_l2, "mean_l2_max");
            check(m.cov_fro_max <= max_cov_fro, "cov_fro_max");
            check(m.purity >= b.min_purity, "purity");
            if (opt.train_classifiers)
                check(std::isfinite(m.acc_synth) && std::isfinite(m.acc_real) &&
                          m.acc_synth >= m.acc_real - b.max_acc_gap,
                      "accuracy_gap");
        }
        if (verdict == "FAIL") failed = true;
        std::cout << verdict << " k=" << s.k << " clip=" << fmt_double(s.clip)
                  << " epsilon=" << fmt_double(s.epsilon) << " seeds=" << s.seeds_used << reasons
                  << "\n";
    }
    std::cout << "table written to " << b.out << "\n";
    print_empty_audit();
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentially private GMM synthesis over embedding datasets", "dpgs"};
    app.require_subcommand(1);
    int rc = 0;
    std::string config_sink;

    // fit
    auto* fit = app.add_subcommand("fit", "Fit one private mixture per class");
    std::string fit_input, fit_out;
    FitFlags fit_flags;
    CLI::Option* fit_eps = nullptr;
    std::uint64_t fit_seed = 1;
    fit->add_option("--input", fit_input, "Labeled dataset (.csv or binary)")->required();
    fit->add_option("--out", fit_out, "Model file to write")->required();
    add_fit_flags(fit, fit_flags, fit_eps);
    auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "Rng seed (DPGS_SEED fallback)");
    fit->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    fit->callback([&] {
        rc = cmd_fit(fit_input, fit_out, fit_flags, fit_eps, resolve_seed(fit_seed_opt, fit_seed));
    });

    // generate
    auto* gen = app.add_subcommand("generate", "Sample synthetic rows from a fitted model");
    std::string gen_model, gen_out, gen_original;
    Eigen::Index gen_count = 0;
    double gen_multiplier = 6.0, gen_threshold = 6.0;
    bool gen_filter = false;
    std::uint64_t gen_seed = 1;
    gen->add_option("--model", gen_model, "Fitted model file")->required();
    gen->add_option("--out", gen_out, "Dataset file to write")->required();
    gen->add_option("-m,--count", gen_count, "Target rows per class")->required();
    gen->add_option("--multiplier", gen_multiplier, "Oversampling factor");
    gen->add_flag("--filter", gen_filter, "Apply the private vote filter");
    gen->add_option("--original", gen_original, "Original labeled dataset for filtering");
    gen->add_option("--threshold", gen_threshold, "Vote threshold");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Rng seed (DPGS_SEED fallback)");
    gen->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    gen->callback([&] {
        rc = cmd_generate(gen_model, gen_out, gen_count, gen_multiplier, gen_filter, gen_original,
                          gen_threshold, resolve_seed(gen_seed_opt, gen_seed));
    });

    // filter
    auto* filt = app.add_subcommand("filter", "Privately filter synthetic rows by votes");
    std::string filt_synth, filt_orig, filt_out;
    double filt_threshold = 6.0, filt_eps_v = 0.0, filt_delta = 0.0;
    bool filt_non_private = false;
    std::uint64_t filt_seed = 1;
    filt->add_option("--synthetic", filt_synth, "Labeled synthetic dataset")->required();
    filt->add_option("--original", filt_orig, "Labeled original dataset")->required();
    filt->add_option("--out", filt_out, "Dataset file to write")->required();
    filt->add_option("--threshold", filt_threshold, "Vote threshold");
    auto* filt_eps = filt->add_option("--epsilon", filt_eps_v, "Vote budget");
    filt->add_option("--delta", filt_delta, "Vote delta (unused by the pure mechanism)");
    filt->add_flag("--non-private", filt_non_private, "Disable vote noise");
    auto* filt_seed_opt = filt->add_option("--seed", filt_seed, "Rng seed (DPGS_SEED fallback)");
    filt->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    filt->callback([&] {
        rc = cmd_filter(filt_synth, filt_orig, filt_out, filt_threshold, filt_non_private,
                        filt_eps, filt_eps_v, filt_delta, resolve_seed(filt_seed_opt, filt_seed));
    });

    // train-mlp
    auto* train = app.add_subcommand("train-mlp", "Train the two-layer classifier");
    std::string train_input, train_out;
    MlpConfig train_cfg;
    std::uint64_t train_seed = 1;
    train->add_option("--input", train_input, "Labeled training dataset")->required();
    train->add_option("--out", train_out, "Classifier file to write")->required();
    train->add_option("--hidden", train_cfg.hidden, "Hidden width");
    train->add_option("--epochs", train_cfg.epochs, "Training epochs");
    train->add_option("--batch", train_cfg.batch, "Batch size");
    train->add_option("--lr", train_cfg.learning_rate, "Initial learning rate");
    train->add_option("--dropout", train_cfg.dropout, "Hidden dropout probability");
    train->add_option("--smoothing", train_cfg.label_smoothing, "Label smoothing");
    train->add_option("--weight-decay", train_cfg.weight_decay, "L2 penalty");
    auto* train_seed_opt = train->add_option("--seed", train_seed, "Rng seed (DPGS_SEED fallback)");
    train->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    train->callback([&] {
        rc = cmd_train_mlp(train_input, train_out, train_cfg,
                           resolve_seed(train_seed_opt, train_seed));
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a classifier on a labeled dataset");
    std::string eval_model, eval_test;
    eval_cmd->add_option("--model", eval_model, "Classifier file")->required();
    eval_cmd->add_option("--test", eval_test, "Labeled test dataset")->required();
    eval_cmd->callback([&] { rc = cmd_eval(eval_model, eval_test); });

    // plant
    auto* plant = app.add_subcommand("plant", "Write a planted ground-truth dataset");
    SpecFlags plant_spec;
    std::string plant_out, plant_components, plant_truth;
    std::uint64_t plant_seed = 1;
    plant->add_option("--out", plant_out, "Dataset file to write")->required();
    add_spec_flags(plant, plant_spec);
    plant->add_option("--components-out", plant_components,
                      "Optional per-row generating component list");
    plant->add_option("--truth-out", plant_truth, "Optional ground-truth model file");
    auto* plant_seed_opt = plant->add_option("--seed", plant_seed, "Rng seed (DPGS_SEED fallback)");
    plant->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    plant->callback([&] {
        rc = cmd_plant(plant_spec, plant_out, plant_components, plant_truth,
                       resolve_seed(plant_seed_opt, plant_seed));
    });

    // bench
    auto* bench = app.add_subcommand("bench", "Grid sweep against a planted truth");
    SpecFlags bench_spec;
    BenchFlags bench_flags;
    MlpConfig bench_mlp;
    std::uint64_t bench_seed = 1;
    add_spec_flags(bench, bench_spec);
    bench->add_option("--k-grid", bench_flags.k_grid, "Comma-separated component counts");
    bench->add_option("--clip-grid", bench_flags.clip_grid, "Comma-separated estimator clips");
    bench->add_option("--epsilon-grid", bench_flags.epsilon_grid,
                      "Comma-separated budgets ('inf' = non-private)");
    bench->add_option("--seeds", bench_flags.seeds, "Consecutive seeds starting at --seed");
    bench->add_option("--seed-list", bench_flags.seed_list, "Explicit comma-separated seeds");
    bench->add_option("--delta", bench_flags.delta, "Privacy failure probability");
    bench->add_option("--cov-clip", bench_flags.cov_clip,
                      "Covariance-stage clip (default sigma * (sqrt(dim) + 3))");
    bench->add_option("--lloyd-iterations", bench_flags.lloyd_iterations, "Lloyd iterations");
    bench->add_flag("--filtering", bench_flags.filtering, "Run the vote filter in each cell");
    bench->add_option("--multiplier", bench_flags.multiplier, "Oversampling factor");
    bench->add_option("--threshold", bench_flags.threshold, "Vote threshold");
    bench->add_option("--generations", bench_flags.generations,
                      "Synthetic rows per class (0 = n-per-class)");
    bench->add_option("--test-per-class", bench_flags.test_per_class, "Holdout rows per class");
    bench->add_flag("--no-classifiers", bench_flags.no_classifiers,
                    "Skip the accuracy comparison");
    bench->add_option("--jobs", bench_flags.jobs, "Parallel sweep cells");
    bench->add_option("--out", bench_flags.out, "TSV table path");
    bench->add_option("--epochs", bench_mlp.epochs, "Classifier epochs");
    bench->add_option("--hidden", bench_mlp.hidden, "Classifier hidden width");
    bench->add_option("--max-weight-l1", bench_flags.max_weight_l1, "Weight error threshold");
    bench->add_option("--max-mean-l2", bench_flags.max_mean_l2,
                      "Mean error threshold (default 0.5 sigma)");
    bench->add_option("--max-cov-fro", bench_flags.max_cov_fro,
                      "Covariance error threshold (default 0.2 sigma^2 sqrt(dim))");
    bench->add_option("--min-purity", bench_flags.min_purity, "Purity threshold");
    bench->add_option("--max-acc-gap", bench_flags.max_acc_gap,
                      "Largest admissible synthetic accuracy shortfall");
    auto* bench_seed_opt = bench->add_option("--seed", bench_seed, "Rng seed (DPGS_SEED fallback)");
    bench->add_option("--config", config_sink, "Flat key=value defaults; flags override");
    bench->callback([&] {
        rc = cmd_bench(bench_spec, bench_flags, bench_mlp, resolve_seed(bench_seed_opt, bench_seed));
    });

    try {
        auto args = expand_config(app, argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 64;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 64;
    } catch (const AuditError& e) {
        std::cerr << "audit failure: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const dpgs::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
