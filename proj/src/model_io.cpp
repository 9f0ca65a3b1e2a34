#include "dpgs/model_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_bytes(std::ofstream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void write_u32(std::ofstream& out, std::uint32_t v) { write_bytes(out, &v, sizeof v); }
void write_i32(std::ofstream& out, std::int32_t v) { write_bytes(out, &v, sizeof v); }
void write_u64(std::ofstream& out, std::uint64_t v) { write_bytes(out, &v, sizeof v); }
void write_u8(std::ofstream& out, std::uint8_t v) { write_bytes(out, &v, sizeof v); }
void write_f64(std::ofstream& out, double v) { write_bytes(out, &v, sizeof v); }

void write_f64_array(std::ofstream& out, const double* data, std::size_t count) {
    write_bytes(out, data, count * sizeof(double));
}

void read_bytes(std::ifstream& in, void* data, std::size_t size, const std::string& path) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size)
        throw ParseError(path + ": truncated model file");
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v;
    read_bytes(in, &v, sizeof v, path);
    return v;
}
std::int32_t read_i32(std::ifstream& in, const std::string& path) {
    std::int32_t v;
    read_bytes(in, &v, sizeof v, path);
    return v;
}
std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v;
    read_bytes(in, &v, sizeof v, path);
    return v;
}
std::uint8_t read_u8(std::ifstream& in, const std::string& path) {
    std::uint8_t v;
    read_bytes(in, &v, sizeof v, path);
    return v;
}
double read_f64(std::ifstream& in, const std::string& path) {
    double v;
    read_bytes(in, &v, sizeof v, path);
    return v;
}

void check_magic(std::ifstream& in, const char* magic, const std::string& path) {
    char buf[4];
    read_bytes(in, buf, 4, path);
    if (std::memcmp(buf, magic, 4) != 0)
        throw ParseError(path + ": not a " + magic + " file");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

void write_covariance(std::ofstream& out, const Covariance& cov) {
    write_u8(out, cov.model == CovarianceModel::diagonal ? 0 : 1);
    if (cov.model == CovarianceModel::diagonal)
        write_f64_array(out, cov.diag.data(), static_cast<std::size_t>(cov.diag.size()));
    else
        write_f64_array(out, cov.dense.data(), static_cast<std::size_t>(cov.dense.size()));
}

Covariance read_covariance(std::ifstream& in, Eigen::Index d, const std::string& path) {
    const auto tag = read_u8(in, path);
    if (tag == 0) {
        Vector diag(d);
        read_bytes(in, diag.data(), static_cast<std::size_t>(d) * sizeof(double), path);
        return Covariance::diagonal(std::move(diag));
    }
    if (tag == 1) {
        Matrix dense(d, d);
        read_bytes(in, dense.data(), static_cast<std::size_t>(d * d) * sizeof(double), path);
        return Covariance::full(std::move(dense));
    }
    throw ParseError(path + ": unknown covariance tag " + std::to_string(tag));
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

void save_models(const std::string& path, const ModelFile& file) {
    if (file.models.empty()) throw ContractError("save_models: no models");
    for (const auto& [label, model] : file.models) model.validate();
    file.budget.validate();

    auto out = open_out(path);
    write_bytes(out, "DPGM", 4);
    write_u32(out, 1);
    write_f64(out, file.budget.epsilon);
    write_f64(out, file.budget.delta);
    write_u32(out, static_cast<std::uint32_t>(file.shares.size()));
    for (double s : file.shares) write_f64(out, s);
    write_u32(out, static_cast<std::uint32_t>(file.models.size()));
    for (const auto& [label, model] : file.models) {
        write_i32(out, label);
        write_u64(out, static_cast<std::uint64_t>(model.components()));
        write_u64(out, static_cast<std::uint64_t>(model.dim()));
        write_f64_array(out, model.weights.data(),
                        static_cast<std::size_t>(model.weights.size()));
        write_f64_array(out, model.means.data(), static_cast<std::size_t>(model.means.size()));
        for (const auto& cov : model.covariances) write_covariance(out, cov);
        write_u8(out, model.degenerate.empty() ? 0 : 1);
        if (!model.degenerate.empty())
            write_bytes(out, model.degenerate.data(), model.degenerate.size());
    }
    if (!out) throw IoError("write failed on " + path);
}

ModelFile load_models(const std::string& path) {
    auto in = open_in(path);
    check_magic(in, "DPGM", path);
    const auto version = read_u32(in, path);
    if (version != 1) throw ParseError(path + ": unsupported version " + std::to_string(version));

    ModelFile file;
    file.budget.epsilon = read_f64(in, path);
    file.budget.delta = read_f64(in, path);
    file.budget.validate();
    const auto share_count = read_u32(in, path);
    for (std::uint32_t i = 0; i < share_count; ++i) file.shares.push_back(read_f64(in, path));

    const auto model_count = read_u32(in, path);
    if (model_count == 0) throw ParseError(path + ": no models");
    for (std::uint32_t mi = 0; mi < model_count; ++mi) {
        const auto label = read_i32(in, path);
        const auto k = static_cast<Eigen::Index>(read_u64(in, path));
        const auto d = static_cast<Eigen::Index>(read_u64(in, path));
        if (k < 1 || d < 1 || k > (1 << 20) || d > (1 << 20))
            throw ParseError(path + ": implausible model shape");
        GmmModel model;
        model.weights.resize(k);
        read_bytes(in, model.weights.data(), static_cast<std::size_t>(k) * sizeof(double), path);
        model.means.resize(k, d);
        read_bytes(in, model.means.data(), static_cast<std::size_t>(k * d) * sizeof(double),
                   path);
        model.covariances.reserve(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < k; ++i)
            model.covariances.push_back(read_covariance(in, d, path));
        if (read_u8(in, path) != 0) {
            model.degenerate.resize(static_cast<std::size_t>(k));
            read_bytes(in, model.degenerate.data(), model.degenerate.size(), path);
        }
        model.validate();
        file.models.emplace_back(label, std::move(model));
    }
    return file;
}

void save_mlp(const std::string& path, const MlpModel& model) {
    auto out = open_out(path);
    write_bytes(out, "DPML", 4);
    write_u32(out, 1);
    write_u64(out, static_cast<std::uint64_t>(model.dim()));
    write_u64(out, static_cast<std::uint64_t>(model.w1.rows()));
    write_u64(out, static_cast<std::uint64_t>(model.classes()));
    write_f64_array(out, model.norm_mean.data(),
                    static_cast<std::size_t>(model.norm_mean.size()));
    write_f64_array(out, model.norm_std.data(), static_cast<std::size_t>(model.norm_std.size()));
    write_f64_array(out, model.w1.data(), static_cast<std::size_t>(model.w1.size()));
    write_f64_array(out, model.b1.data(), static_cast<std::size_t>(model.b1.size()));
    write_f64_array(out, model.w2.data(), static_cast<std::size_t>(model.w2.size()));
    write_f64_array(out, model.b2.data(), static_cast<std::size_t>(model.b2.size()));
    if (!out) throw IoError("write failed on " + path);
}

MlpModel load_mlp(const std::string& path) {
    auto in = open_in(path);
    check_magic(in, "DPML", path);
    const auto version = read_u32(in, path);
    if (version != 1) throw ParseError(path + ": unsupported version " + std::to_string(version));
    const auto d = static_cast<Eigen::Index>(read_u64(in, path));
    const auto hidden = static_cast<Eigen::Index>(read_u64(in, path));
    const auto classes = static_cast<Eigen::Index>(read_u64(in, path));
    if (d < 1 || hidden < 1 || classes < 2 || d > (1 << 20) || hidden > (1 << 20) ||
        classes > (1 << 20))
        throw ParseError(path + ": implausible model shape");

    MlpModel model;
    model.norm_mean.resize(d);
    read_bytes(in, model.norm_mean.data(), static_cast<std::size_t>(d) * sizeof(double), path);
    model.norm_std.resize(d);
    read_bytes(in, model.norm_std.data(), static_cast<std::size_t>(d) * sizeof(double), path);
    model.w1.resize(hidden, d);
    read_bytes(in, model.w1.data(), static_cast<std::size_t>(hidden * d) * sizeof(double), path);
    model.b1.resize(hidden);
    read_bytes(in, model.b1.data(), static_cast<std::size_t>(hidden) * sizeof(double), path);
    model.w2.resize(classes, hidden);
    read_bytes(in, model.w2.data(), static_cast<std::size_t>(classes * hidden) * sizeof(double),
               path);
    model.b2.resize(classes);
    read_bytes(in, model.b2.data(), static_cast<std::size_t>(classes) * sizeof(double), path);
    if (!model.norm_std.allFinite() || (model.norm_std.array() <= 0.0).any())
        throw ParseError(path + ": invalid normalization");
    return model;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
    auto in = open_in(path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + " line " + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(text.substr(0, eq));
        if (key.empty())
            throw ParseError(path + " line " + std::to_string(lineno) + ": empty key");
        if (out.count(key) != 0)
            throw ParseError(path + " line " + std::to_string(lineno) + ": duplicate key '" +
                             key + "'");
        out[key] = trim(text.substr(eq + 1));
    }
    return out;
}

std::string format_report(const SyntheticReport& report) {
    std::string text;
    text += "[run]\n";
    text += "seed = " + std::to_string(report.seed) + "\n";
    text += "classes = " + std::to_string(report.classes.size()) + "\n";
    text += "synthetic_rows = " + std::to_string(report.synthetic.points.rows()) + "\n";
    text += "\n[budget]\n";
    text += "epsilon = " + fmt(report.ledger.total().epsilon) + "\n";
    text += "delta = " + fmt(report.ledger.total().delta) + "\n";
    for (const auto& cls : report.classes) {
        text += "\n[class " + std::to_string(cls.label) + "]\n";
        text += "components = " + std::to_string(cls.model.components()) + "\n";
        text += "generated = " + std::to_string(cls.generated) + "\n";
        text += "survivors = " + std::to_string(cls.survivors) + "\n";
        text += "reseeds = " + std::to_string(cls.reseeds) + "\n";
        text += "filter_empty = " + std::string(cls.filter_empty ? "1" : "0") + "\n";
        text += "weights =";
        for (Eigen::Index i = 0; i < cls.model.weights.size(); ++i)
            text += " " + fmt(cls.model.weights[i]);
        text += "\n";
    }
    text += "\n[ledger]\n";
    text += report.ledger.format();
    return text;
}

} // namespace dpgs
