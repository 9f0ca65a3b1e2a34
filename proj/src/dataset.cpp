#include "dpgs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'G', 'E'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError(std::string("dataset: truncated while reading ") + what);
    return value;
}

std::string row_msg(const char* what, std::size_t row) {
    return std::string("dataset csv: ") + what + " at row " + std::to_string(row + 1);
}

} // namespace

std::int32_t EmbeddingDataset::num_classes() const {
    if (!labels || labels->empty()) return 0;
    return *std::max_element(labels->begin(), labels->end()) + 1;
}

void EmbeddingDataset::validate() const {
    if (rows() < 1 || dim() < 1)
        throw ContractError("EmbeddingDataset: needs at least one row and one column");
    if (!points.allFinite())
        throw ContractError("EmbeddingDataset: entries must be finite");
    if (labels) {
        if (static_cast<Eigen::Index>(labels->size()) != rows())
            throw ContractError("EmbeddingDataset: label count must match row count");
        for (std::int32_t l : *labels) {
            if (l < 0) throw ContractError("EmbeddingDataset: labels must be nonnegative");
        }
    }
}

namespace {

EmbeddingDataset load_csv(const std::filesystem::path& path, bool with_labels) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::vector<double> values;
    std::vector<std::int32_t> labels;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::size_t field_count = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            const char* comma = std::find(p, end, ',');
            while (p < comma && (*p == ' ' || *p == '\t')) ++p;
            double v;
            auto [ptr, ec] = std::from_chars(p, comma, v);
            while (ptr < comma && (*ptr == ' ' || *ptr == '\t')) ++ptr;
            if (ec != std::errc() || ptr != comma || !std::isfinite(v))
                throw ParseError(row_msg("bad numeric field", rows));
            values.push_back(v);
            ++field_count;
            if (comma == end) break;
            p = comma + 1;
        }
        if (with_labels) {
            if (field_count < 2) throw ParseError(row_msg("missing label column", rows));
            double raw = values.back();
            values.pop_back();
            --field_count;
            if (raw != std::floor(raw) || raw < 0 || raw > 2e9)
                throw ParseError(row_msg("label must be a nonnegative integer", rows));
            labels.push_back(static_cast<std::int32_t>(raw));
        }
        if (cols == 0) {
            cols = field_count;
        } else if (field_count != cols) {
            throw ParseError(row_msg("inconsistent column count", rows));
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("dataset csv: no rows in " + path.string());

    EmbeddingDataset ds;
    ds.points = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
    if (with_labels) ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

EmbeddingDataset load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("dataset: bad magic in " + path.string());
    auto version = read_raw<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw ParseError("dataset: unsupported version " + std::to_string(version));
    auto n = read_raw<std::uint64_t>(in, "row count");
    auto d = read_raw<std::uint64_t>(in, "column count");
    auto has_labels = read_raw<std::uint8_t>(in, "label flag");
    if (n == 0 || d == 0) throw ParseError("dataset: empty shape in " + path.string());

    EmbeddingDataset ds;
    ds.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    in.read(reinterpret_cast<char*>(ds.points.data()),
            static_cast<std::streamsize>(n * d * sizeof(double)));
    if (!in) throw ParseError("dataset: truncated data block in " + path.string());
    if (has_labels) {
        std::vector<std::int32_t> labels(n);
        in.read(reinterpret_cast<char*>(labels.data()),
                static_cast<std::streamsize>(n * sizeof(std::int32_t)));
        if (!in) throw ParseError("dataset: truncated label block in " + path.string());
        ds.labels = std::move(labels);
    }
    ds.validate();
    return ds;
}

} // namespace

EmbeddingDataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                              bool with_labels) {
    return format == DatasetFormat::csv ? load_csv(path, with_labels) : load_binary(path);
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
    ds.validate();
    if (format == DatasetFormat::csv) {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        char buf[64];
        for (Eigen::Index i = 0; i < ds.rows(); ++i) {
            for (Eigen::Index j = 0; j < ds.dim(); ++j) {
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), ds.points(i, j),
                                               std::chars_format::general, 17);
                out.write(buf, ptr - buf);
                if (j + 1 < ds.dim() || ds.labels) out.put(',');
            }
            if (ds.labels) out << (*ds.labels)[static_cast<std::size_t>(i)];
            out.put('\n');
        }
        if (!out) throw IoError("write failure on " + path.string());
        return;
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<std::uint64_t>(ds.rows()));
    write_raw(out, static_cast<std::uint64_t>(ds.dim()));
    write_raw(out, static_cast<std::uint8_t>(ds.labels ? 1 : 0));
    out.write(reinterpret_cast<const char*>(ds.points.data()),
              static_cast<std::streamsize>(ds.points.size() * sizeof(double)));
    if (ds.labels) {
        out.write(reinterpret_cast<const char*>(ds.labels->data()),
                  static_cast<std::streamsize>(ds.labels->size() * sizeof(std::int32_t)));
    }
    if (!out) throw IoError("write failure on " + path.string());
}

std::vector<std::pair<std::int32_t, EmbeddingDataset>> split_by_label(const EmbeddingDataset& ds) {
    ds.validate();
    if (!ds.labels) throw ContractError("split_by_label: dataset has no labels");

    std::vector<std::int32_t> order(ds.labels->begin(), ds.labels->end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    std::vector<std::pair<std::int32_t, EmbeddingDataset>> parts;
    parts.reserve(order.size());
    for (std::int32_t label : order) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < ds.rows(); ++i) {
            if ((*ds.labels)[static_cast<std::size_t>(i)] == label) idx.push_back(i);
        }
        EmbeddingDataset part;
        part.points.resize(static_cast<Eigen::Index>(idx.size()), ds.dim());
        for (std::size_t r = 0; r < idx.size(); ++r) part.points.row(static_cast<Eigen::Index>(r)) = ds.points.row(idx[r]);
        parts.emplace_back(label, std::move(part));
    }
    return parts;
}

} // namespace dpgs
