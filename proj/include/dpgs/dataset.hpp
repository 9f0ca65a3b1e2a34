#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dpgs {

// Row-major throughout: a dataset row is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// n embedding rows in R^d with an optional integer class label per row.
struct EmbeddingDataset {
    Matrix points;
    std::optional<std::vector<std::int32_t>> labels;

    Eigen::Index rows() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
    bool has_labels() const { return labels.has_value(); }

    // Largest label + 1; 0 when unlabeled.
    std::int32_t num_classes() const;

    // Throws ContractError unless: at least one row and one column, every
    // entry finite, and labels (when present) match the row count with values
    // in [0, num_classes).
    void validate() const;
};

enum class DatasetFormat { csv, binary };

// Reads a dataset. CSV: one comma-separated row per point, optionally ending
// in an integer label column when with_labels is set. Binary: the DPGE
// container (with_labels is ignored; the header says whether labels exist).
// Malformed content throws ParseError naming the offending row; filesystem
// failures throw IoError.
EmbeddingDataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                              bool with_labels = false);

// Writes a dataset. Binary round-trips bit exactly; CSV is written with
// enough digits to round-trip doubles.
void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);

// Partitions rows by label, one entry per label value present, ascending.
// Row order is preserved inside each part. Throws ContractError when the
// dataset is unlabeled.
std::vector<std::pair<std::int32_t, EmbeddingDataset>> split_by_label(const EmbeddingDataset& ds);

} // namespace dpgs
