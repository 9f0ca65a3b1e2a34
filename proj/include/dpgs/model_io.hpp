#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpgs/budget.hpp"
#include "dpgs/gmm_model.hpp"
#include "dpgs/mlp.hpp"
#include "dpgs/pipeline.hpp"

namespace dpgs {

// Per-class mixture models plus the budget they were fitted under; the
// stored shares let later stages (vote filtering) draw their reserved part
// of the same declared budget.
struct ModelFile {
    std::vector<std::pair<std::int32_t, GmmModel>> models; // ascending labels
    PrivacyBudget budget;
    std::vector<double> shares;
};

// Binary container, magic "DPGM" version 1, little-endian f64 payloads.
void save_models(const std::string& path, const ModelFile& file);
ModelFile load_models(const std::string& path);

// Binary container, magic "DPML" version 1.
void save_mlp(const std::string& path, const MlpModel& model);
MlpModel load_mlp(const std::string& path);

// Flat "key = value" text: '#' comments and blank lines skipped, repeated
// keys are ParseErrors naming the line.
std::map<std::string, std::string> load_key_values(const std::string& path);

// Key-value sections summarizing a pipeline run, ledger audit included.
// Deterministic for identical reports (no clocks, no paths).
std::string format_report(const SyntheticReport& report);

} // namespace dpgs
