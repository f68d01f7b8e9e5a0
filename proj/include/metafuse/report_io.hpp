#pragma once

// Text serialisation of evaluation and delta reports.
//
// Tables are tab-separated with leading `#` comment lines carrying provenance
// (config fingerprint, seeds). Numbers are printed with %.10g so reruns are
// byte-identical.

#include <filesystem>
#include <string>
#include <vector>

#include "metafuse/experiment.hpp"
#include "metafuse/metrics.hpp"

namespace metafuse {

std::string format_number(double v);

/// Per-class rows followed by a `macro` row.
std::string metrics_table(const EvaluationReport& rep, const std::vector<std::string>& provenance);

/// class, threshold, fpr, tpr for every class curve.
std::string roc_table(const EvaluationReport& rep, const std::vector<std::string>& provenance);

/// network, condition, metric, delta (one row per macro metric plus `auroc`).
std::string bar_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance);

/// network, condition, class, auroc_delta.
std::string boxplot_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance);

/// network, condition, n, min, q1, median, q3, max.
std::string boxplot_summary_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance);

/// Machine-readable evaluation report (JSON), lossless for doubles.
std::string report_to_json(const EvaluationReport& rep);
EvaluationReport report_from_json(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace metafuse
