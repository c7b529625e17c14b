#pragma once

#include <string>
#include <vector>

#include "adamz/harness.hpp"

namespace adamz {

// Fixed 6-decimal formatting, '.' separator; NaN prints as "nan".
std::string format_fixed(double v);

// Writes summary.csv, runs.csv, loss_curves.csv, lr_trace.csv (trace of the
// first successful AdamZ record, when present), boxplot.svg and
// loss_curves.svg into out_dir (created if missing). Deterministic: identical
// records produce byte-identical files.
void export_results(const std::vector<RunRecord>& records, const BenchmarkSummary& summary,
                    const std::string& out_dir);

// step,lr,adjustment rows; lr is the post-adjustment rate of each step.
void write_lr_trace_csv(const RunRecord& record, const std::string& path);

// Loss and learning-rate overlay with adjustment markers.
void write_trace_svg(const RunRecord& record, const std::string& path);

// Minimal CSV reader for round-trip checks (no quoting, as produced above).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace adamz
