#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ttb/evaluator.hpp"

namespace ttb {

// Cell union of several reports; duplicate cell keys with different numbers
// are an error.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

struct AggregateRow {
  std::string group;
  int episodes = 0;
  int successes = 0;

  double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

// Success rates pooled over tasks (per level) and over levels (per task),
// mirroring the per-level / per-task table layout of the evaluation grids.
std::vector<AggregateRow> aggregate_per_level(const EvalReport& report);
std::vector<AggregateRow> aggregate_per_task(const EvalReport& report);

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows, const std::string& group_name);

// Static bar chart of success rates, one bar per row.
void write_svg_barchart(const std::filesystem::path& path, const std::string& title,
                        const std::vector<AggregateRow>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& content);
EvalReport load_report_json(const std::filesystem::path& path);

// Emits merged.csv, per_level.csv/.svg, per_task.csv/.svg into out_dir.
void write_report_bundle(const EvalReport& merged, const std::filesystem::path& out_dir);

}  // namespace ttb
