#include "ttb/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace ttb {

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to merge");
  EvalReport merged = reports.front();
  std::map<std::string, CellResult> seen;
  for (const auto& [key, cell] : merged.cells) seen[key.label()] = cell;
  for (size_t i = 1; i < reports.size(); ++i) {
    for (const auto& [key, cell] : reports[i].cells) {
      auto it = seen.find(key.label());
      if (it == seen.end()) {
        seen[key.label()] = cell;
        merged.cells.push_back({key, cell});
      } else if (it->second.episodes != cell.episodes || it->second.successes != cell.successes) {
        throw std::runtime_error("conflicting duplicate cell in reports: " + key.label());
      }
    }
  }
  std::stable_sort(merged.cells.begin(), merged.cells.end(),
                   [](const auto& a, const auto& b) { return a.first.label() < b.first.label(); });
  return merged;
}

namespace {

std::vector<AggregateRow> aggregate_by(const EvalReport& report,
                                       const std::function<std::string(const CellKey&)>& group_of) {
  std::map<std::string, AggregateRow> groups;
  for (const auto& [key, cell] : report.cells) {
    if (cell.skipped) continue;
    auto& row = groups[group_of(key)];
    row.group = group_of(key);
    row.episodes += cell.episodes - cell.errors;
    row.successes += cell.successes;
  }
  std::vector<AggregateRow> out;
  for (auto& [g, row] : groups) out.push_back(row);
  return out;
}

}  // namespace

std::vector<AggregateRow> aggregate_per_level(const EvalReport& report) {
  return aggregate_by(report, [](const CellKey& k) {
    return std::string(level_name(k.level)) + "|" + difficulty_name(k.difficulty) + "|" +
           perturb_name(k.perturbation);
  });
}

std::vector<AggregateRow> aggregate_per_task(const EvalReport& report) {
  return aggregate_by(report, [](const CellKey& k) {
    return std::string(task_name(k.task)) + "|" + level_name(k.level) + "|" +
           perturb_name(k.perturbation);
  });
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows, const std::string& group_name) {
  std::string out = group_name + ",episodes,successes,rate\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f\n", r.group.c_str(), r.episodes, r.successes,
                  r.rate());
    out += buf;
  }
  return out;
}

void write_svg_barchart(const std::filesystem::path& path, const std::string& title,
                        const std::vector<AggregateRow>& rows) {
  const int bar_w = 18, gap = 6, chart_h = 220, label_h = 150, margin = 48;
  const int width = margin * 2 + static_cast<int>(rows.size()) * (bar_w + gap);
  const int height = chart_h + label_h + margin;

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n", width,
                height);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n",
                margin, title.c_str());
  svg += buf;
  // Axis line and 0/50/100% gridlines.
  for (int pct : {0, 50, 100}) {
    int y = margin + chart_h - chart_h * pct / 100;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"#cccccc\"/>"
                  "<text x=\"4\" y=\"%d\" font-family=\"sans-serif\" font-size=\"10\">%d%%</text>\n",
                  margin, y, width - margin / 2, y, y + 3, pct);
    svg += buf;
  }
  int x = margin;
  for (const auto& r : rows) {
    int h = static_cast<int>(r.rate() * chart_h);
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#4472a8\"/>\n", x,
                  margin + chart_h - h, bar_w, h);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"9\" "
                  "transform=\"rotate(60 %d %d)\">%s</text>\n",
                  x, margin + chart_h + 12, x, margin + chart_h + 12, r.group.c_str());
    svg += buf;
    x += bar_w + gap;
  }
  svg += "</svg>\n";
  write_text_file(path, svg);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

EvalReport load_report_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read report: " + path.string());
  return EvalReport::from_json(Json::parse(f));
}

void write_report_bundle(const EvalReport& merged, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "merged.csv", merged.to_csv());
  auto per_level = aggregate_per_level(merged);
  auto per_task = aggregate_per_task(merged);
  write_text_file(out_dir / "per_level.csv", aggregate_to_csv(per_level, "level|difficulty|perturbation"));
  write_text_file(out_dir / "per_task.csv", aggregate_to_csv(per_task, "task|level|perturbation"));
  write_svg_barchart(out_dir / "per_level.svg", "Success rate per level", per_level);
  write_svg_barchart(out_dir / "per_task.svg", "Success rate per task", per_task);
}

}  // namespace ttb
