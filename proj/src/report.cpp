#include "affdbn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace affdbn {

namespace {

using ConfigKey = std::tuple<std::string, std::string, std::string>;  // method, modalities, architecture

int method_rank(const std::string& name) {
  try {
    return static_cast<int>(parse_method(name));
  } catch (const std::invalid_argument&) {
    return 100;
  }
}

int modality_count(const std::string& label) {
  if (label == "-" || label.empty()) return 0;
  return 1 + static_cast<int>(std::count_if(label.begin(), label.end(), [](char c) { return c == '+' || c == '>'; }));
}

// Columns by (output size, depth, first layer size); unparseable labels last.
auto column_key(const std::string& arch) {
  try {
    const auto a = Architecture::parse(arch);
    return std::make_tuple(0, a.output_size(), static_cast<Index>(a.depth()), a.layer_sizes.front(), arch);
  } catch (const std::invalid_argument&) {
    return std::make_tuple(1, Index{0}, Index{0}, Index{0}, arch);
  }
}

auto row_key(const std::string& method, const std::string& modalities) {
  return std::make_tuple(method_rank(method), method, modality_count(modalities), modalities);
}

// One summary row per configuration: its aggregate row when present,
// otherwise the mean of its fold rows.
std::vector<ResultRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<ConfigKey, ResultRow> aggregates;
  std::map<ConfigKey, std::vector<const ResultRow*>> folds;
  for (const auto& r : rows) {
    ConfigKey key{r.method, r.modalities, r.architecture};
    if (r.record == "aggregate")
      aggregates.emplace(key, r);
    else
      folds[key].push_back(&r);
  }
  for (const auto& [key, list] : folds) {
    if (aggregates.count(key)) continue;
    ResultRow agg = *list.front();
    agg.record = "aggregate";
    agg.repeat.reset();
    agg.fold.reset();
    double auc_sum = 0, acc_sum = 0, prec_sum = 0;
    int auc_n = 0, prec_n = 0;
    for (const auto* r : list) {
      acc_sum += r->accuracy;
      if (r->auc) auc_sum += *r->auc, ++auc_n;
      if (r->precision) prec_sum += *r->precision, ++prec_n;
    }
    agg.accuracy = acc_sum / static_cast<double>(list.size());
    agg.auc = auc_n ? std::optional<double>(auc_sum / auc_n) : std::nullopt;
    agg.precision = prec_n ? std::optional<double>(prec_sum / prec_n) : std::nullopt;
    aggregates.emplace(key, std::move(agg));
  }
  std::vector<ResultRow> out;
  for (auto& [key, r] : aggregates) out.push_back(std::move(r));
  std::stable_sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(row_key(a.method, a.modalities), column_key(a.architecture)) <
           std::make_tuple(row_key(b.method, b.modalities), column_key(b.architecture));
  });
  return out;
}

std::string render_grid(const std::vector<ResultRow>& summary) {
  std::vector<std::string> columns;
  for (const auto& r : summary)
    if (std::find(columns.begin(), columns.end(), r.architecture) == columns.end()) columns.push_back(r.architecture);
  std::sort(columns.begin(), columns.end(),
            [](const std::string& a, const std::string& b) { return column_key(a) < column_key(b); });

  std::vector<std::pair<std::string, std::string>> row_ids;
  for (const auto& r : summary) {
    std::pair<std::string, std::string> id{r.method, r.modalities};
    if (std::find(row_ids.begin(), row_ids.end(), id) == row_ids.end()) row_ids.push_back(id);
  }
  std::sort(row_ids.begin(), row_ids.end(), [](const auto& a, const auto& b) {
    return row_key(a.first, a.second) < row_key(b.first, b.second);
  });

  // Round once so the marked maximum agrees with what is printed.
  auto rounded = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return std::string(buf);
  };
  std::map<std::pair<std::size_t, std::size_t>, std::string> cell;
  std::vector<double> best(columns.size(), -1.0);
  for (const auto& r : summary) {
    if (!r.auc) continue;
    const auto ri = static_cast<std::size_t>(
        std::find(row_ids.begin(), row_ids.end(), std::make_pair(r.method, r.modalities)) - row_ids.begin());
    const auto ci =
        static_cast<std::size_t>(std::find(columns.begin(), columns.end(), r.architecture) - columns.begin());
    cell[{ri, ci}] = rounded(*r.auc);
    best[ci] = std::max(best[ci], std::stod(cell[{ri, ci}]));
  }

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"method", "modalities"};
  header.insert(header.end(), columns.begin(), columns.end());
  table.push_back(header);
  for (std::size_t ri = 0; ri < row_ids.size(); ++ri) {
    std::vector<std::string> line{row_ids[ri].first, row_ids[ri].second};
    for (std::size_t ci = 0; ci < columns.size(); ++ci) {
      auto it = cell.find({ri, ci});
      if (it == cell.end()) {
        line.push_back(".");
      } else {
        line.push_back(it->second + (std::stod(it->second) == best[ci] ? "*" : ""));
      }
    }
    table.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream out;
  for (const auto& line : table) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) text += "  ";
      text += line[c];
      if (c + 1 < line.size()) text += std::string(width[c] - line[c].size(), ' ');
    }
    out << text << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  if (rows.empty()) throw std::invalid_argument("render_report: empty results table");
  const auto summary = summarize(rows);
  if (format == ReportFormat::grid) return render_grid(summary);
  std::ostringstream out;
  write_results(out, summary);
  return out.str();
}

}  // namespace affdbn
