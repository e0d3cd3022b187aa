#include "kga/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "kga/error.hpp"

namespace kga {

std::vector<Index> rank_target_entities(const AlignmentParams& params, const AlignmentTables& tables,
                                        Index source_entity) {
  const auto dist = entity_align_dist(params, tables, source_entity);
  std::vector<Index> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&dist](Index a, Index b) {
    return dist.log_probs(a) > dist.log_probs(b);
  });
  return order;
}

std::size_t rank_of_target(const AlignmentParams& params, const AlignmentTables& tables,
                           Index source_entity, Index target_entity) {
  const auto dist = entity_align_dist(params, tables, source_entity);
  if (target_entity >= dist.size()) throw IndexError("target entity index out of range");
  const double key = dist.log_probs(target_entity);
  std::size_t rank = 1;
  for (Eigen::Index j = 0; j < dist.log_probs.size(); ++j) {
    const double k = dist.log_probs(j);
    if (k > key || (k == key && j < static_cast<Eigen::Index>(target_entity))) ++rank;
  }
  return rank;
}

std::vector<std::size_t> alignment_ranks(const AlignmentParams& params,
                                         const AlignmentTables& tables,
                                         std::span<const IndexPair> test_pairs) {
  std::vector<std::size_t> ranks;
  ranks.reserve(test_pairs.size());
  for (const auto& p : test_pairs) ranks.push_back(rank_of_target(params, tables, p.source, p.target));
  return ranks;
}

EvalReport report_from_ranks(std::span<const std::size_t> ranks, std::span<const std::size_t> ks) {
  if (ranks.empty()) throw ArgumentError("cannot evaluate an empty test set");
  EvalReport r;
  r.n_test = ranks.size();
  const double n = static_cast<double>(ranks.size());
  double sum = 0.0;
  for (auto rank : ranks) sum += static_cast<double>(rank);
  r.mean_rank = sum / n;
  for (auto k : ks) {
    const auto hit = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t x) { return x <= k; });
    r.hits_at[k] = static_cast<double>(hit) / n;
  }
  return r;
}

EvalReport evaluate(const AlignmentParams& params, const AlignmentTables& tables,
                    std::span<const IndexPair> test_pairs, std::span<const std::size_t> ks) {
  if (test_pairs.empty()) throw ArgumentError("cannot evaluate an empty test set");
  const auto ranks = alignment_ranks(params, tables, test_pairs);
  return report_from_ranks(ranks, ks);
}

std::vector<Index> top_assignments(const AlignmentParams& params, const AlignmentTables& tables,
                                   std::span<const Index> sources) {
  std::vector<Index> out;
  out.reserve(sources.size());
  for (Index s : sources) {
    const auto dist = entity_align_dist(params, tables, s);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < dist.log_probs.size(); ++j) {
      if (dist.log_probs(j) > dist.log_probs(best)) best = j;
    }
    out.push_back(static_cast<Index>(best));
  }
  return out;
}

CollapseHistogram collapse_histogram(const AlignmentParams& params, const AlignmentTables& tables,
                                     std::span<const Index> sources, std::size_t top) {
  if (sources.empty()) throw ArgumentError("collapse histogram needs at least one source");
  std::map<Index, std::size_t> counts;
  for (Index t : top_assignments(params, tables, sources)) ++counts[t];
  CollapseHistogram hist;
  hist.n_sources = sources.size();
  hist.entries.assign(counts.begin(), counts.end());
  std::stable_sort(hist.entries.begin(), hist.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (hist.entries.size() > top) hist.entries.resize(top);
  return hist;
}

double histogram_entropy(const CollapseHistogram& hist) {
  double total = 0.0;
  for (const auto& e : hist.entries) total += static_cast<double>(e.second);
  double h = 0.0;
  for (const auto& e : hist.entries) {
    const double p = static_cast<double>(e.second) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_text(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_text(path);
  for (const auto& [k, v] : report.hits_at) out << "hits@" << k << '\t' << format_number(v) << '\n';
  out << "mean_rank\t" << format_number(report.mean_rank) << '\n';
  out << "n_test\t" << report.n_test << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_columns(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows, const std::filesystem::path& path) {
  auto out = open_text(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw ArgumentError("plot row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << format_number(row[i]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void emit_plot_data(const EvalReport& report, const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  for (const auto& [k, v] : report.hits_at) rows.push_back({static_cast<double>(k), v});
  write_columns({"k", "hits"}, rows, path);
}

void emit_plot_data(const CollapseHistogram& hist, const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < hist.entries.size(); ++i) {
    rows.push_back({static_cast<double>(i + 1), static_cast<double>(hist.entries[i].first),
                    static_cast<double>(hist.entries[i].second)});
  }
  write_columns({"position", "target", "count"}, rows, path);
}

}  // namespace kga
