#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kga/alignment.hpp"

namespace kga {

struct EvalReport {
  std::map<std::size_t, double> hits_at;  // k → fraction of test pairs ranked ≤ k
  double mean_rank = 0.0;
  std::size_t n_test = 0;

  double hits(std::size_t k) const { return hits_at.at(k); }
};

/// Target entities by descending p(e_t | e_s); ties go to the lower index.
std::vector<Index> rank_target_entities(const AlignmentParams& params, const AlignmentTables& tables,
                                        Index source_entity);

/// 1-based raw rank of `target_entity` in rank_target_entities, without sorting.
std::size_t rank_of_target(const AlignmentParams& params, const AlignmentTables& tables,
                           Index source_entity, Index target_entity);

std::vector<std::size_t> alignment_ranks(const AlignmentParams& params,
                                         const AlignmentTables& tables,
                                         std::span<const IndexPair> test_pairs);

EvalReport report_from_ranks(std::span<const std::size_t> ranks,
                             std::span<const std::size_t> ks = std::initializer_list<std::size_t>{1, 10});

EvalReport evaluate(const AlignmentParams& params, const AlignmentTables& tables,
                    std::span<const IndexPair> test_pairs,
                    std::span<const std::size_t> ks = std::initializer_list<std::size_t>{1, 10});

/// How many sources put each target entity first, most popular first (ties by
/// index), truncated to `top` entries.
struct CollapseHistogram {
  std::vector<std::pair<Index, std::size_t>> entries;
  std::size_t n_sources = 0;

  std::size_t top_count() const { return entries.empty() ? 0 : entries.front().second; }
};

/// The top-1 target of each source.
std::vector<Index> top_assignments(const AlignmentParams& params, const AlignmentTables& tables,
                                   std::span<const Index> sources);

CollapseHistogram collapse_histogram(const AlignmentParams& params, const AlignmentTables& tables,
                                     std::span<const Index> sources, std::size_t top = 100);

/// Shannon entropy (nats) of the assignment distribution given by the counts.
double histogram_entropy(const CollapseHistogram& hist);

/// "metric<TAB>value" lines: hits@k for each k, mean_rank, n_test.
void write_report(const EvalReport& report, const std::filesystem::path& path);

/// Tab-separated numeric columns with a one-line header. Values are printed
/// with 17 significant digits so they parse back exactly.
void write_columns(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows, const std::filesystem::path& path);

/// "k  hits" per cutoff.
void emit_plot_data(const EvalReport& report, const std::filesystem::path& path);
/// "position  target  count" per histogram entry.
void emit_plot_data(const CollapseHistogram& hist, const std::filesystem::path& path);

}  // namespace kga
