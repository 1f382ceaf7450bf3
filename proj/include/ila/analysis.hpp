// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ila::analysis
{

/// Tool labels in their default display order.
std::vector<std::string> default_labels();

/// The action labels of one logged agent trajectory.
struct ActionSequence
{
    std::string problem_id;
    std::vector<std::string> tools;
    /// terminal_reason == submit-pass and accepted == true.
    bool success = false;
};

struct LoadedLog
{
    std::vector<ActionSequence> trajectories;
    std::size_t lines = 0;
    std::size_t corrupt_lines = 0;
    /// Well-formed records of other modes (RAG baselines).
    std::size_t non_agent_records = 0;
};

/// Reads a trajectory JSONL log. Corrupt lines are counted and skipped;
/// more than 10% corrupt lines is a LoadError.
LoadedLog load_log(const std::filesystem::path& path);
LoadedLog parse_log(std::string_view content);

std::vector<ActionSequence> successful(const std::vector<ActionSequence>& all);

/// Fixed labels followed by any label seen in `trajectories` but not listed,
/// in first-seen order.
std::vector<std::string> complete_labels(std::vector<std::string> labels,
                                         const std::vector<ActionSequence>& trajectories);

/// Stage index of action i (0-based) in a trajectory of t actions.
inline std::size_t stage_of(std::size_t i, std::size_t t, std::size_t stages)
{
    return i * stages / t;
}

struct StageProfile
{
    std::size_t stages = 0;
    std::vector<std::string> labels;
    /// counts[stage][label]
    std::vector<std::vector<std::size_t>> counts;
    std::size_t trajectories = 0;
    std::size_t skipped_empty = 0;

    std::size_t stage_total(std::size_t stage) const;
    std::size_t total() const;
    /// Share of `label` within `stage`; 0 for empty stages.
    double fraction(std::size_t stage, std::size_t label) const;
};

StageProfile stage_profile(const std::vector<ActionSequence>& trajectories,
                           std::vector<std::string> labels,
                           std::size_t stages = 6);

struct TransitionMatrix
{
    std::vector<std::string> labels;
    /// counts[from][to], pooled over all trajectories before normalizing.
    std::vector<std::vector<std::size_t>> counts;

    std::size_t row_total(std::size_t from) const;
    std::size_t total() const;
    /// Row-normalized; all-zero rows stay zero.
    double probability(std::size_t from, std::size_t to) const;
};

TransitionMatrix transition_matrix(const std::vector<ActionSequence>& trajectories, std::vector<std::string> labels);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

std::string profile_csv(const StageProfile& profile);
std::string matrix_csv(const TransitionMatrix& matrix);

/// Stacked-area chart of per-stage tool shares.
std::string profile_svg(const StageProfile& profile);
/// Heatmap of transition probabilities.
std::string matrix_svg(const TransitionMatrix& matrix);

/// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace ila::analysis
