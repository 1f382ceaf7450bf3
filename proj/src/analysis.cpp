// SPDX-License-Identifier: Apache-2.0
#include <ila/action.hpp>
#include <ila/analysis.hpp>
#include <ila/error.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ila::analysis
{

std::vector<std::string> default_labels()
{
    std::vector<std::string> out;
    for (auto t : kAllTools)
        out.emplace_back(to_string(t));
    out.emplace_back(kInvalidLabel);
    return out;
}

// ---------------------------------------------------------------- loading

LoadedLog parse_log(std::string_view content)
{
    LoadedLog log;
    for (const auto& line : text::split_lines(content))
    {
        if (text::trim(line).empty())
            continue;
        ++log.lines;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("problem_id") || !j["problem_id"].is_string())
        {
            ++log.corrupt_lines;
            continue;
        }
        if (!j.contains("steps"))
        {
            if (j.contains("mode") && j["mode"] != "ila-agent")
                ++log.non_agent_records;
            else
                ++log.corrupt_lines;
            continue;
        }
        const auto& steps = j["steps"];
        bool ok = steps.is_array() && std::all_of(steps.begin(), steps.end(), [](const nlohmann::json& s) {
                      return s.is_object() && s.contains("tool") && s["tool"].is_string();
                  });
        if (!ok)
        {
            ++log.corrupt_lines;
            continue;
        }
        ActionSequence seq;
        seq.problem_id = j["problem_id"].get<std::string>();
        for (const auto& s : steps)
            seq.tools.push_back(s["tool"].get<std::string>());
        seq.success = j.value("terminal_reason", "") == "submit-pass" && j.value("accepted", false);
        log.trajectories.push_back(std::move(seq));
    }
    if (log.lines > 0 && log.corrupt_lines * 10 > log.lines)
        throw LoadError("trajectory log is corrupt: " + std::to_string(log.corrupt_lines) + " of " +
                        std::to_string(log.lines) + " lines could not be parsed");
    return log;
}

LoadedLog load_log(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot read trajectory log " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_log(ss.str());
    }
    catch (const LoadError& e)
    {
        throw LoadError(path.string() + ": " + e.what());
    }
}

std::vector<ActionSequence> successful(const std::vector<ActionSequence>& all)
{
    std::vector<ActionSequence> out;
    std::copy_if(all.begin(), all.end(), std::back_inserter(out), [](const auto& t) { return t.success; });
    return out;
}

std::vector<std::string> complete_labels(std::vector<std::string> labels,
                                         const std::vector<ActionSequence>& trajectories)
{
    for (const auto& t : trajectories)
        for (const auto& tool : t.tools)
            if (std::find(labels.begin(), labels.end(), tool) == labels.end())
                labels.push_back(tool);
    return labels;
}

namespace
{

std::size_t label_index(const std::vector<std::string>& labels, const std::string& tool)
{
    return static_cast<std::size_t>(std::find(labels.begin(), labels.end(), tool) - labels.begin());
}

} // namespace

// ---------------------------------------------------------------- profile

std::size_t StageProfile::stage_total(std::size_t stage) const
{
    std::size_t n = 0;
    for (auto c : counts[stage])
        n += c;
    return n;
}

std::size_t StageProfile::total() const
{
    std::size_t n = 0;
    for (std::size_t s = 0; s < stages; ++s)
        n += stage_total(s);
    return n;
}

double StageProfile::fraction(std::size_t stage, std::size_t label) const
{
    auto n = stage_total(stage);
    return n == 0 ? 0.0 : static_cast<double>(counts[stage][label]) / static_cast<double>(n);
}

StageProfile stage_profile(const std::vector<ActionSequence>& trajectories,
                           std::vector<std::string> labels,
                           std::size_t stages)
{
    if (stages == 0)
        throw ConfigError("number of stages must be at least 1");
    StageProfile p;
    p.stages = stages;
    p.labels = complete_labels(std::move(labels), trajectories);
    p.counts.assign(stages, std::vector<std::size_t>(p.labels.size(), 0));
    for (const auto& t : trajectories)
    {
        if (t.tools.empty())
        {
            ++p.skipped_empty;
            continue;
        }
        ++p.trajectories;
        for (std::size_t i = 0; i < t.tools.size(); ++i)
            ++p.counts[stage_of(i, t.tools.size(), stages)][label_index(p.labels, t.tools[i])];
    }
    return p;
}

// ---------------------------------------------------------------- transitions

std::size_t TransitionMatrix::row_total(std::size_t from) const
{
    std::size_t n = 0;
    for (auto c : counts[from])
        n += c;
    return n;
}

std::size_t TransitionMatrix::total() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        n += row_total(i);
    return n;
}

double TransitionMatrix::probability(std::size_t from, std::size_t to) const
{
    auto n = row_total(from);
    return n == 0 ? 0.0 : static_cast<double>(counts[from][to]) / static_cast<double>(n);
}

TransitionMatrix transition_matrix(const std::vector<ActionSequence>& trajectories, std::vector<std::string> labels)
{
    TransitionMatrix m;
    m.labels = complete_labels(std::move(labels), trajectories);
    m.counts.assign(m.labels.size(), std::vector<std::size_t>(m.labels.size(), 0));
    for (const auto& t : trajectories)
        for (std::size_t i = 1; i < t.tools.size(); ++i)
            ++m.counts[label_index(m.labels, t.tools[i - 1])][label_index(m.labels, t.tools[i])];
    return m;
}

// ---------------------------------------------------------------- csv

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc())
        throw std::runtime_error("format_number: conversion failed");
    return std::string(buf.data(), end);
}

std::string profile_csv(const StageProfile& p)
{
    std::string out = "stage";
    for (const auto& l : p.labels)
        out += "," + l;
    out += ",total";
    for (const auto& l : p.labels)
        out += "," + l + "_frac";
    out += "\n";
    for (std::size_t s = 0; s < p.stages; ++s)
    {
        out += std::to_string(s);
        for (auto c : p.counts[s])
            out += "," + std::to_string(c);
        out += "," + std::to_string(p.stage_total(s));
        for (std::size_t l = 0; l < p.labels.size(); ++l)
            out += "," + format_number(p.fraction(s, l));
        out += "\n";
    }
    return out;
}

std::string matrix_csv(const TransitionMatrix& m)
{
    std::string out = "from";
    for (const auto& l : m.labels)
        out += "," + l;
    out += ",total";
    for (const auto& l : m.labels)
        out += "," + l + "_p";
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i)
    {
        out += m.labels[i];
        for (auto c : m.counts[i])
            out += "," + std::to_string(c);
        out += "," + std::to_string(m.row_total(i));
        for (std::size_t j = 0; j < m.labels.size(); ++j)
            out += "," + format_number(m.probability(i, j));
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------- svg

namespace
{

constexpr std::array<const char*, 10> kPalette = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
                                                  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string fixed2(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(std::string_view s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string profile_svg(const StageProfile& p)
{
    const double left = 60, top = 30, width = 480, height = 300, legend_x = left + width + 20;
    const double total_w = legend_x + 140, total_h = top + height + 50;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(total_w) + "\" height=\"" +
                      fixed2(total_h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fixed2(total_w) + "\" height=\"" + fixed2(total_h) +
           "\" fill=\"white\"/>\n";

    auto x_at = [&](std::size_t s) {
        return p.stages == 1 ? left + width / 2 : left + width * static_cast<double>(s) / static_cast<double>(p.stages - 1);
    };
    auto y_at = [&](double frac) { return top + height * (1.0 - frac); };

    std::vector<double> lower(p.stages, 0.0);
    for (std::size_t l = 0; l < p.labels.size(); ++l)
    {
        std::vector<double> upper(p.stages);
        for (std::size_t s = 0; s < p.stages; ++s)
            upper[s] = lower[s] + p.fraction(s, l);
        std::string points;
        for (std::size_t s = 0; s < p.stages; ++s)
            points += fixed2(x_at(s)) + "," + fixed2(y_at(upper[s])) + " ";
        for (std::size_t s = p.stages; s-- > 0;)
            points += fixed2(x_at(s)) + "," + fixed2(y_at(lower[s])) + " ";
        points.pop_back();
        out += "<polygon points=\"" + points + "\" fill=\"" + kPalette[l % kPalette.size()] +
               "\" stroke=\"white\" stroke-width=\"0.5\"><title>" + escape_xml(p.labels[l]) + "</title></polygon>\n";
        lower = std::move(upper);

        double ly = top + 16.0 * static_cast<double>(l);
        out += "<rect x=\"" + fixed2(legend_x) + "\" y=\"" + fixed2(ly) + "\" width=\"10\" height=\"10\" fill=\"" +
               kPalette[l % kPalette.size()] + "\"/>\n";
        out += "<text x=\"" + fixed2(legend_x + 16) + "\" y=\"" + fixed2(ly + 9) + "\">" + escape_xml(p.labels[l]) +
               "</text>\n";
    }

    out += "<line x1=\"" + fixed2(left) + "\" y1=\"" + fixed2(top + height) + "\" x2=\"" + fixed2(left + width) +
           "\" y2=\"" + fixed2(top + height) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fixed2(left) + "\" y1=\"" + fixed2(top) + "\" x2=\"" + fixed2(left) + "\" y2=\"" +
           fixed2(top + height) + "\" stroke=\"black\"/>\n";
    for (std::size_t s = 0; s < p.stages; ++s)
        out += "<text x=\"" + fixed2(x_at(s)) + "\" y=\"" + fixed2(top + height + 15) +
               "\" text-anchor=\"middle\">" + std::to_string(s + 1) + "</text>\n";
    for (int tick = 0; tick <= 4; ++tick)
        out += "<text x=\"" + fixed2(left - 6) + "\" y=\"" + fixed2(y_at(tick / 4.0) + 4) +
               "\" text-anchor=\"end\">" + fixed2(tick / 4.0) + "</text>\n";
    out += "<text x=\"" + fixed2(left + width / 2) + "\" y=\"" + fixed2(top + height + 35) +
           "\" text-anchor=\"middle\">stage</text>\n";
    out += "<text x=\"" + fixed2(left) + "\" y=\"" + fixed2(top - 10) + "\">share of actions per stage</text>\n";
    out += "</svg>\n";
    return out;
}

std::string matrix_svg(const TransitionMatrix& m)
{
    const double cell = 48, left = 90, top = 90;
    const double n = static_cast<double>(m.labels.size());
    const double total_w = left + cell * n + 20, total_h = top + cell * n + 20;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(total_w) + "\" height=\"" +
                      fixed2(total_h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fixed2(total_w) + "\" height=\"" + fixed2(total_h) +
           "\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i)
    {
        double y = top + cell * static_cast<double>(i);
        out += "<text x=\"" + fixed2(left - 6) + "\" y=\"" + fixed2(y + cell / 2 + 4) + "\" text-anchor=\"end\">" +
               escape_xml(m.labels[i]) + "</text>\n";
        double x = left + cell * static_cast<double>(i) + cell / 2;
        out += "<text x=\"" + fixed2(x) + "\" y=\"" + fixed2(top - 6) + "\" transform=\"rotate(-45 " + fixed2(x) +
               " " + fixed2(top - 6) + ")\">" + escape_xml(m.labels[i]) + "</text>\n";
        for (std::size_t j = 0; j < m.labels.size(); ++j)
        {
            double prob = m.probability(i, j);
            int shade = static_cast<int>(255.0 - 200.0 * prob + 0.5);
            char color[16];
            std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
            double cx = left + cell * static_cast<double>(j);
            out += "<rect x=\"" + fixed2(cx) + "\" y=\"" + fixed2(y) + "\" width=\"" + fixed2(cell) + "\" height=\"" +
                   fixed2(cell) + "\" fill=\"" + color + "\" stroke=\"#dddddd\"/>\n";
            out += "<text x=\"" + fixed2(cx + cell / 2) + "\" y=\"" + fixed2(y + cell / 2 + 4) +
                   "\" text-anchor=\"middle\">" + fixed2(prob) + "</text>\n";
        }
    }
    out += "<text x=\"" + fixed2(left) + "\" y=\"14\">P(next action | action), rows: from, columns: to</text>\n";
    out += "</svg>\n";
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.flush();
    if (!out)
        throw IoError("cannot write " + path.string());
}

} // namespace ila::analysis
