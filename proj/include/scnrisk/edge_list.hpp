#pragma once

// CSV edge-list ingestion and serialization.
//
//   source,target,source_nace3,target_nace3,weight
//
// Unweighted files omit the weight column.

#include "network.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace scnrisk {

struct LoadOptions {
    /// Rows with a weight strictly below this are dropped (weighted files only).
    double min_weight = 3000.0;
};

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Reads non-empty lines, stripping a UTF-8 BOM. Returns (line number, text).
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (n == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        lines.emplace_back(n, line);
    }
    return lines;
}

}  // namespace csv

inline ScNetwork load_edge_list(const std::filesystem::path& path, WeightMode mode, const LoadOptions& opts = {}) {
    auto lines = csv::read_lines(path);
    if (lines.empty()) throw ParseError("empty edge-list file '" + path.string() + "'", 1);

    auto header = csv::split(lines.front().second);
    const bool has_weight = header.size() == 5;
    if ((header.size() != 4 && header.size() != 5) || header[0] != "source" || header[1] != "target" ||
        header[2] != "source_nace3" || header[3] != "target_nace3" || (has_weight && header[4] != "weight"))
        throw ParseError("expected header 'source,target,source_nace3,target_nace3[,weight]'", lines.front().first);
    if (mode == WeightMode::weighted && !has_weight)
        throw ParseError("weighted mode requires a weight column", lines.front().first);

    std::unordered_map<std::string, std::string> sector_of;
    struct Row {
        std::string source, target;
        Weight weight;
    };
    std::vector<Row> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto& [lineno, text] = lines[r];
        auto f = csv::split(text);
        if (f.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                             lineno);
        for (std::size_t k = 0; k < 4; ++k)
            if (f[k].empty()) throw ParseError("empty field", lineno);
        if (f[2].size() < 3 || f[3].size() < 3) throw ParseError("sector code shorter than three characters", lineno);
        for (int side = 0; side < 2; ++side) {
            std::string id(f[side]);
            std::string sec(f[2 + side]);
            auto [it, fresh] = sector_of.emplace(id, sec);
            if (!fresh && it->second != sec)
                throw IntegrityError("firm '" + id + "' has conflicting sectors '" + it->second + "' and '" + sec +
                                     "' (line " + std::to_string(lineno) + ")");
        }
        Weight w = Weight::unit();
        if (has_weight) {
            if (!Weight::parse(f[4], w)) throw ParseError("cannot parse weight '" + std::string(f[4]) + "'", lineno);
            if (w.ticks() <= 0) throw ParseError("weight must be positive", lineno);
            if (w.units() < opts.min_weight) continue;
        }
        if (f[0] == f[1]) continue;
        rows.push_back({std::string(f[0]), std::string(f[1]), w});
    }

    std::unordered_map<std::string, FirmId> ids;
    std::vector<FirmSpec> firms;
    std::vector<LinkSpec> links;
    auto intern = [&](const std::string& name) {
        auto [it, fresh] = ids.emplace(name, static_cast<FirmId>(firms.size()));
        if (fresh) firms.push_back({name, SectorCode(sector_of.at(name))});
        return it->second;
    };
    for (const auto& row : rows) {
        FirmId s = intern(row.source);
        FirmId t = intern(row.target);
        links.push_back({s, t, row.weight});
    }
    return ScNetwork::from_parts(mode, std::move(firms), std::move(links));
}

inline void write_edge_list(const ScNetwork& net, std::ostream& out) {
    out << "source,target,source_nace3,target_nace3" << (net.weighted() ? ",weight" : "") << '\n';
    for (const auto& l : canonical_links(net)) {
        const auto& s = net.firm(l.source);
        const auto& t = net.firm(l.target);
        out << s.name << ',' << t.name << ',' << s.sector.str() << ',' << t.sector.str();
        if (net.weighted()) out << ',' << l.weight.to_string();
        out << '\n';
    }
}

inline void write_edge_list(const ScNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_edge_list(net, out);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace scnrisk
