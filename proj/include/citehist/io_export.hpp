#pragma once

// Deterministic writers: Pajek networks and CSV tables.
// Numbers use six significant digits and `.` as separator.

#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "citehist/citegraph.hpp"
#include "citehist/community.hpp"
#include "citehist/corpus.hpp"
#include "citehist/coupling.hpp"
#include "citehist/disambig.hpp"
#include "citehist/rpys.hpp"
#include "citehist/text.hpp"

namespace citehist::io {

inline std::string pajek_quote(std::string_view label) {
    std::string out = "\"";
    for (char c : label) {
        if (c == '"') out += "\"\"";
        else if (c == '\n' || c == '\r') out += ' ';
        else out += c;
    }
    out += '"';
    return out;
}

/// `*Vertices N`, 1-based vertex lines, `*Arcs` sorted by (src, dst).
inline std::string write_pajek(const CitationGraph& g, std::span<const std::string> labels = {}) {
    std::ostringstream out;
    out << "*Vertices " << g.node_count() << "\n";
    for (std::size_t i = 0; i < g.node_count(); ++i)
        out << (i + 1) << ' ' << pajek_quote(i < labels.size() ? labels[i] : g.node(i).label) << "\n";
    out << "*Arcs\n";
    for (const auto& a : g.arcs())  // arcs are kept sorted by (from, to)
        out << (a.from + 1) << ' ' << (a.to + 1) << ' ' << text::format_number(a.weight) << "\n";
    return out.str();
}

/// Undirected variant with an `*Edges` section, weighted by cosine.
inline std::string write_pajek(const CouplingGraph& g) {
    std::ostringstream out;
    out << "*Vertices " << g.entities.size() << "\n";
    for (std::size_t i = 0; i < g.entities.size(); ++i) out << (i + 1) << ' ' << pajek_quote(g.entities[i]) << "\n";
    out << "*Edges\n";
    for (const auto& e : g.edges) out << (e.a + 1) << ' ' << (e.b + 1) << ' ' << text::format_number(e.cosine) << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
public:
    explicit CsvWriter(std::initializer_list<std::string_view> header) { row(header); }
    explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

    template <class Range>
    CsvWriter& row(const Range& fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) out_ << ',';
            out_ << csv_field(f);
            first = false;
        }
        out_ << '\n';
        return *this;
    }
    CsvWriter& row(std::initializer_list<std::string_view> fields) { return row<std::initializer_list<std::string_view>>(fields); }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline std::string opt_number(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

/// `year,count,median5,deviation`
inline std::string spectrum_csv(const Spectrum& s, const DeviationSeries& d) {
    CsvWriter w({"year", "count", "median5", "deviation"});
    for (std::size_t i = 0; i < s.size(); ++i)
        w.row({std::to_string(s.first_year + static_cast<int>(i)), std::to_string(s.counts[i]),
               text::format_number(d.median[i]), text::format_number(d.deviation[i])});
    return w.str();
}

/// First column the segment label, then one column per referenced year;
/// cells fixed to six decimals, absent cells empty.
inline std::string heatmap_csv(const HeatmapMatrix& h) {
    std::vector<std::string> header{"segment"};
    for (int y : h.rpy_axis) header.push_back(std::to_string(y));
    CsvWriter w(header);
    for (std::size_t s = 0; s < h.segments.size(); ++s) {
        std::vector<std::string> row{h.segments[s].label};
        for (const auto& c : h.cells[s]) row.push_back(c ? text::format_fixed(*c, 6) : std::string());
        w.row(row);
    }
    return w.str();
}

/// `year,publications,cited_refs,local_citations`, zero-filled between the first and last year.
inline std::string yearly_profile_csv(const YearlyProfile& p) {
    CsvWriter w({"year", "publications", "cited_refs", "local_citations"});
    std::optional<int> lo, hi;
    for (const auto* s : {&p.publications, &p.cited_refs, &p.local_citations}) {
        if (s->empty()) continue;
        lo = lo ? std::min(*lo, s->begin()->first) : s->begin()->first;
        hi = hi ? std::max(*hi, s->rbegin()->first) : s->rbegin()->first;
    }
    if (!lo) return w.str();
    auto get = [](const YearSeries& s, int y) {
        auto it = s.find(y);
        return std::to_string(it == s.end() ? 0 : it->second);
    };
    for (int y = *lo; y <= *hi; ++y)
        w.row({std::to_string(y), get(p.publications, y), get(p.cited_refs, y), get(p.local_citations, y)});
    return w.str();
}

/// `node_id,community`
inline std::string partition_csv(std::span<const std::string> ids, const Partition& p) {
    CsvWriter w({"node_id", "community"});
    for (std::size_t i = 0; i < ids.size(); ++i) w.row({ids[i], std::to_string(p.community.at(i))});
    return w.str();
}

/// `path,step,node_id,pub_year,spc_to_next`
inline std::string main_path_csv(const CitationGraph& g, std::span<const MainPath> paths) {
    CsvWriter w({"path", "step", "node_id", "pub_year", "spc_to_next"});
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& mp = paths[p];
        for (std::size_t i = 0; i < mp.nodes.size(); ++i) {
            const auto& node = g.node(mp.nodes[i]);
            w.row({std::to_string(p + 1), std::to_string(i + 1), node.id, opt_number(node.year),
                   i < mp.arc_spc.size() ? text::format_number(mp.arc_spc[i]) : std::string()});
        }
    }
    return w.str();
}

/// `source,target,shared,cosine`
inline std::string coupling_csv(const CouplingGraph& g) {
    CsvWriter w({"source", "target", "shared", "cosine"});
    for (const auto& e : g.edges)
        w.row({g.entities[e.a], g.entities[e.b], std::to_string(e.shared), text::format_number(e.cosine)});
    return w.str();
}

/// `reference,count`
inline std::string top_referenced_csv(std::span<const TopReferenced> rows) {
    CsvWriter w({"reference", "count"});
    for (const auto& r : rows) w.row({r.reference, std::to_string(r.count)});
    return w.str();
}

/// `cluster_id,status,total,canonical,member,count`
inline std::string clusters_csv(std::span<const VariantCluster> clusters) {
    CsvWriter w({"cluster_id", "status", "total", "canonical", "member", "count"});
    for (const auto& c : clusters)
        for (const auto& m : c.members)
            w.row({c.id, std::string(to_string(c.status)), std::to_string(c.total()), c.canonical, m.raw,
                   std::to_string(m.count)});
    return w.str();
}

}  // namespace citehist::io
