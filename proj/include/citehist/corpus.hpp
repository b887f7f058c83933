#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citehist/ingest.hpp"

namespace citehist {

/// Address of one cited reference inside a corpus.
struct RefAddress {
    std::size_t record = 0;
    std::size_t ref = 0;
};

/// Which rule of the matching cascade produced a match.
enum class MatchRule { none = 0, doi = 1, volume_page = 2, source_volume = 3, source_unique = 4 };

struct MatchResult {
    std::optional<std::size_t> record;
    MatchRule rule = MatchRule::none;
    bool ambiguous = false;  // several in-set records satisfied the deciding rule
};

/// Intra-set citation: `citing` cites `cited` (record indices into the corpus).
struct CitationEdge {
    std::size_t citing = 0;
    std::size_t cited = 0;
    RefAddress via;

    bool operator==(const CitationEdge&) const = default;
};

struct EdgeBuild {
    std::vector<CitationEdge> edges;
    std::vector<std::string> diagnostics;
};

/// Immutable document set with lookup indices for reference matching.
class Corpus {
public:
    Corpus() = default;

    explicit Corpus(std::vector<DocumentRecord> records) : records_(std::move(records)) {
        for (std::size_t r = 0; r < records_.size(); ++r) {
            const auto& rec = records_[r];
            by_id_.emplace(rec.id, r);
            for (std::size_t i = 0; i < rec.cited_refs.size(); ++i) ref_pool_.push_back({r, i});
            if (rec.doi && !rec.doi->empty()) by_doi_[*rec.doi].push_back(r);
            if (rec.pub_year) by_author_year_[key(rec.first_author_norm, *rec.pub_year)].push_back(r);
        }
    }

    const std::vector<DocumentRecord>& records() const noexcept { return records_; }
    const DocumentRecord& record(std::size_t i) const { return records_.at(i); }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<RefAddress>& ref_pool() const noexcept { return ref_pool_; }

    const CitedRef& ref(RefAddress a) const { return records_.at(a.record).cited_refs.at(a.ref); }

    std::optional<std::size_t> index_of(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    /// Every cited reference in (record, ref) order.
    std::vector<CitedRef> all_refs() const {
        std::vector<CitedRef> out;
        out.reserve(ref_pool_.size());
        for (auto a : ref_pool_) out.push_back(ref(a));
        return out;
    }

    /// Resolves a cited reference to an in-set record. Cascade, first rule wins:
    /// DOI; author+year+volume+page; author+year+source+volume; author+year+source if unique.
    MatchResult match_reference(const CitedRef& ref) const {
        MatchResult result;
        if (ref.doi && !ref.doi->empty()) {
            if (auto it = by_doi_.find(*ref.doi); it != by_doi_.end()) {
                result.record = it->second.front();
                result.rule = MatchRule::doi;
                result.ambiguous = it->second.size() > 1;
                return result;
            }
        }
        if (!ref.ref_year) return result;
        auto bucket_it = by_author_year_.find(key(ref.first_author_norm, *ref.ref_year));
        if (bucket_it == by_author_year_.end()) return result;
        const auto& bucket = bucket_it->second;

        std::string ref_source = ref.source_abbrev ? normalize_source(*ref.source_abbrev) : std::string();

        auto first_where = [&](auto&& pred, MatchRule rule) -> bool {
            std::vector<std::size_t> hits;
            for (auto r : bucket)
                if (pred(records_[r])) hits.push_back(r);
            if (hits.empty()) return false;
            result.record = hits.front();
            result.rule = rule;
            result.ambiguous = hits.size() > 1;
            return true;
        };

        if (ref.volume && ref.page &&
            first_where([&](const DocumentRecord& d) { return d.volume == ref.volume && d.begin_page == ref.page; },
                        MatchRule::volume_page))
            return result;
        if (ref.volume && !ref_source.empty() &&
            first_where([&](const DocumentRecord& d) { return d.source_abbrev == ref_source && d.volume == ref.volume; },
                        MatchRule::source_volume))
            return result;
        if (!ref_source.empty()) {
            std::vector<std::size_t> hits;
            for (auto r : bucket)
                if (records_[r].source_abbrev == ref_source) hits.push_back(r);
            if (hits.size() == 1) {
                result.record = hits.front();
                result.rule = MatchRule::source_unique;
            } else if (hits.size() > 1) {
                result.ambiguous = true;
            }
        }
        return result;
    }

    /// One edge per matched (citing, cited) pair. Self-citations of a record to itself are dropped.
    EdgeBuild build_citation_edges() const {
        EdgeBuild out;
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
        for (auto addr : ref_pool_) {
            const auto& cr = ref(addr);
            auto m = match_reference(cr);
            if (m.ambiguous) {
                out.diagnostics.push_back(std::string(m.record ? "several records match '" : "ambiguous reference '") +
                                          cr.raw + "' in " + records_[addr.record].id +
                                          (m.record ? "; first match taken" : "; left unmatched"));
            }
            if (!m.record) continue;
            if (*m.record == addr.record) {
                out.diagnostics.push_back("record " + records_[addr.record].id + " cites itself via '" + cr.raw +
                                          "'; self-loop dropped");
                continue;
            }
            auto k = std::make_pair(addr.record, *m.record);
            if (seen.emplace(k, out.edges.size()).second) out.edges.push_back({addr.record, *m.record, addr});
        }
        return out;
    }

private:
    static std::string key(const std::string& author, int year) { return author + '\x1f' + std::to_string(year); }

    std::vector<DocumentRecord> records_;
    std::vector<RefAddress> ref_pool_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_doi_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_author_year_;
};

/// Local citation score (in-degree within the set) for every record.
inline std::vector<std::size_t> local_citation_scores(const Corpus& corpus, std::span<const CitationEdge> edges) {
    std::vector<std::size_t> lcs(corpus.size(), 0);
    for (const auto& e : edges) ++lcs.at(e.cited);
    return lcs;
}

enum class Score { lcs, gcs };

struct TopLayer {
    std::vector<std::size_t> records;       // ranked, best first
    std::vector<CitationEdge> induced;      // edges with both endpoints in `records`
};

/// The n highest-scoring records; ties go to the earlier year, then the smaller id.
inline TopLayer top_layer(const Corpus& corpus, std::span<const CitationEdge> edges, std::size_t n, Score score) {
    if (n == 0) throw std::invalid_argument("top_layer: n must be at least 1");
    auto lcs = local_citation_scores(corpus, edges);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto value = [&](std::size_t i) -> std::int64_t {
        return score == Score::lcs ? static_cast<std::int64_t>(lcs[i]) : corpus.record(i).times_cited_global;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto va = value(a), vb = value(b);
        if (va != vb) return va > vb;
        int ya = corpus.record(a).pub_year.value_or(kMaxYear + 1);
        int yb = corpus.record(b).pub_year.value_or(kMaxYear + 1);
        if (ya != yb) return ya < yb;
        return corpus.record(a).id < corpus.record(b).id;
    });
    if (order.size() > n) order.resize(n);

    TopLayer out;
    out.records = order;
    std::vector<bool> in(corpus.size(), false);
    for (auto i : order) in[i] = true;
    for (const auto& e : edges)
        if (in[e.citing] && in[e.cited]) out.induced.push_back(e);
    return out;
}

/// Largest h such that at least h values are >= h.
inline std::int64_t h_index(std::span<const std::int64_t> values) {
    std::vector<std::int64_t> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::int64_t h = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] >= static_cast<std::int64_t>(i + 1))
            h = static_cast<std::int64_t>(i + 1);
        else
            break;
    }
    return h;
}

using YearSeries = std::map<int, std::int64_t>;

struct ProfileSummary {
    std::size_t records = 0;
    std::size_t records_without_year = 0;
    std::size_t total_refs = 0;
    std::optional<double> refs_per_publication;
    std::int64_t times_cited_sum = 0;
    std::optional<double> times_cited_mean;
    std::int64_t h_index = 0;
    std::size_t local_citations = 0;
};

struct YearlyProfile {
    YearSeries publications;
    YearSeries cited_refs;
    YearSeries local_citations;  // attributed to the citing record's year
    ProfileSummary summary;
};

inline YearlyProfile yearly_profile(const Corpus& corpus, std::span<const CitationEdge> edges) {
    YearlyProfile p;
    auto& s = p.summary;
    s.records = corpus.size();
    std::vector<std::int64_t> tc;
    for (const auto& rec : corpus.records()) {
        s.total_refs += rec.cited_refs.size();
        s.times_cited_sum += rec.times_cited_global;
        tc.push_back(rec.times_cited_global);
        if (!rec.pub_year) {
            ++s.records_without_year;
            continue;
        }
        p.publications[*rec.pub_year] += 1;
        p.cited_refs[*rec.pub_year] += static_cast<std::int64_t>(rec.cited_refs.size());
    }
    for (const auto& e : edges) {
        ++s.local_citations;
        if (auto y = corpus.record(e.citing).pub_year) p.local_citations[*y] += 1;
    }
    if (s.records > 0) {
        s.refs_per_publication = static_cast<double>(s.total_refs) / static_cast<double>(s.records);
        s.times_cited_mean = static_cast<double>(s.times_cited_sum) / static_cast<double>(s.records);
    }
    s.h_index = h_index(tc);
    return p;
}

}  // namespace citehist
