#pragma once

// Cited-reference variant clustering and the decision ledger that corrects it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citehist/error.hpp"
#include "citehist/ingest.hpp"
#include "citehist/rpys.hpp"
#include "citehist/text.hpp"

namespace citehist {

// ---------------------------------------------------------------------------
// Blocking and similarity

/// First four characters of the author surname followed by the year, if any.
inline std::string blocking_key(const CitedRef& ref) {
    std::string_view author = ref.first_author_norm;
    std::string_view surname = author.substr(0, author.find(' '));
    std::string key(surname.substr(0, 4));
    if (ref.ref_year) key += std::to_string(*ref.ref_year);
    return key;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// 1 - edit_distance / max_len; two empty strings are identical.
inline double edit_similarity(std::string_view a, std::string_view b) {
    std::size_t m = std::max(a.size(), b.size());
    if (m == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(m);
}

inline constexpr double kPrefixTokenSimilarity = 0.95;

/// Token-level similarity: equal tokens score 1, a proper prefix (abbreviation)
/// scores kPrefixTokenSimilarity, anything else its edit similarity.
inline double token_similarity(std::string_view a, std::string_view b) {
    if (a == b) return 1.0;
    if (!a.empty() && !b.empty() && (a.substr(0, b.size()) == b || b.substr(0, a.size()) == a))
        return kPrefixTokenSimilarity;
    return edit_similarity(a, b);
}

/// Aligns the token sequences of two normalized titles (substitution cost
/// 1 - token_similarity, insertion/deletion cost 1) and returns 1 - cost / max_tokens.
inline double source_similarity(std::string_view a, std::string_view b) {
    std::string na = normalize_source(a), nb = normalize_source(b);
    auto ta = text::split_ws(na), tb = text::split_ws(nb);
    std::size_t m = std::max(ta.size(), tb.size());
    if (m == 0) return 1.0;
    std::vector<double> prev(tb.size() + 1), cur(tb.size() + 1);
    for (std::size_t j = 0; j <= tb.size(); ++j) prev[j] = static_cast<double>(j);
    for (std::size_t i = 1; i <= ta.size(); ++i) {
        cur[0] = static_cast<double>(i);
        for (std::size_t j = 1; j <= tb.size(); ++j) {
            double sub = prev[j - 1] + (1.0 - token_similarity(ta[i - 1], tb[j - 1]));
            cur[j] = std::min({prev[j] + 1.0, cur[j - 1] + 1.0, sub});
        }
        std::swap(prev, cur);
    }
    return std::clamp(1.0 - prev[tb.size()] / static_cast<double>(m), 0.0, 1.0);
}

struct SimilarityWeights {
    double author = 0.30;
    double year = 0.20;
    double source = 0.25;
    double volume = 0.15;
    double page = 0.10;
};

struct SimilarityScore {
    double value = 0.0;
    struct Breakdown {
        double author = 0.0, year = 0.0, source = 0.0, volume = 0.0, page = 0.0;
    } breakdown;  // per-field similarity in [0,1], before weighting
};

namespace detail {

inline double optional_field_similarity(const std::optional<std::string>& a, const std::optional<std::string>& b) {
    if (a.has_value() != b.has_value()) return 0.5;
    if (!a) return 1.0;
    return *a == *b ? 1.0 : 0.0;
}

inline double year_similarity(std::optional<int> a, std::optional<int> b) {
    if (a.has_value() != b.has_value()) return 0.5;
    if (!a) return 1.0;
    int d = std::abs(*a - *b);
    return d == 0 ? 1.0 : d == 1 ? 0.5 : 0.0;
}

}  // namespace detail

inline SimilarityScore pair_similarity(const CitedRef& a, const CitedRef& b, const SimilarityWeights& w = {}) {
    SimilarityScore s;
    auto& f = s.breakdown;
    f.author = edit_similarity(a.first_author_norm, b.first_author_norm);
    f.year = detail::year_similarity(a.ref_year, b.ref_year);
    if (a.source_abbrev.has_value() != b.source_abbrev.has_value())
        f.source = 0.5;
    else
        f.source = a.source_abbrev ? source_similarity(*a.source_abbrev, *b.source_abbrev) : 1.0;
    f.volume = detail::optional_field_similarity(a.volume, b.volume);
    f.page = detail::optional_field_similarity(a.page, b.page);
    s.value = w.author * f.author + w.year * f.year + w.source * f.source + w.volume * f.volume + w.page * f.page;
    return s;
}

/// A reference lacking year, source, volume or page.
inline bool is_incomplete(const CitedRef& r) {
    return !r.ref_year || !r.source_abbrev || !r.volume || !r.page;
}

/// Why a pair must not be linked automatically, or nullopt when it may be.
/// Conflicting volume or page numbers always block; a conflicting year blocks
/// when either side is incomplete.
inline std::optional<std::string> merge_conflict(const CitedRef& a, const CitedRef& b) {
    std::vector<std::string> fields;
    if (a.volume && b.volume && *a.volume != *b.volume) fields.emplace_back("volume");
    if (a.page && b.page && *a.page != *b.page) fields.emplace_back("page");
    bool incomplete = is_incomplete(a) || is_incomplete(b);
    if (incomplete && a.ref_year && b.ref_year && *a.ref_year != *b.ref_year) fields.emplace_back("year");
    if (fields.empty()) return std::nullopt;
    std::string why = "conflicting";
    for (std::size_t i = 0; i < fields.size(); ++i) why += (i == 0 ? " " : "/") + fields[i];
    if (incomplete) why += "; incomplete reference";
    return why;
}

// ---------------------------------------------------------------------------
// Clusters

enum class ClusterStatus { auto_, confirmed, edited };

inline std::string_view to_string(ClusterStatus s) {
    switch (s) {
    case ClusterStatus::auto_: return "auto";
    case ClusterStatus::confirmed: return "confirmed";
    case ClusterStatus::edited: return "edited";
    }
    return "auto";
}

inline std::optional<ClusterStatus> parse_cluster_status(std::string_view s) {
    if (s == "auto") return ClusterStatus::auto_;
    if (s == "confirmed") return ClusterStatus::confirmed;
    if (s == "edited") return ClusterStatus::edited;
    return std::nullopt;
}

struct VariantMember {
    std::string raw;
    std::int64_t count = 0;

    bool operator==(const VariantMember&) const = default;
};

struct VariantCluster {
    std::string id;
    std::vector<VariantMember> members;  // sorted by raw
    std::string canonical;
    ClusterStatus status = ClusterStatus::auto_;
    bool canonical_pinned = false;  // set by a set_canonical decision

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& m : members) t += m.count;
        return t;
    }
    bool contains(std::string_view raw) const {
        return std::any_of(members.begin(), members.end(), [&](const VariantMember& m) { return m.raw == raw; });
    }

    bool operator==(const VariantCluster&) const = default;
};

/// Highest count, then longest raw string, then lexicographically smallest.
inline std::string default_canonical(const std::vector<VariantMember>& members) {
    const VariantMember* best = nullptr;
    for (const auto& m : members) {
        if (best == nullptr || m.count > best->count ||
            (m.count == best->count && (m.raw.size() > best->raw.size() ||
                                        (m.raw.size() == best->raw.size() && m.raw < best->raw))))
            best = &m;
    }
    return best == nullptr ? std::string() : best->raw;
}

/// Stable hash of the member raw strings.
inline std::string cluster_id(const std::vector<VariantMember>& members) {
    std::vector<std::string_view> raws;
    for (const auto& m : members) raws.push_back(m.raw);
    std::sort(raws.begin(), raws.end());
    std::uint64_t h = text::fnv1a("");
    for (auto r : raws) {
        h = text::fnv1a(r, h);
        h = text::fnv1a("\n", h);
    }
    return "c" + text::hex64(h);
}

namespace detail {

inline void finalize(VariantCluster& c) {
    std::sort(c.members.begin(), c.members.end(),
              [](const VariantMember& a, const VariantMember& b) { return a.raw < b.raw; });
    c.id = cluster_id(c.members);
    if (!c.canonical_pinned || !c.contains(c.canonical)) {
        c.canonical_pinned = false;
        c.canonical = default_canonical(c.members);
    }
}

inline void sort_clusters(std::vector<VariantCluster>& cs) {
    std::sort(cs.begin(), cs.end(), [](const VariantCluster& a, const VariantCluster& b) {
        auto ta = a.total(), tb = b.total();
        if (ta != tb) return ta > tb;
        if (a.canonical != b.canonical) return a.canonical < b.canonical;
        return a.id < b.id;
    });
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Distinct reference strings with their occurrence counts and parsed fields.
struct DistinctRefs {
    std::vector<CitedRef> refs;        // one per distinct raw string, sorted by raw
    std::vector<std::int64_t> counts;  // parallel to refs

    explicit DistinctRefs(std::span<const CitedRef> all) {
        std::map<std::string, std::pair<const CitedRef*, std::int64_t>> m;
        for (const auto& r : all) {
            auto [it, inserted] = m.try_emplace(r.raw, &r, 0);
            ++it->second.second;
        }
        for (auto& [raw, v] : m) {
            refs.push_back(*v.first);
            counts.push_back(v.second);
        }
    }

    std::optional<std::size_t> find(std::string_view raw) const {
        auto it = std::lower_bound(refs.begin(), refs.end(), raw,
                                   [](const CitedRef& r, std::string_view x) { return r.raw < x; });
        if (it == refs.end() || it->raw != raw) return std::nullopt;
        return static_cast<std::size_t>(it - refs.begin());
    }

    /// Indices grouped by blocking key.
    std::map<std::string, std::vector<std::size_t>> blocks() const {
        std::map<std::string, std::vector<std::size_t>> b;
        for (std::size_t i = 0; i < refs.size(); ++i) b[blocking_key(refs[i])].push_back(i);
        return b;
    }
};

inline constexpr double kDefaultThreshold = 0.80;

/// Links same-block pairs scoring at least `threshold` (unless merge_conflict
/// holds them back); clusters are the connected components.
inline std::vector<VariantCluster> auto_cluster(std::span<const CitedRef> refs, double threshold = kDefaultThreshold,
                                                const SimilarityWeights& weights = {}) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("auto_cluster: threshold must be in (0,1]");
    DistinctRefs distinct(refs);
    detail::UnionFind uf(distinct.refs.size());
    for (const auto& [key, idx] : distinct.blocks()) {
        for (std::size_t x = 0; x < idx.size(); ++x) {
            for (std::size_t y = x + 1; y < idx.size(); ++y) {
                const auto& a = distinct.refs[idx[x]];
                const auto& b = distinct.refs[idx[y]];
                // at 1.0 only byte-identical strings belong together, and those are already one entry
                if (threshold >= 1.0) continue;
                if (pair_similarity(a, b, weights).value >= threshold && !merge_conflict(a, b)) uf.unite(idx[x], idx[y]);
            }
        }
    }
    std::map<std::size_t, VariantCluster> groups;
    for (std::size_t i = 0; i < distinct.refs.size(); ++i)
        groups[uf.find(i)].members.push_back({distinct.refs[i].raw, distinct.counts[i]});
    std::vector<VariantCluster> out;
    for (auto& [root, c] : groups) {
        detail::finalize(c);
        out.push_back(std::move(c));
    }
    detail::sort_clusters(out);
    return out;
}

/// Every raw string mapped to its cluster canonical.
inline CanonicalMap canonical_map(std::span<const VariantCluster> clusters) {
    CanonicalMap m;
    for (const auto& c : clusters)
        for (const auto& mem : c.members) m.emplace(mem.raw, c.canonical);
    return m;
}

// ---------------------------------------------------------------------------
// Decision ledger

enum class DecisionKind { merge, split, set_canonical };

inline std::string_view to_string(DecisionKind k) {
    switch (k) {
    case DecisionKind::merge: return "merge";
    case DecisionKind::split: return "split";
    case DecisionKind::set_canonical: return "set_canonical";
    }
    return "merge";
}

inline std::optional<DecisionKind> parse_decision_kind(std::string_view s) {
    if (s == "merge") return DecisionKind::merge;
    if (s == "split") return DecisionKind::split;
    if (s == "set_canonical") return DecisionKind::set_canonical;
    return std::nullopt;
}

struct Decision {
    DecisionKind kind = DecisionKind::merge;
    std::vector<std::string> operands;  // raw strings or cluster ids
    std::string actor = "auto";         // "auto" or a user id
    std::string timestamp;              // ISO-8601

    bool operator==(const Decision&) const = default;
};

using DecisionLedger = std::vector<Decision>;

struct LedgerApplication {
    std::vector<VariantCluster> clusters;
    std::vector<std::string> diagnostics;  // one per skipped decision
    std::vector<std::optional<std::size_t>> touched;  // per decision: resulting cluster index, if applied
};

namespace detail {

inline std::optional<std::size_t> locate(const std::vector<VariantCluster>& cs, const std::string& operand) {
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (cs[i].contains(operand)) return i;
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (cs[i].id == operand) return i;
    return std::nullopt;
}

/// Applies one decision; returns the affected cluster's raw string, or an error message.
inline std::pair<std::optional<std::string>, std::string> apply_one(std::vector<VariantCluster>& cs, const Decision& d) {
    if (d.operands.empty()) return {std::nullopt, "decision has no operands"};
    std::vector<std::size_t> at;
    for (const auto& op : d.operands) {
        auto i = locate(cs, op);
        if (!i) return {std::nullopt, "unknown operand '" + op + "'"};
        at.push_back(*i);
    }

    switch (d.kind) {
    case DecisionKind::merge: {
        std::set<std::size_t> distinct(at.begin(), at.end());
        std::size_t target = at.front();
        auto& t = cs[target];
        if (distinct.size() == 1) {
            if (t.status == ClusterStatus::auto_) t.status = ClusterStatus::confirmed;
            return {t.members.front().raw, {}};
        }
        std::optional<std::string> pinned = t.canonical_pinned ? std::optional(t.canonical) : std::nullopt;
        for (auto i : distinct) {
            if (i == target) continue;
            if (!pinned && cs[i].canonical_pinned) pinned = cs[i].canonical;
            t.members.insert(t.members.end(), cs[i].members.begin(), cs[i].members.end());
        }
        t.status = ClusterStatus::edited;
        t.canonical_pinned = pinned.has_value();
        if (pinned) t.canonical = *pinned;
        std::string anchor = t.members.front().raw;
        finalize(t);
        for (auto it = distinct.rbegin(); it != distinct.rend(); ++it)
            if (*it != target) cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(*it));
        return {anchor, {}};
    }
    case DecisionKind::split: {
        std::set<std::string> names;
        for (std::size_t k = 0; k < d.operands.size(); ++k) {
            if (!cs[at[k]].contains(d.operands[k])) return {std::nullopt, "split operand '" + d.operands[k] + "' is not a member string"};
            names.insert(d.operands[k]);
        }
        VariantCluster fresh;
        fresh.status = ClusterStatus::edited;
        std::set<std::size_t> sources(at.begin(), at.end());
        bool whole = sources.size() == 1 && cs[at.front()].members.size() == names.size();
        if (whole) {
            cs[at.front()].status = ClusterStatus::edited;
            return {*names.begin(), {}};
        }
        for (auto i : sources) {
            auto& src = cs[i];
            std::vector<VariantMember> keep;
            for (auto& m : src.members) (names.count(m.raw) ? fresh.members : keep).push_back(m);
            src.members = std::move(keep);
            src.status = ClusterStatus::edited;
            if (!src.members.empty()) finalize(src);
        }
        cs.erase(std::remove_if(cs.begin(), cs.end(), [](const VariantCluster& c) { return c.members.empty(); }),
                 cs.end());
        finalize(fresh);
        cs.push_back(std::move(fresh));
        return {*names.begin(), {}};
    }
    case DecisionKind::set_canonical: {
        if (d.operands.size() != 1) return {std::nullopt, "set_canonical takes exactly one operand"};
        auto& c = cs[at.front()];
        if (!c.contains(d.operands.front())) return {std::nullopt, "set_canonical operand must be a member string"};
        c.canonical = d.operands.front();
        c.canonical_pinned = true;
        c.status = ClusterStatus::edited;
        return {c.canonical, {}};
    }
    }
    return {std::nullopt, "unknown decision kind"};
}

}  // namespace detail

/// Replays decisions in order. Decisions naming unknown strings are skipped with
/// a diagnostic; occurrence totals are preserved.
inline LedgerApplication apply_ledger(std::vector<VariantCluster> clusters, std::span<const Decision> ledger) {
    LedgerApplication out;
    std::vector<std::optional<std::string>> anchors;
    for (std::size_t i = 0; i < ledger.size(); ++i) {
        auto [anchor, error] = detail::apply_one(clusters, ledger[i]);
        if (!anchor) out.diagnostics.push_back("decision " + std::to_string(i + 1) + " (" +
                                               std::string(to_string(ledger[i].kind)) + ") skipped: " + error);
        anchors.push_back(std::move(anchor));
    }
    detail::sort_clusters(clusters);
    for (const auto& a : anchors) {
        if (!a) {
            out.touched.emplace_back();
            continue;
        }
        out.touched.push_back(detail::locate(clusters, *a));
    }
    out.clusters = std::move(clusters);
    return out;
}

/// Does every operand of `d` name a known string or cluster?
inline bool operands_known(std::span<const VariantCluster> clusters, const Decision& d) {
    std::vector<VariantCluster> copy(clusters.begin(), clusters.end());
    for (const auto& op : d.operands)
        if (!detail::locate(copy, op)) return false;
    return !d.operands.empty();
}

// ---------------------------------------------------------------------------
// Review candidates and the review file

struct CandidatePair {
    std::string a;
    std::string b;
    double score = 0.0;
    std::string reason;
};

inline constexpr double kReviewBand = 0.05;

/// Same-block pairs in different clusters that either scored just below the
/// threshold or were held back by a conflict involving an incomplete reference.
inline std::vector<CandidatePair> review_candidates(std::span<const CitedRef> refs,
                                                    std::span<const VariantCluster> clusters,
                                                    double threshold = kDefaultThreshold,
                                                    const SimilarityWeights& weights = {}) {
    DistinctRefs distinct(refs);
    std::unordered_map<std::string, std::size_t> cluster_of;
    for (std::size_t i = 0; i < clusters.size(); ++i)
        for (const auto& m : clusters[i].members) cluster_of.emplace(m.raw, i);
    std::vector<CandidatePair> out;
    for (const auto& [key, idx] : distinct.blocks()) {
        for (std::size_t x = 0; x < idx.size(); ++x) {
            for (std::size_t y = x + 1; y < idx.size(); ++y) {
                const auto& a = distinct.refs[idx[x]];
                const auto& b = distinct.refs[idx[y]];
                auto ca = cluster_of.find(a.raw), cb = cluster_of.find(b.raw);
                if (ca != cluster_of.end() && cb != cluster_of.end() && ca->second == cb->second) continue;
                double s = pair_similarity(a, b, weights).value;
                if (s < threshold - kReviewBand) continue;
                if (s < threshold) {
                    out.push_back({a.raw, b.raw, s, "near threshold"});
                } else if (auto why = merge_conflict(a, b); why && (is_incomplete(a) || is_incomplete(b))) {
                    out.push_back({a.raw, b.raw, s, "held: " + *why});
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CandidatePair& p, const CandidatePair& q) {
        if (p.score != q.score) return p.score > q.score;
        if (p.a != q.a) return p.a < q.a;
        return p.b < q.b;
    });
    return out;
}

inline std::string export_review_file(std::span<const VariantCluster> clusters,
                                      std::span<const CandidatePair> candidates = {}) {
    std::unordered_map<std::string, std::int64_t> count_of;
    for (const auto& c : clusters)
        for (const auto& m : c.members) count_of.emplace(m.raw, m.count);

    std::ostringstream out;
    out << "# citehist review file v1\n"
           "# Edit the \"action:\" line of an entry, then import the file.\n"
           "#   keep             no change (default)\n"
           "#   accept           confirm the cluster / merge the pair\n"
           "#   split N[,N...]   move the listed members into a new cluster (clusters only)\n"
           "#   canonical N      use member N as the canonical form (clusters only)\n";
    for (const auto& c : clusters) {
        if (c.status != ClusterStatus::auto_ || c.members.size() < 2) continue;
        out << "\n[cluster " << c.id << "]\n";
        out << "total: " << c.total() << "\n";
        for (std::size_t i = 0; i < c.members.size(); ++i)
            if (c.members[i].raw == c.canonical) out << "canonical: " << (i + 1) << "\n";
        out << "action: keep\n";
        for (std::size_t i = 0; i < c.members.size(); ++i)
            out << (i + 1) << " | " << c.members[i].count << " | " << c.members[i].raw << "\n";
    }
    for (const auto& p : candidates) {
        out << "\n[pair " << text::format_fixed(p.score, 6) << "]\n";
        out << "reason: " << p.reason << "\n";
        out << "action: keep\n";
        auto ca = count_of.count(p.a) ? count_of[p.a] : 0;
        auto cb = count_of.count(p.b) ? count_of[p.b] : 0;
        out << "1 | " << ca << " | " << p.a << "\n";
        out << "2 | " << cb << " | " << p.b << "\n";
    }
    return out.str();
}

/// Turns review annotations into ledger decisions. Untouched entries yield nothing.
inline DecisionLedger import_review_file(std::string_view doc, const std::string& actor = "review",
                                         const std::string& timestamp = {}) {
    struct Entry {
        bool is_pair = false;
        std::size_t line = 0;
        std::string action;
        std::size_t action_line = 0;
        std::vector<std::string> members;
    };
    std::vector<Entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < doc.size()) {
        auto nl = doc.find('\n', pos);
        std::string_view line = doc.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? doc.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;

        if (t.front() == '[') {
            if (t.back() != ']') throw MalformedReviewFile(line_no, "unterminated entry header");
            auto head = t.substr(1, t.size() - 2);
            Entry e;
            e.line = line_no;
            if (head.substr(0, 8) == "cluster ")
                e.is_pair = false;
            else if (head.substr(0, 5) == "pair ")
                e.is_pair = true;
            else
                throw MalformedReviewFile(line_no, "unknown entry type '" + std::string(head) + "'");
            entries.push_back(std::move(e));
            continue;
        }
        if (entries.empty()) throw MalformedReviewFile(line_no, "content before the first entry");
        auto& e = entries.back();
        if (t.substr(0, 7) == "action:") {
            e.action = std::string(text::trim(t.substr(7)));
            e.action_line = line_no;
        } else if (t.substr(0, 6) == "total:" || t.substr(0, 7) == "reason:" || t.substr(0, 10) == "canonical:") {
            // informational
        } else {
            // member line: "N | count | raw"; raw keeps its exact bytes
            auto bar1 = line.find(" | ");
            auto bar2 = bar1 == std::string_view::npos ? bar1 : line.find(" | ", bar1 + 3);
            if (bar2 == std::string_view::npos) throw MalformedReviewFile(line_no, "expected 'N | count | reference'");
            auto n = text::parse_int(line.substr(0, bar1));
            if (!n || *n != static_cast<long long>(e.members.size() + 1))
                throw MalformedReviewFile(line_no, "member numbers must run 1, 2, 3, ...");
            e.members.emplace_back(line.substr(bar2 + 3));
        }
    }

    DecisionLedger ledger;
    for (const auto& e : entries) {
        std::size_t at = e.action_line ? e.action_line : e.line;
        if (e.members.empty()) throw MalformedReviewFile(e.line, "entry has no members");
        auto words = text::split_ws(e.action);
        std::string verb = words.empty() ? "keep" : std::string(words.front());
        auto member_list = [&](std::string_view spec) {
            std::vector<std::string> picked;
            for (auto piece : text::split(spec, ",")) {
                auto k = text::parse_int(piece);
                if (!k || *k < 1 || static_cast<std::size_t>(*k) > e.members.size())
                    throw MalformedReviewFile(at, "member number '" + std::string(text::trim(piece)) + "' out of range");
                picked.push_back(e.members[static_cast<std::size_t>(*k - 1)]);
            }
            return picked;
        };
        if (verb == "keep" || verb == "reject") {
            if (words.size() > 1) throw MalformedReviewFile(at, "'" + verb + "' takes no arguments");
        } else if (verb == "accept") {
            if (words.size() > 1) throw MalformedReviewFile(at, "'accept' takes no arguments");
            ledger.push_back({DecisionKind::merge, e.members, actor, timestamp});
        } else if (verb == "split" || verb == "canonical") {
            if (e.is_pair) throw MalformedReviewFile(at, "'" + verb + "' applies to clusters only");
            if (words.size() < 2) throw MalformedReviewFile(at, "'" + verb + "' needs member numbers");
            std::string spec;
            for (std::size_t i = 1; i < words.size(); ++i) spec += words[i];
            auto picked = member_list(spec);
            if (verb == "split") {
                ledger.push_back({DecisionKind::split, picked, actor, timestamp});
            } else {
                if (picked.size() != 1) throw MalformedReviewFile(at, "'canonical' takes one member number");
                ledger.push_back({DecisionKind::set_canonical, picked, actor, timestamp});
            }
        } else {
            throw MalformedReviewFile(at, "unknown action '" + verb + "'");
        }
    }
    return ledger;
}

}  // namespace citehist
