#pragma once

// Reference publication year spectroscopy.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citehist/corpus.hpp"
#include "citehist/error.hpp"
#include "citehist/ingest.hpp"
#include "citehist/text.hpp"

namespace citehist {

struct YearRange {
    int first = 0;
    int last = 0;

    bool contains(int y) const noexcept { return y >= first && y <= last; }
    bool operator==(const YearRange&) const = default;
};

/// Parses `1900-2015` (or a single year).
inline YearRange parse_year_range(std::string_view s) {
    auto dash = s.find('-', 1);
    auto a = text::parse_int(s.substr(0, dash));
    auto b = dash == std::string_view::npos ? a : text::parse_int(s.substr(dash + 1));
    if (!a || !b || *a > *b) throw std::invalid_argument("invalid year range '" + std::string(s) + "'");
    return {static_cast<int>(*a), static_cast<int>(*b)};
}

/// Cited references per referenced publication year, zero-filled over the range.
struct Spectrum {
    int first_year = 0;
    std::vector<std::int64_t> counts;
    std::size_t undated = 0;       // refs without a parsed year
    std::size_t out_of_range = 0;  // dated refs outside the requested range

    int last_year() const noexcept { return first_year + static_cast<int>(counts.size()) - 1; }
    std::size_t size() const noexcept { return counts.size(); }
    std::int64_t at_year(int y) const {
        if (y < first_year || y > last_year()) return 0;
        return counts[static_cast<std::size_t>(y - first_year)];
    }
    std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

    bool operator==(const Spectrum&) const = default;
};

/// Builds a spectrum from bare years; absent entries count as undated.
inline Spectrum spectrum_from_years(std::span<const std::optional<int>> years, std::optional<YearRange> range = {}) {
    if (range && range->first > range->last) throw std::invalid_argument("spectrum: range first > last");
    Spectrum s;
    std::optional<int> lo, hi;
    for (auto y : years) {
        if (!y) continue;
        lo = lo ? std::min(*lo, *y) : *y;
        hi = hi ? std::max(*hi, *y) : *y;
    }
    if (!lo) throw NoDatedRefs();
    YearRange r = range.value_or(YearRange{*lo, *hi});
    s.first_year = r.first;
    s.counts.assign(static_cast<std::size_t>(r.last - r.first + 1), 0);
    for (auto y : years) {
        if (!y) {
            ++s.undated;
        } else if (!r.contains(*y)) {
            ++s.out_of_range;
        } else {
            ++s.counts[static_cast<std::size_t>(*y - r.first)];
        }
    }
    return s;
}

inline Spectrum spectrum(std::span<const CitedRef> refs, std::optional<YearRange> range = {}) {
    std::vector<std::optional<int>> years;
    years.reserve(refs.size());
    for (const auto& r : refs) years.push_back(r.ref_year);
    return spectrum_from_years(years, range);
}

/// Per-year deviation of N(t) from the median of the five-year window t-2..t+2.
struct DeviationSeries {
    int first_year = 0;
    std::vector<double> median;
    std::vector<double> deviation;

    int last_year() const noexcept { return first_year + static_cast<int>(deviation.size()) - 1; }
    std::size_t size() const noexcept { return deviation.size(); }
};

/// Windows truncate at the spectrum boundaries; an even-sized window uses the
/// mean of its two middle values.
inline DeviationSeries median_deviation(const Spectrum& spec) {
    if (spec.counts.empty()) throw std::invalid_argument("median_deviation: empty spectrum");
    const auto n = static_cast<std::ptrdiff_t>(spec.counts.size());
    DeviationSeries d;
    d.first_year = spec.first_year;
    d.median.resize(spec.counts.size());
    d.deviation.resize(spec.counts.size());
    std::vector<std::int64_t> window;
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        window.clear();
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, t - 2); k <= std::min(n - 1, t + 2); ++k)
            window.push_back(spec.counts[static_cast<std::size_t>(k)]);
        std::sort(window.begin(), window.end());
        auto m = window.size();
        double med = m % 2 == 1 ? static_cast<double>(window[m / 2])
                                : (static_cast<double>(window[m / 2 - 1]) + static_cast<double>(window[m / 2])) / 2.0;
        auto i = static_cast<std::size_t>(t);
        d.median[i] = med;
        d.deviation[i] = static_cast<double>(spec.counts[i]) - med;
    }
    return d;
}

/// Average rank (1 = smallest) divided by the number of values; ties share their mean rank.
inline std::vector<double> rank_transform(std::span<const double> values) {
    const auto n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = avg / static_cast<double>(n);
        i = j + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Most-referenced publications

/// Maps a raw cited-reference string to its cluster's canonical string.
using CanonicalMap = std::unordered_map<std::string, std::string>;

struct TopReferenced {
    std::string reference;
    std::int64_t count = 0;

    bool operator==(const TopReferenced&) const = default;
};

/// Counts per reference identity (raw string, or the cluster canonical when `canonical`
/// is given), sorted by count desc then string asc; rows below `min_count` dropped.
inline std::vector<TopReferenced> top_referenced(std::span<const CitedRef> refs, std::int64_t min_count,
                                                 const CanonicalMap* canonical = nullptr) {
    if (min_count < 1) throw std::invalid_argument("top_referenced: min_count must be positive");
    std::map<std::string, std::int64_t> counts;
    for (const auto& r : refs) {
        const std::string* id = &r.raw;
        if (canonical != nullptr)
            if (auto it = canonical->find(r.raw); it != canonical->end()) id = &it->second;
        ++counts[*id];
    }
    std::vector<TopReferenced> rows;
    for (auto& [ref, c] : counts)
        if (c >= min_count) rows.push_back({ref, c});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const TopReferenced& a, const TopReferenced& b) { return a.count > b.count; });
    return rows;
}

// ---------------------------------------------------------------------------
// Multi-RPYS

struct Segmentation {
    enum class Kind { per_year, bins, cuts };
    Kind kind = Kind::per_year;
    int bins = 0;
    std::vector<int> cuts;  // each cut year starts a new segment

    static Segmentation per_year() { return {}; }
    static Segmentation equal_bins(int n) { return {Kind::bins, n, {}}; }
    static Segmentation cut_points(std::vector<int> c) { return {Kind::cuts, 0, std::move(c)}; }
};

/// Accepts `per-year`, `bins:N`, or `cuts:Y1,Y2,...`.
inline Segmentation parse_segmentation(std::string_view s) {
    if (s == "per-year" || s.empty()) return Segmentation::per_year();
    if (s.substr(0, 5) == "bins:") {
        auto n = text::parse_int(s.substr(5));
        if (!n || *n < 1) throw std::invalid_argument("bins:N needs a positive N");
        return Segmentation::equal_bins(static_cast<int>(*n));
    }
    if (s.substr(0, 5) == "cuts:") {
        std::vector<int> cuts;
        for (auto piece : text::split(s.substr(5), ",")) {
            auto y = text::parse_int(piece);
            if (!y) throw std::invalid_argument("invalid cut year '" + std::string(piece) + "'");
            cuts.push_back(static_cast<int>(*y));
        }
        return Segmentation::cut_points(std::move(cuts));
    }
    throw std::invalid_argument("unknown segmentation '" + std::string(s) + "' (per-year | bins:N | cuts:Y1,Y2)");
}

inline constexpr std::size_t kLowSupportRefs = 5;

struct Segment {
    std::string label;
    YearRange citing_years;
    std::size_t documents = 0;
    std::size_t dated_refs = 0;  // within the heatmap's RPY axis
    bool low_support = false;
};

struct HeatmapMatrix {
    std::vector<Segment> segments;
    std::vector<int> rpy_axis;
    std::vector<std::vector<std::optional<double>>> cells;  // [segment][year]
    std::vector<std::string> diagnostics;
};

/// Citing-year segments over the years present in the corpus.
inline std::vector<Segment> make_segments(const Corpus& corpus, const Segmentation& seg) {
    std::map<int, std::size_t> docs_per_year;
    for (const auto& r : corpus.records())
        if (r.pub_year) ++docs_per_year[*r.pub_year];
    if (docs_per_year.empty()) throw EmptySegmentation();
    const int lo = docs_per_year.begin()->first;
    const int hi = docs_per_year.rbegin()->first;

    std::vector<YearRange> ranges;
    switch (seg.kind) {
    case Segmentation::Kind::per_year:
        for (auto& [y, n] : docs_per_year) ranges.push_back({y, y});
        break;
    case Segmentation::Kind::bins: {
        if (seg.bins < 1) throw EmptySegmentation();
        int span = hi - lo + 1;
        int width = (span + seg.bins - 1) / seg.bins;
        for (int start = lo; start <= hi; start += width) ranges.push_back({start, std::min(hi, start + width - 1)});
        break;
    }
    case Segmentation::Kind::cuts: {
        std::vector<int> cuts = seg.cuts;
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        int start = lo;
        for (int c : cuts) {
            if (c <= start || c > hi) continue;
            ranges.push_back({start, c - 1});
            start = c;
        }
        ranges.push_back({start, hi});
        break;
    }
    }

    std::vector<Segment> out;
    for (auto r : ranges) {
        Segment s;
        s.citing_years = r;
        s.label = r.first == r.last ? std::to_string(r.first) : std::to_string(r.first) + "-" + std::to_string(r.last);
        for (auto it = docs_per_year.lower_bound(r.first); it != docs_per_year.end() && it->first <= r.last; ++it)
            s.documents += it->second;
        out.push_back(std::move(s));
    }
    bool any = std::any_of(out.begin(), out.end(), [](const Segment& s) { return s.documents > 0; });
    if (!any) throw EmptySegmentation();
    return out;
}

/// Rank-transforms each segment's deviations into one heatmap row; absent series give absent rows.
inline HeatmapMatrix build_heatmap(std::vector<Segment> segments, const std::vector<int>& rpy_axis,
                                   const std::vector<std::optional<DeviationSeries>>& deviations) {
    HeatmapMatrix h;
    h.rpy_axis = rpy_axis;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        std::vector<std::optional<double>> row(rpy_axis.size());
        if (deviations.at(s)) {
            auto ranks = rank_transform(deviations[s]->deviation);
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = ranks.at(i);
        }
        h.cells.push_back(std::move(row));
    }
    h.segments = std::move(segments);
    return h;
}

struct MultiRpys {
    HeatmapMatrix heatmap;
    std::vector<std::optional<Spectrum>> spectra;
    std::vector<std::optional<DeviationSeries>> deviations;
};

/// Full Multi-RPYS run, keeping the per-segment spectra and deviations.
inline MultiRpys multi_rpys_detail(const Corpus& corpus, const Segmentation& segmentation,
                                   std::optional<YearRange> range = {}) {
    auto segments = make_segments(corpus, segmentation);

    YearRange axis{};
    if (range) {
        if (range->first > range->last) throw std::invalid_argument("multi_rpys: range first > last");
        axis = *range;
    } else {
        std::optional<int> lo, hi;
        for (const auto& rec : corpus.records()) {
            if (!rec.pub_year) continue;
            for (const auto& cr : rec.cited_refs) {
                if (!cr.ref_year) continue;
                lo = lo ? std::min(*lo, *cr.ref_year) : *cr.ref_year;
                hi = hi ? std::max(*hi, *cr.ref_year) : *cr.ref_year;
            }
        }
        if (!lo) throw NoDatedRefs();
        axis = {*lo, *hi};
    }

    MultiRpys out;
    std::vector<std::string> diagnostics;
    for (auto& seg : segments) {
        std::vector<std::optional<int>> years;
        for (const auto& rec : corpus.records()) {
            if (!rec.pub_year || !seg.citing_years.contains(*rec.pub_year)) continue;
            for (const auto& cr : rec.cited_refs)
                if (cr.ref_year && axis.contains(*cr.ref_year)) years.push_back(cr.ref_year);
        }
        seg.dated_refs = years.size();
        seg.low_support = years.size() < kLowSupportRefs;
        if (years.empty()) {
            diagnostics.push_back("segment " + seg.label + " has no dated references in range; row left empty");
            out.spectra.emplace_back();
            out.deviations.emplace_back();
            continue;
        }
        if (seg.low_support)
            diagnostics.push_back("segment " + seg.label + " has only " + std::to_string(years.size()) +
                                  " dated references (low support)");
        auto spec = spectrum_from_years(years, axis);
        out.deviations.emplace_back(median_deviation(spec));
        out.spectra.emplace_back(std::move(spec));
    }

    std::vector<int> years_axis;
    for (int y = axis.first; y <= axis.last; ++y) years_axis.push_back(y);
    out.heatmap = build_heatmap(std::move(segments), years_axis, out.deviations);
    out.heatmap.diagnostics = std::move(diagnostics);
    return out;
}

inline HeatmapMatrix multi_rpys(const Corpus& corpus, const Segmentation& segmentation,
                                std::optional<YearRange> range = {}) {
    return multi_rpys_detail(corpus, segmentation, range).heatmap;
}

}  // namespace citehist
