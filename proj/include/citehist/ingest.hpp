#pragma once

// Web of Science field-tagged export parsing.
//
// An export is a sequence of lines. Optional `FN`/`VR` header lines precede the
// records; each record runs from a `PT` line to an `ER` line; `EF` closes the
// file. A field line is a two-character tag, a space, and the first value.
// Continuation lines are indented by exactly three spaces and carry one more
// value of the current field. For `CR` every value is one cited reference.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citehist/error.hpp"
#include "citehist/text.hpp"

namespace citehist {

inline constexpr int kMinYear = 1500;
inline constexpr int kMaxYear = 2100;

inline bool is_plausible_year(long long y) noexcept { return y >= kMinYear && y <= kMaxYear; }

struct Warning {
    std::size_t line = 0;  // 1-based; 0 when not tied to a line
    std::string message;

    bool operator==(const Warning&) const = default;
};

struct RawField {
    std::string tag;
    std::vector<std::string> values;
    std::size_t line = 0;
};

struct CitedRef {
    std::string raw;
    std::string first_author_norm;
    std::optional<int> ref_year;
    std::optional<std::string> source_abbrev;
    std::optional<std::string> volume;
    std::optional<std::string> page;
    std::optional<std::string> doi;

    bool operator==(const CitedRef&) const = default;
};

struct DocumentRecord {
    std::string id;
    std::string first_author_norm;
    std::vector<std::string> authors;
    std::string title;
    std::string source;
    std::string source_abbrev;
    std::optional<int> pub_year;
    std::optional<std::string> volume;
    std::optional<std::string> begin_page;
    std::optional<std::string> doi;
    std::int64_t times_cited_global = 0;
    std::string document_type;
    std::vector<CitedRef> cited_refs;

    bool operator==(const DocumentRecord&) const = default;
};

struct ParseResult {
    std::vector<DocumentRecord> records;
    std::vector<Warning> warnings;
};

// ---------------------------------------------------------------------------
// Normalization

namespace detail {

inline bool has_lower(std::string_view s) noexcept {
    for (char c : s)
        if (c >= 'a' && c <= 'z') return true;
    return false;
}

inline std::string initials_of(const std::vector<std::string_view>& tokens, bool comma_form) {
    std::string out;
    for (auto tok : tokens) {
        if (tok.empty()) continue;
        // Uppercase runs such as "AJ" are already initials. In "Surname, Given"
        // form only short runs qualify, so "WOLFGANG" still contributes "W".
        bool run = !has_lower(tok) && (!comma_form || tok.size() <= 4);
        if (run)
            out += text::to_upper_ascii(tok);
        else
            out += text::to_upper_ascii(tok.substr(0, 1));
    }
    return out;
}

}  // namespace detail

/// Folds an author name to the `SURNAME INITIALS` key used for matching.
inline std::string normalize_author(std::string_view name) {
    std::string folded;
    folded.reserve(name.size());
    for (std::uint32_t cp : text::codepoints(name)) {
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c == '.' || c == '-' || c == '\'') continue;
            folded.push_back(text::is_space(c) ? ' ' : c);
        } else {
            folded += text::fold_to_ascii(cp);
        }
    }

    std::string surname;
    std::string initials;
    if (auto comma = folded.find(','); comma != std::string::npos) {
        for (auto w : text::split_ws(std::string_view(folded).substr(0, comma))) surname += text::to_upper_ascii(w);
        std::string rest = folded.substr(comma + 1);
        for (char& c : rest)
            if (c == ',') c = ' ';
        initials = detail::initials_of(text::split_ws(rest), true);
    } else {
        auto tokens = text::split_ws(folded);
        if (!tokens.empty()) {
            surname = text::to_upper_ascii(tokens.front());
            tokens.erase(tokens.begin());
            initials = detail::initials_of(tokens, false);
        }
    }
    if (surname.empty()) return initials;
    if (initials.empty()) return surname;
    return surname + ' ' + initials;
}

/// Whitespace- and punctuation-insensitive form of a journal title.
inline std::string normalize_source(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (std::uint32_t cp : text::codepoints(s)) {
        std::string piece;
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (text::is_alnum_ascii(c))
                piece.assign(1, c);
        } else {
            piece = std::string(text::fold_to_ascii(cp));
        }
        if (piece.empty()) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out += text::to_upper_ascii(piece);
    }
    return out;
}

/// Lowercases and strips a leading `DOI ` or `doi:` prefix.
inline std::string normalize_doi(std::string_view s) {
    s = text::trim(s);
    if (text::starts_with_ci(s, "DOI ") || text::starts_with_ci(s, "DOI:")) s = text::trim(s.substr(4));
    return text::to_lower_ascii(s);
}

// ---------------------------------------------------------------------------
// Cited references

namespace detail {

inline bool is_volume_token(std::string_view s) noexcept {
    return s.size() >= 2 && s[0] == 'V' && text::all_digits(s.substr(1));
}

inline bool is_page_token(std::string_view s) noexcept {
    if (s.size() < 2 || s[0] != 'P') return false;
    bool digit = false;
    for (char c : s.substr(1)) {
        if (!text::is_alnum_ascii(c)) return false;
        digit = digit || (c >= '0' && c <= '9');
    }
    return digit;
}

inline bool is_doi_token(std::string_view s) noexcept { return text::starts_with_ci(s, "DOI "); }

inline std::optional<int> year_token(std::string_view s) noexcept {
    if (s.size() != 4 || !text::all_digits(s)) return std::nullopt;
    int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    if (!is_plausible_year(y)) return std::nullopt;
    return y;
}

}  // namespace detail

/// Splits one CR line into subfields. Total: every line yields a CitedRef.
inline CitedRef parse_cited_ref(std::string_view line) {
    CitedRef ref;
    ref.raw = std::string(line);

    auto parts = text::split(line, ", ");
    for (auto& p : parts) p = text::trim(p);
    ref.first_author_norm = normalize_author(parts.front());

    std::optional<std::size_t> year_at;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (auto y = detail::year_token(parts[i])) {
            ref.ref_year = y;
            year_at = i;
            break;
        }
    }

    auto is_tagged = [](std::string_view p) {
        return detail::is_volume_token(p) || detail::is_page_token(p) || detail::is_doi_token(p);
    };
    std::size_t source_at = year_at ? *year_at + 1 : 1;
    if (source_at < parts.size()) {
        auto p = parts[source_at];
        if (!p.empty() && !is_tagged(p) && !detail::year_token(p)) ref.source_abbrev = std::string(p);
    }

    for (std::size_t i = 1; i < parts.size(); ++i) {
        auto p = parts[i];
        if (!ref.volume && detail::is_volume_token(p))
            ref.volume = std::string(p.substr(1));
        else if (!ref.page && detail::is_page_token(p))
            ref.page = std::string(p.substr(1));
        else if (!ref.doi && detail::is_doi_token(p))
            ref.doi = normalize_doi(p);
    }
    return ref;
}

// ---------------------------------------------------------------------------
// Export files

namespace detail {

inline bool is_tag(std::string_view line) noexcept {
    if (line.size() < 2) return false;
    char a = line[0], b = line[1];
    bool ok = (a >= 'A' && a <= 'Z') && ((b >= 'A' && b <= 'Z') || (b >= '0' && b <= '9'));
    return ok && (line.size() == 2 || line[2] == ' ');
}

struct PendingRecord {
    std::size_t start_line = 0;
    std::vector<RawField> fields;
};

inline const RawField* find_field(const PendingRecord& r, std::string_view tag) {
    for (const auto& f : r.fields)
        if (f.tag == tag) return &f;
    return nullptr;
}

inline std::string joined(const RawField* f) {
    if (f == nullptr) return {};
    std::string out;
    for (const auto& v : f->values) {
        if (!out.empty()) out.push_back(' ');
        out += v;
    }
    return out;
}

inline std::optional<std::string> optional_value(const RawField* f) {
    if (f == nullptr) return std::nullopt;
    auto v = joined(f);
    if (v.empty()) return std::nullopt;
    return v;
}

inline DocumentRecord build_record(const PendingRecord& pending, std::vector<Warning>& warnings) {
    DocumentRecord rec;
    if (const auto* au = find_field(pending, "AU")) rec.authors = au->values;
    if (!rec.authors.empty()) rec.first_author_norm = normalize_author(rec.authors.front());
    rec.title = joined(find_field(pending, "TI"));
    rec.source = joined(find_field(pending, "SO"));
    if (const auto* j9 = find_field(pending, "J9"); j9 != nullptr && !joined(j9).empty())
        rec.source_abbrev = normalize_source(joined(j9));
    else
        rec.source_abbrev = normalize_source(rec.source);

    if (const auto* py = find_field(pending, "PY")) {
        auto value = joined(py);
        auto y = text::parse_int(value);
        if (y && text::trim(value).size() == 4 && is_plausible_year(*y))
            rec.pub_year = static_cast<int>(*y);
        else
            warnings.push_back({py->line, "unparseable publication year '" + value + "'"});
    } else {
        warnings.push_back({pending.start_line, "record has no PY field"});
    }

    if (const auto* tc = find_field(pending, "TC")) {
        auto value = joined(tc);
        auto n = text::parse_int(value);
        if (n && *n >= 0)
            rec.times_cited_global = *n;
        else
            warnings.push_back({tc->line, "invalid times-cited count '" + value + "'"});
    }

    rec.volume = optional_value(find_field(pending, "VL"));
    rec.begin_page = optional_value(find_field(pending, "BP"));
    if (auto doi = optional_value(find_field(pending, "DI"))) rec.doi = normalize_doi(*doi);
    rec.document_type = joined(find_field(pending, "DT"));
    if (auto ut = optional_value(find_field(pending, "UT"))) rec.id = *ut;

    if (const auto* cr = find_field(pending, "CR"))
        for (const auto& v : cr->values) rec.cited_refs.push_back(parse_cited_ref(v));
    return rec;
}

}  // namespace detail

/// Parses a complete export held in memory.
/// Throws UnreadableInput for binary content and EmptyExport when no `PT` block exists.
inline ParseResult parse_export(std::string_view bytes) {
    if (bytes.find('\0') != std::string_view::npos) throw UnreadableInput("input contains NUL bytes; not a text export");

    ParseResult result;
    std::string decoded;
    if (text::is_valid_utf8(bytes)) {
        decoded = std::string(bytes);
    } else {
        decoded = text::latin1_to_utf8(bytes);
        result.warnings.push_back({0, "input is not valid UTF-8; decoded as Latin-1"});
    }
    std::string_view input = decoded;
    if (input.substr(0, 3) == "\xEF\xBB\xBF") input.remove_prefix(3);

    std::vector<detail::PendingRecord> pending;
    std::optional<detail::PendingRecord> current;
    bool ended = false;
    std::size_t pt_blocks = 0;
    auto& warnings = result.warnings;

    auto close_current = [&](std::size_t line, bool terminated) {
        if (!current) return;
        if (!terminated)
            warnings.push_back({current->start_line, "record starting here is not terminated by ER (closed at line " +
                                                         std::to_string(line) + ")"});
        pending.push_back(std::move(*current));
        current.reset();
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= input.size()) {
        std::size_t nl = input.find('\n', pos);
        std::string_view line = input.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        bool last = nl == std::string_view::npos;
        pos = last ? input.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;

        if (ended) {
            warnings.push_back({line_no, "content after EF ignored"});
            continue;
        }

        if (text::is_space(line.front())) {
            bool three = line.size() > 3 && line.substr(0, 3) == "   " && !text::is_space(line[3]);
            if (!three) {
                warnings.push_back({line_no, line.front() == '\t' ? "tab-indented continuation line rejected"
                                                                  : "continuation line must be indented by exactly three spaces"});
                continue;
            }
            if (!current || current->fields.empty()) {
                warnings.push_back({line_no, "continuation line outside a field"});
                continue;
            }
            current->fields.back().values.emplace_back(text::trim_right(line.substr(3)));
            continue;
        }

        if (!detail::is_tag(line)) {
            warnings.push_back({line_no, "malformed line: expected a two-character field tag"});
            continue;
        }
        std::string tag(line.substr(0, 2));
        std::string value = line.size() > 3 ? std::string(text::trim(line.substr(3))) : std::string();

        if (tag == "PT") {
            close_current(line_no, false);
            ++pt_blocks;
            current = detail::PendingRecord{line_no, {}};
            current->fields.push_back({tag, {value}, line_no});
        } else if (tag == "ER") {
            if (current)
                close_current(line_no, true);
            else
                warnings.push_back({line_no, "ER outside a record"});
        } else if (tag == "EF") {
            close_current(line_no, false);
            ended = true;
        } else if (current) {
            RawField field{tag, {}, line_no};
            if (!value.empty()) field.values.push_back(value);
            // Repeated tags extend the earlier field.
            auto it = std::find_if(current->fields.begin(), current->fields.end(),
                                   [&](const RawField& f) { return f.tag == tag; });
            if (it != current->fields.end() && it + 1 != current->fields.end()) {
                RawField moved = std::move(*it);
                current->fields.erase(it);
                moved.values.insert(moved.values.end(), field.values.begin(), field.values.end());
                current->fields.push_back(std::move(moved));
            } else if (it != current->fields.end()) {
                it->values.insert(it->values.end(), field.values.begin(), field.values.end());
            } else {
                current->fields.push_back(std::move(field));
            }
        } else if (tag == "FN" || tag == "VR") {
            // header line; both the current and the legacy FN text are accepted
        } else {
            warnings.push_back({line_no, "field " + tag + " outside a record"});
        }
    }
    close_current(line_no, false);

    if (pt_blocks == 0) throw EmptyExport();

    std::set<std::string> seen;
    std::size_t ordinal = 0;
    for (const auto& p : pending) {
        ++ordinal;
        DocumentRecord rec = detail::build_record(p, warnings);
        if (rec.id.empty()) {
            std::string base = "REC" + std::to_string(ordinal);
            rec.id = base;
            for (int k = 2; seen.count(rec.id) != 0; ++k) rec.id = base + "-" + std::to_string(k);
        } else if (seen.count(rec.id) != 0) {
            warnings.push_back({p.start_line, "duplicate record id " + rec.id + " dropped"});
            continue;
        }
        seen.insert(rec.id);
        result.records.push_back(std::move(rec));
    }
    std::stable_sort(warnings.begin(), warnings.end(),
                     [](const Warning& a, const Warning& b) { return a.line < b.line; });
    return result;
}

inline ParseResult parse_export(std::istream& in) {
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw UnreadableInput("failed to read input stream");
    return parse_export(std::string_view(bytes));
}

}  // namespace citehist
