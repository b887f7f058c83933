#pragma once

// Project file: parsed records, decision ledger and analysis settings in one
// JSON document with sorted keys and fixed formatting, so that loading and
// saving an unmodified project reproduces it byte for byte.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "citehist/disambig.hpp"
#include "citehist/error.hpp"
#include "citehist/ingest.hpp"
#include "citehist/rpys.hpp"
#include "citehist/text.hpp"

namespace citehist {

inline constexpr int kProjectFormatVersion = 1;

struct AnalysisSettings {
    std::optional<double> threshold;  // set once automatic clustering has run
    std::uint64_t seed = 42;
    std::optional<YearRange> range;
    std::string segments = "per-year";
    nlohmann::json extra = nlohmann::json::object();  // keys written by newer versions

    bool operator==(const AnalysisSettings&) const = default;
};

struct ProjectState {
    int format_version = kProjectFormatVersion;
    std::string fingerprint;  // content hash of the source export
    std::string source_name;
    std::vector<DocumentRecord> records;
    std::vector<Warning> parse_warnings;
    DecisionLedger ledger;
    AnalysisSettings settings;
    nlohmann::json extra = nlohmann::json::object();

    bool has_corpus() const noexcept { return !records.empty(); }
};

inline std::string content_fingerprint(std::string_view bytes) { return text::hex64(text::fnv1a(bytes)); }

/// Current UTC time as ISO-8601; honours SOURCE_DATE_EPOCH for reproducible runs.
inline std::string now_iso8601() {
    std::time_t t{};
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr && *env != '\0')
        t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    else
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace detail

inline nlohmann::json decision_to_json(const Decision& d) {
    return {{"kind", std::string(to_string(d.kind))}, {"operands", d.operands}, {"actor", d.actor},
            {"timestamp", d.timestamp}};
}

/// Throws std::invalid_argument on a malformed decision.
inline Decision decision_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("decision must be an object");
    Decision d;
    auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) throw std::invalid_argument("decision.kind missing");
    auto kind = parse_decision_kind(kind_it->get<std::string>());
    if (!kind) throw std::invalid_argument("unknown decision kind '" + kind_it->get<std::string>() + "'");
    d.kind = *kind;
    auto ops = j.find("operands");
    if (ops == j.end() || !ops->is_array() || ops->empty()) throw std::invalid_argument("decision.operands must be a non-empty array");
    for (const auto& o : *ops) {
        if (!o.is_string()) throw std::invalid_argument("decision operands must be strings");
        d.operands.push_back(o.get<std::string>());
    }
    if (d.kind == DecisionKind::set_canonical && d.operands.size() != 1)
        throw std::invalid_argument("set_canonical takes exactly one operand");
    if (auto a = j.find("actor"); a != j.end()) {
        if (!a->is_string()) throw std::invalid_argument("decision.actor must be a string");
        d.actor = a->get<std::string>();
    }
    if (auto t = j.find("timestamp"); t != j.end()) {
        if (!t->is_string()) throw std::invalid_argument("decision.timestamp must be a string");
        d.timestamp = t->get<std::string>();
    }
    return d;
}

/// One JSON object per line.
inline std::string ledger_to_jsonl(std::span<const Decision> ledger) {
    std::string out;
    for (const auto& d : ledger) out += decision_to_json(d).dump() + "\n";
    return out;
}

inline DecisionLedger ledger_from_jsonl(std::string_view doc) {
    DecisionLedger out;
    std::size_t pos = 0;
    while (pos < doc.size()) {
        auto nl = doc.find('\n', pos);
        auto line = text::trim(doc.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        std::size_t at = pos;
        pos = nl == std::string_view::npos ? doc.size() : nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(decision_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw CorruptFile(at + (e.byte > 0 ? e.byte - 1 : 0), e.what());
        } catch (const std::invalid_argument& e) {
            throw CorruptFile(at, e.what());
        }
    }
    return out;
}

inline nlohmann::json record_to_json(const DocumentRecord& r) {
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& cr : r.cited_refs) refs.push_back(cr.raw);
    return {{"id", r.id},
            {"authors", r.authors},
            {"title", r.title},
            {"source", r.source},
            {"source_abbrev", r.source_abbrev},
            {"pub_year", detail::opt(r.pub_year)},
            {"volume", detail::opt(r.volume)},
            {"begin_page", detail::opt(r.begin_page)},
            {"doi", detail::opt(r.doi)},
            {"times_cited", r.times_cited_global},
            {"document_type", r.document_type},
            {"cited_refs", refs}};
}

inline DocumentRecord record_from_json(const nlohmann::json& j) {
    DocumentRecord r;
    r.id = j.at("id").get<std::string>();
    r.authors = j.at("authors").get<std::vector<std::string>>();
    if (!r.authors.empty()) r.first_author_norm = normalize_author(r.authors.front());
    r.title = j.at("title").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.source_abbrev = j.at("source_abbrev").get<std::string>();
    r.pub_year = detail::get_opt<int>(j, "pub_year");
    r.volume = detail::get_opt<std::string>(j, "volume");
    r.begin_page = detail::get_opt<std::string>(j, "begin_page");
    r.doi = detail::get_opt<std::string>(j, "doi");
    r.times_cited_global = j.at("times_cited").get<std::int64_t>();
    if (r.times_cited_global < 0) throw std::invalid_argument("negative times_cited");
    r.document_type = j.at("document_type").get<std::string>();
    for (const auto& raw : j.at("cited_refs")) r.cited_refs.push_back(parse_cited_ref(raw.get<std::string>()));
    return r;
}

inline nlohmann::json settings_to_json(const AnalysisSettings& s) {
    nlohmann::json j = s.extra.is_object() ? s.extra : nlohmann::json::object();
    j["threshold"] = detail::opt(s.threshold);
    j["seed"] = s.seed;
    j["range"] = s.range ? nlohmann::json{s.range->first, s.range->last} : nlohmann::json(nullptr);
    j["segments"] = s.segments;
    return j;
}

inline AnalysisSettings settings_from_json(const nlohmann::json& j) {
    AnalysisSettings s;
    s.threshold = detail::get_opt<double>(j, "threshold");
    s.seed = j.at("seed").get<std::uint64_t>();
    if (auto r = j.find("range"); r != j.end() && !r->is_null()) s.range = YearRange{r->at(0).get<int>(), r->at(1).get<int>()};
    s.segments = j.at("segments").get<std::string>();
    s.extra = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "threshold" && it.key() != "seed" && it.key() != "range" && it.key() != "segments")
            s.extra[it.key()] = it.value();
    return s;
}

inline std::string serialize_project(const ProjectState& p) {
    nlohmann::json j = p.extra.is_object() ? p.extra : nlohmann::json::object();
    j["format_version"] = p.format_version;
    j["fingerprint"] = p.fingerprint;
    j["source_name"] = p.source_name;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : p.records) recs.push_back(record_to_json(r));
    j["records"] = std::move(recs);
    nlohmann::json warns = nlohmann::json::array();
    for (const auto& w : p.parse_warnings) warns.push_back({{"line", w.line}, {"message", w.message}});
    j["parse_warnings"] = std::move(warns);
    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& d : p.ledger) ledger.push_back(decision_to_json(d));
    j["ledger"] = std::move(ledger);
    j["settings"] = settings_to_json(p.settings);
    return j.dump(1, '\t') + "\n";
}

inline ProjectState deserialize_project(std::string_view doc) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(doc);
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptFile(e.byte > 0 ? e.byte - 1 : 0, e.what());
    }
    if (!j.is_object()) throw CorruptFile(0, "top level is not an object");
    auto v = j.find("format_version");
    if (v == j.end() || !v->is_number_integer()) throw CorruptFile(0, "missing format_version");
    if (v->get<int>() > kProjectFormatVersion) throw VersionTooNew(v->get<int>(), kProjectFormatVersion);

    ProjectState p;
    try {
        p.format_version = v->get<int>();
        p.fingerprint = j.at("fingerprint").get<std::string>();
        p.source_name = j.at("source_name").get<std::string>();
        for (const auto& r : j.at("records")) p.records.push_back(record_from_json(r));
        for (const auto& w : j.at("parse_warnings"))
            p.parse_warnings.push_back({w.at("line").get<std::size_t>(), w.at("message").get<std::string>()});
        for (const auto& d : j.at("ledger")) p.ledger.push_back(decision_from_json(d));
        p.settings = settings_from_json(j.at("settings"));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(0, e.what());
    } catch (const std::invalid_argument& e) {
        throw CorruptFile(0, e.what());
    }
    static constexpr std::string_view known[] = {"format_version", "fingerprint", "source_name", "records",
                                                 "parse_warnings", "ledger", "settings"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) p.extra[it.key()] = it.value();
    return p;
}

/// Hash of the corpus fingerprint and the ledger; changes with every accepted decision.
inline std::string state_fingerprint(const ProjectState& p) {
    auto h = text::fnv1a(p.fingerprint);
    h = text::fnv1a(ledger_to_jsonl(p.ledger), h);
    return text::hex64(h);
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary file, fsyncs and renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("cannot write " + tmp.string());
    std::size_t done = 0;
    while (done < content.size()) {
        auto n = ::write(fd, content.data() + done, content.size() - done);
        if (n < 0) {
            ::close(fd);
            throw Error("write failed for " + tmp.string());
        }
        done += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    std::filesystem::rename(tmp, path);
    auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    if (int dfd = ::open(dir.c_str(), O_RDONLY); dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
}

inline void save_project(const std::filesystem::path& path, const ProjectState& p) {
    write_file_atomic(path, serialize_project(p));
}

inline ProjectState load_project(const std::filesystem::path& path) { return deserialize_project(read_file(path)); }

/// Advisory exclusive lock on `<project>.lock`, released on destruction.
class ProjectLock {
public:
    static std::optional<ProjectLock> try_acquire(const std::filesystem::path& project) {
        auto lock_path = project;
        lock_path += ".lock";
        int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd < 0) return std::nullopt;
        if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd);
            return std::nullopt;
        }
        return ProjectLock(fd);
    }

    ProjectLock(ProjectLock&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    ProjectLock& operator=(ProjectLock&& o) noexcept {
        if (this != &o) {
            release();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ProjectLock(const ProjectLock&) = delete;
    ProjectLock& operator=(const ProjectLock&) = delete;
    ~ProjectLock() { release(); }

private:
    explicit ProjectLock(int fd) : fd_(fd) {}
    void release() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
            fd_ = -1;
        }
    }
    int fd_ = -1;
};

/// `$CITEHIST_PROJECT_DIR/citehist.json`, else `citehist.json` in the working directory.
inline std::filesystem::path default_project_path() {
    if (const char* dir = std::getenv("CITEHIST_PROJECT_DIR"); dir != nullptr && *dir != '\0')
        return std::filesystem::path(dir) / "citehist.json";
    return "citehist.json";
}

}  // namespace citehist
