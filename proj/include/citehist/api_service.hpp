#pragma once

// Local HTTP/JSON service over one project file, used by the review UI.
//
// Every response carries the project state fingerprint (body field and
// `X-Project-Fingerprint` header). A ledger POST must quote the fingerprint it
// was based on; stale fingerprints are rejected with 409. Accepted decisions
// are written to disk before the response is sent.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "citehist/analysis.hpp"
#include "citehist/io_export.hpp"
#include "citehist/project.hpp"

namespace citehist::api {

using nlohmann::json;

inline json cluster_json(const VariantCluster& c) {
    json members = json::array();
    for (const auto& m : c.members) members.push_back({{"raw", m.raw}, {"count", m.count}});
    return {{"id", c.id},
            {"status", std::string(to_string(c.status))},
            {"canonical", c.canonical},
            {"total", c.total()},
            {"members", members}};
}

inline json heatmap_json(const HeatmapMatrix& h) {
    json segs = json::array();
    for (const auto& s : h.segments)
        segs.push_back({{"label", s.label},
                        {"first", s.citing_years.first},
                        {"last", s.citing_years.last},
                        {"documents", s.documents},
                        {"dated_refs", s.dated_refs},
                        {"low_support", s.low_support}});
    json cells = json::array();
    for (const auto& row : h.cells) {
        json r = json::array();
        for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
        cells.push_back(std::move(r));
    }
    return {{"segments", segs}, {"years", h.rpy_axis}, {"cells", cells}, {"diagnostics", h.diagnostics}};
}

class Service {
public:
    explicit Service(std::filesystem::path project) : path_(std::move(project)) { reload(); }

    /// Registers all routes on `server`.
    void mount(httplib::Server& server) {
        server.set_pre_routing_handler([](const httplib::Request& req, httplib::Response& res) {
            add_cors(req, res);
            if (req.method == "OPTIONS") {
                res.status = 204;
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });
        server.Get("/api/summary", [this](const auto& req, auto& res) { handle(req, res, &Service::summary); });
        server.Get("/api/clusters", [this](const auto& req, auto& res) { handle(req, res, &Service::clusters); });
        server.Get("/api/top", [this](const auto& req, auto& res) { handle(req, res, &Service::top); });
        server.Get("/api/rpys", [this](const auto& req, auto& res) { handle(req, res, &Service::rpys); });
        server.Get("/api/multirpys", [this](const auto& req, auto& res) { handle(req, res, &Service::multirpys); });
        server.Get("/api/graph", [this](const auto& req, auto& res) { handle(req, res, &Service::graph); });
        server.Get("/api/mainpath", [this](const auto& req, auto& res) { handle(req, res, &Service::mainpath); });
        server.Get("/api/shortest", [this](const auto& req, auto& res) { handle(req, res, &Service::shortest); });
        server.Post("/api/ledger", [this](const auto& req, auto& res) { post_ledger(req, res); });
    }

    std::string fingerprint() const {
        std::shared_lock lock(mutex_);
        return fingerprint_;
    }

private:
    struct Reply {
        int status = 200;
        json body;
    };
    using Handler = Reply (Service::*)(const httplib::Request&, const Analysis&, const ProjectState&);

    static void add_cors(const httplib::Request& req, httplib::Response& res) {
        auto origin = req.get_header_value("Origin");
        bool local = origin.rfind("http://localhost", 0) == 0 || origin.rfind("http://127.0.0.1", 0) == 0;
        if (!local) return;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Expose-Headers", "X-Project-Fingerprint");
    }

    static void send(httplib::Response& res, int status, const std::string& fingerprint, json data) {
        json body = {{"fingerprint", fingerprint}};
        if (status >= 400)
            body["error"] = std::move(data);
        else
            body["data"] = std::move(data);
        res.status = status;
        res.set_header("X-Project-Fingerprint", fingerprint);
        res.set_content(body.dump(), "application/json");
    }

    void reload() {
        state_ = load_project(path_);
        fingerprint_ = state_fingerprint(state_);
        mtime_ = std::filesystem::last_write_time(path_);
        analysis_.reset();
    }

    /// Picks up changes written by other processes.
    void refresh_if_changed() {
        std::error_code ec;
        auto t = std::filesystem::last_write_time(path_, ec);
        {
            std::shared_lock lock(mutex_);
            if (ec || t == mtime_) return;
        }
        std::unique_lock lock(mutex_);
        if (std::filesystem::last_write_time(path_, ec) != mtime_ && !ec) reload();
    }

    std::shared_ptr<const Analysis> analysis_locked() const {
        std::lock_guard guard(cache_mutex_);
        if (!analysis_) analysis_ = std::make_shared<const Analysis>(analyze(state_));
        return analysis_;
    }

    void handle(const httplib::Request& req, httplib::Response& res, Handler h) {
        refresh_if_changed();
        std::shared_lock lock(mutex_);
        try {
            if (!state_.has_corpus()) {
                send(res, 409, fingerprint_, "no corpus loaded");
                return;
            }
            auto a = analysis_locked();
            auto r = (this->*h)(req, *a, state_);
            send(res, r.status, fingerprint_, std::move(r.body));
        } catch (const UnknownNode& e) {
            send(res, 404, fingerprint_, e.what());
        } catch (const std::invalid_argument& e) {
            send(res, 400, fingerprint_, e.what());
        } catch (const Error& e) {
            send(res, 422, fingerprint_, e.what());
        }
    }

    // ---- GET handlers -----------------------------------------------------

    Reply summary(const httplib::Request&, const Analysis& a, const ProjectState& p) {
        auto prof = yearly_profile(a.corpus, a.edges.edges);
        std::size_t multi = 0;
        for (const auto& c : a.clusters()) multi += c.members.size() > 1 ? 1 : 0;
        return {200,
                {{"records", a.corpus.size()},
                 {"refs", a.refs.size()},
                 {"clusters", a.clusters().size()},
                 {"multi_member_clusters", multi},
                 {"ledger_decisions", p.ledger.size()},
                 {"citation_edges", a.edges.edges.size()},
                 {"parse_warnings", p.parse_warnings.size()},
                 {"records_without_year", prof.summary.records_without_year},
                 {"refs_per_publication", detail::opt(prof.summary.refs_per_publication)},
                 {"times_cited_sum", prof.summary.times_cited_sum},
                 {"h_index", prof.summary.h_index},
                 {"threshold", detail::opt(p.settings.threshold)},
                 {"source_name", p.source_name}}};
    }

    Reply clusters(const httplib::Request& req, const Analysis& a, const ProjectState&) {
        std::optional<ClusterStatus> status;
        if (req.has_param("status") && !req.get_param_value("status").empty()) {
            status = parse_cluster_status(req.get_param_value("status"));
            if (!status) throw std::invalid_argument("status must be auto|confirmed|edited");
        }
        std::size_t min_size = 1;
        if (req.has_param("min_size")) {
            auto v = text::parse_int(req.get_param_value("min_size"));
            if (!v || *v < 1) throw std::invalid_argument("min_size must be a positive integer");
            min_size = static_cast<std::size_t>(*v);
        }
        json out = json::array();
        for (const auto& c : a.clusters())
            if ((!status || c.status == *status) && c.members.size() >= min_size) out.push_back(cluster_json(c));
        return {200, out};
    }

    Reply top(const httplib::Request& req, const Analysis& a, const ProjectState&) {
        std::int64_t min_count = 6;
        if (req.has_param("min_count")) {
            auto v = text::parse_int(req.get_param_value("min_count"));
            if (!v || *v < 1) throw std::invalid_argument("min_count must be a positive integer");
            min_count = *v;
        }
        bool raw = req.has_param("raw") && req.get_param_value("raw") == "1";
        json rows = json::array();
        for (const auto& r : top_referenced(a.refs, min_count, raw ? nullptr : &a.canonical))
            rows.push_back({{"reference", r.reference}, {"count", r.count}});
        return {200, rows};
    }

    static std::optional<YearRange> range_param(const httplib::Request& req, const ProjectState& p) {
        if (req.has_param("range") && !req.get_param_value("range").empty())
            return parse_year_range(req.get_param_value("range"));
        return p.settings.range;
    }

    Reply rpys(const httplib::Request& req, const Analysis& a, const ProjectState& p) {
        auto range = range_param(req, p);
        std::vector<CitedRef> dated;
        for (const auto& r : a.refs)
            if (r.ref_year) dated.push_back(r);
        if (dated.empty()) return {200, {{"years", json::array()}, {"undated", a.refs.size()}}};
        auto spec = spectrum(a.refs, range);
        auto dev = median_deviation(spec);

        // references behind each year, after disambiguation
        std::map<int, std::map<std::string, std::int64_t>> per_year;
        for (const auto& r : dated) {
            if (*r.ref_year < spec.first_year || *r.ref_year > spec.last_year()) continue;
            auto it = a.canonical.find(r.raw);
            ++per_year[*r.ref_year][it == a.canonical.end() ? r.raw : it->second];
        }
        json years = json::array();
        for (std::size_t i = 0; i < spec.size(); ++i) {
            int y = spec.first_year + static_cast<int>(i);
            std::vector<TopReferenced> refs;
            for (auto& [ref, c] : per_year[y]) refs.push_back({ref, c});
            std::stable_sort(refs.begin(), refs.end(), [](const auto& x, const auto& z) { return x.count > z.count; });
            json top = json::array();
            for (const auto& r : refs) top.push_back({{"reference", r.reference}, {"count", r.count}});
            years.push_back({{"year", y},
                             {"count", spec.counts[i]},
                             {"median5", dev.median[i]},
                             {"deviation", dev.deviation[i]},
                             {"references", top}});
        }
        return {200, {{"years", years}, {"undated", spec.undated}, {"out_of_range", spec.out_of_range}}};
    }

    Reply multirpys(const httplib::Request& req, const Analysis& a, const ProjectState& p) {
        auto seg = parse_segmentation(req.has_param("segments") ? req.get_param_value("segments") : p.settings.segments);
        return {200, heatmap_json(multi_rpys(a.corpus, seg, range_param(req, p)))};
    }

    Reply graph(const httplib::Request& req, const Analysis& a, const ProjectState& p) {
        std::string view = req.has_param("view") ? req.get_param_value("view") : "citation";
        std::uint64_t seed = p.settings.seed;
        if (req.has_param("seed")) {
            auto v = text::parse_int(req.get_param_value("seed"));
            if (!v || *v < 0) throw std::invalid_argument("seed must be a non-negative integer");
            seed = static_cast<std::uint64_t>(*v);
        }
        if (view == "citation") {
            auto part = louvain(undirected_view(a.graph), seed);
            auto lcs = local_citation_scores(a.corpus, a.edges.edges);
            json nodes = json::array();
            for (std::size_t i = 0; i < a.graph.node_count(); ++i) {
                const auto& n = a.graph.node(i);
                nodes.push_back({{"id", n.id},
                                 {"label", n.label},
                                 {"year", detail::opt(n.year)},
                                 {"lcs", lcs[i]},
                                 {"gcs", a.corpus.record(i).times_cited_global},
                                 {"community", part.community[i]}});
            }
            json links = json::array();
            for (const auto& arc : a.graph.arcs())
                links.push_back({{"source", a.graph.node(arc.from).id}, {"target", a.graph.node(arc.to).id}, {"weight", arc.weight}});
            return {200, {{"view", view}, {"nodes", nodes}, {"links", links}, {"q", part.q}, {"communities", part.count}}};
        }
        if (view == "coupling") {
            std::string unit = req.has_param("unit") ? req.get_param_value("unit") : "documents";
            if (unit != "documents" && unit != "authors") throw std::invalid_argument("unit must be documents|authors");
            auto cg = bibliographic_coupling(a.corpus, unit == "documents" ? CouplingUnit::documents : CouplingUnit::coauthors,
                                             &a.canonical);
            auto part = louvain(cg.weighted(), seed);
            json nodes = json::array();
            for (std::size_t i = 0; i < cg.entities.size(); ++i)
                nodes.push_back({{"id", cg.entities[i]}, {"refs", cg.ref_counts[i]}, {"community", part.community[i]}});
            json links = json::array();
            for (const auto& e : cg.edges)
                links.push_back({{"source", cg.entities[e.a]}, {"target", cg.entities[e.b]}, {"shared", e.shared}, {"weight", e.cosine}});
            return {200, {{"view", view}, {"unit", unit}, {"nodes", nodes}, {"links", links}, {"q", part.q}, {"communities", part.count}}};
        }
        throw std::invalid_argument("view must be citation|coupling");
    }

    Reply mainpath(const httplib::Request&, const Analysis& a, const ProjectState&) {
        auto w = spc_weights(a.dag.graph);
        json paths = json::array();
        for (const auto& mp : main_path(w)) {
            json ids = json::array();
            for (auto v : mp.nodes) ids.push_back(a.graph.node(v).id);
            paths.push_back({{"nodes", ids}, {"spc", mp.arc_spc}, {"total", mp.total_weight}});
        }
        json removed = json::array();
        for (const auto& r : a.dag.removed)
            removed.push_back({{"citing", a.graph.node(r.arc.from).id}, {"cited", a.graph.node(r.arc.to).id}, {"reason", r.reason}});
        return {200, {{"paths", paths}, {"total_paths", w.total_paths}, {"removed_arcs", removed}}};
    }

    Reply shortest(const httplib::Request& req, const Analysis& a, const ProjectState&) {
        if (!req.has_param("from") || !req.has_param("to")) throw std::invalid_argument("from and to are required");
        auto paths = shortest_paths(a.graph, req.get_param_value("from"), req.get_param_value("to"));
        json out = json::array();
        for (const auto& p : paths) {
            json ids = json::array();
            for (auto v : p) ids.push_back(a.graph.node(v).id);
            out.push_back(ids);
        }
        json length = paths.empty() ? json(nullptr) : json(paths.front().size() - 1);
        return {200, {{"paths", out}, {"length", length}}};
    }

    // ---- ledger mutation --------------------------------------------------

    void post_ledger(const httplib::Request& req, httplib::Response& res) {
        refresh_if_changed();
        std::unique_lock lock(mutex_);
        json body;
        Decision decision;
        try {
            body = json::parse(req.body);
            if (!body.is_object()) throw std::invalid_argument("body must be an object");
            decision = decision_from_json(body.at("decision"));
        } catch (const std::exception& e) {
            send(res, 400, fingerprint_, std::string("malformed decision: ") + e.what());
            return;
        }
        auto fp = body.find("fingerprint");
        if (fp == body.end() || !fp->is_string() || fp->get<std::string>() != fingerprint_) {
            send(res, 409, fingerprint_, "stale fingerprint; reload and retry");
            return;
        }
        auto file_lock = ProjectLock::try_acquire(path_);
        if (!file_lock) {
            send(res, 423, fingerprint_, "project is locked by another process");
            return;
        }
        try {
            // another writer may have changed the file between refresh and lock
            auto on_disk = load_project(path_);
            if (state_fingerprint(on_disk) != fingerprint_) {
                reload();
                send(res, 409, fingerprint_, "project changed on disk; reload and retry");
                return;
            }
            auto a = analysis_locked();
            if (!operands_known(a->clusters(), decision)) {
                send(res, 404, fingerprint_, "decision names an unknown reference or cluster");
                return;
            }
            if (decision.timestamp.empty()) decision.timestamp = now_iso8601();
            if (decision.actor.empty() || decision.actor == "auto") decision.actor = "user";

            ProjectState next = state_;
            next.ledger.push_back(decision);
            auto applied = apply_ledger(a->clusters(), std::span<const Decision>(&decision, 1));
            if (!applied.diagnostics.empty()) {
                send(res, 400, fingerprint_, applied.diagnostics.front());
                return;
            }
            save_project(path_, next);
            reload();
            auto fresh = analysis_locked();
            json cluster = nullptr;
            const auto& anchor = decision.operands.front();
            for (const auto& c : fresh->clusters())
                if (c.contains(anchor) || c.id == anchor) cluster = cluster_json(c);
            if (cluster.is_null() && applied.touched.front())
                cluster = cluster_json(applied.clusters[*applied.touched.front()]);
            send(res, 200, fingerprint_, {{"cluster", cluster}, {"ledger_size", state_.ledger.size()}});
        } catch (const Error& e) {
            send(res, 500, fingerprint_, e.what());
        }
    }

    std::filesystem::path path_;
    mutable std::shared_mutex mutex_;
    ProjectState state_;
    std::string fingerprint_;
    std::filesystem::file_time_type mtime_{};
    mutable std::mutex cache_mutex_;
    mutable std::shared_ptr<const Analysis> analysis_;
};

}  // namespace citehist::api
