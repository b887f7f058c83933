// citehist command-line tool. Pipeline state lives in a project file between runs.
//
// Exit status: 0 success, 1 usage error, 2 data error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "citehist/analysis.hpp"
#include "citehist/api_service.hpp"
#include "citehist/io_export.hpp"
#include "citehist/project.hpp"

namespace fs = std::filesystem;
using namespace citehist;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string project;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::string range;
    std::string segments;
    std::string out;
    std::string format = "csv";
};

Globals g;

fs::path project_path() { return g.project.empty() ? default_project_path() : fs::path(g.project); }

ProjectState load_or_fresh() {
    auto p = project_path();
    if (!fs::exists(p)) return {};
    return load_project(p);
}

ProjectState load_corpus() {
    auto state = load_or_fresh();
    if (!state.has_corpus()) throw DataError("no corpus loaded (run `citehist parse <export>` first)");
    if (!g.range.empty()) state.settings.range = parse_year_range(g.range);
    if (!g.segments.empty()) state.settings.segments = g.segments;
    if (g.seed) state.settings.seed = *g.seed;
    return state;
}

ProjectLock lock_project() {
    auto lock = ProjectLock::try_acquire(project_path());
    if (!lock) throw DataError("project is locked by another process: " + project_path().string());
    return std::move(*lock);
}

void emit(const std::string& data) {
    if (g.out.empty()) {
        std::cout << data;
        std::cout.flush();
    } else {
        write_file_atomic(g.out, data);
    }
}

void report_diagnostics(const std::vector<std::string>& ds) {
    for (const auto& d : ds) std::cerr << "note: " << d << "\n";
}

void require_format(std::initializer_list<std::string_view> allowed) {
    for (auto f : allowed)
        if (g.format == f) return;
    throw UsageError("--format " + g.format + " is not available for this command");
}

// ---- commands ---------------------------------------------------------------

void cmd_parse(const std::string& file, bool check_only) {
    std::string bytes;
    try {
        bytes = read_file(file);
    } catch (const Error& e) {
        throw DataError(e.what());
    }
    auto result = parse_export(bytes);
    std::size_t refs = 0;
    for (const auto& r : result.records) refs += r.cited_refs.size();
    for (const auto& w : result.warnings) std::cerr << file << ":" << w.line << ": warning: " << w.message << "\n";

    if (!check_only) {
        auto lock = lock_project();
        auto state = load_or_fresh();
        auto fp = content_fingerprint(bytes);
        if (!state.fingerprint.empty() && state.fingerprint != fp) {
            std::cerr << "warning: export fingerprint changed (" << state.fingerprint << " -> " << fp << ")\n";
            if (!state.ledger.empty())
                std::cerr << "warning: the ledger is kept; decisions naming absent references will be skipped\n";
        }
        state.fingerprint = fp;
        state.source_name = fs::path(file).filename().string();
        state.records = std::move(result.records);
        state.parse_warnings = result.warnings;
        save_project(project_path(), state);
        std::cout << state.records.size() << " records, " << refs << " cited references, " << result.warnings.size()
                  << " warnings\n";
        return;
    }
    std::cout << result.records.size() << " records, " << refs << " cited references, " << result.warnings.size()
              << " warnings\n";
}

void cmd_stats(const std::string& table, std::size_t top, const std::string& by) {
    auto state = load_corpus();
    auto a = analyze(state);
    auto prof = yearly_profile(a.corpus, a.edges.edges);
    if (table == "profile") {
        emit(io::yearly_profile_csv(prof));
        return;
    }
    if (table == "top") {
        if (by != "lcs" && by != "gcs") throw UsageError("--by must be lcs or gcs");
        if (top == 0) throw UsageError("--top must be at least 1");
        auto layer = top_layer(a.corpus, a.edges.edges, top, by == "lcs" ? Score::lcs : Score::gcs);
        auto lcs = local_citation_scores(a.corpus, a.edges.edges);
        io::CsvWriter w({"rank", "node_id", "pub_year", "lcs", "gcs", "label"});
        for (std::size_t i = 0; i < layer.records.size(); ++i) {
            auto r = layer.records[i];
            const auto& rec = a.corpus.record(r);
            w.row({std::to_string(i + 1), rec.id, io::opt_number(rec.pub_year), std::to_string(lcs[r]),
                   std::to_string(rec.times_cited_global), a.graph.node(r).label});
        }
        emit(w.str());
        return;
    }
    if (table != "summary") throw UsageError("--table must be summary, profile or top");
    const auto& s = prof.summary;
    std::ostringstream out;
    out << "records: " << s.records << "\n"
        << "records without year: " << s.records_without_year << "\n"
        << "cited references: " << s.total_refs << "\n"
        << "cited references per record: "
        << (s.refs_per_publication ? text::format_number(*s.refs_per_publication) : "n/a") << "\n"
        << "times cited (sum): " << s.times_cited_sum << "\n"
        << "times cited (mean): " << (s.times_cited_mean ? text::format_number(*s.times_cited_mean) : "n/a") << "\n"
        << "h-index: " << s.h_index << "\n"
        << "local citations: " << s.local_citations << "\n";
    emit(out.str());
}

void cmd_disambig_auto() {
    double t = g.threshold.value_or(kDefaultThreshold);
    if (!(t > 0.0 && t <= 1.0)) throw UsageError("--threshold must be in (0, 1]");
    auto lock = lock_project();
    auto state = load_corpus();
    state.settings.threshold = t;
    auto a = analyze(state);
    report_diagnostics(a.disambiguated.diagnostics);
    save_project(project_path(), state);
    std::size_t multi = 0;
    for (const auto& c : a.clusters()) multi += c.members.size() > 1 ? 1 : 0;
    std::cout << DistinctRefs(a.refs).refs.size() << " distinct references, " << a.clusters().size() << " clusters, "
              << multi << " with variants\n";
}

void cmd_review_export() {
    auto state = load_corpus();
    auto a = analyze(state);
    double t = g.threshold.value_or(state.settings.threshold.value_or(kDefaultThreshold));
    auto candidates = review_candidates(a.refs, a.clusters(), t);
    emit(export_review_file(a.clusters(), candidates));
}

void cmd_review_import(const std::string& file) {
    auto lock = lock_project();
    auto state = load_corpus();
    DecisionLedger decisions;
    try {
        decisions = import_review_file(read_file(file), "review", now_iso8601());
    } catch (const MalformedReviewFile& e) {
        throw DataError(file + ":" + std::to_string(e.line()) + ": " + e.what());
    }
    auto a = analyze(state);
    auto clusters = a.clusters();
    for (const auto& d : decisions)
        if (!operands_known(clusters, d))
            throw DataError("review file names a reference that is not in the project: " + d.operands.front());
    auto applied = apply_ledger(clusters, decisions);
    if (!applied.diagnostics.empty()) {
        report_diagnostics(applied.diagnostics);
        throw DataError("review file could not be applied; project unchanged");
    }
    state.ledger.insert(state.ledger.end(), decisions.begin(), decisions.end());
    save_project(project_path(), state);
    std::cout << decisions.size() << " decisions recorded, " << state.ledger.size() << " in ledger\n";
}

void cmd_rpys(std::int64_t min_count) {
    auto state = load_corpus();
    auto a = analyze(state);
    if (min_count > 0) {
        emit(io::top_referenced_csv(top_referenced(a.refs, min_count, &a.canonical)));
        return;
    }
    auto spec = spectrum(a.refs, state.settings.range);
    if (spec.undated > 0) std::cerr << "note: " << spec.undated << " references without a year\n";
    if (spec.out_of_range > 0) std::cerr << "note: " << spec.out_of_range << " references outside the range\n";
    emit(io::spectrum_csv(spec, median_deviation(spec)));
}

void cmd_multi_rpys() {
    auto state = load_corpus();
    auto a = analyze(state);
    auto h = multi_rpys(a.corpus, parse_segmentation(state.settings.segments), state.settings.range);
    report_diagnostics(h.diagnostics);
    emit(io::heatmap_csv(h));
}

void cmd_graph_build() {
    require_format({"csv", "pajek"});
    auto state = load_corpus();
    auto a = analyze(state);
    report_diagnostics(a.edges.diagnostics);
    for (const auto& r : a.dag.removed)
        std::cerr << "note: arc " << a.graph.node(r.arc.from).id << " -> " << a.graph.node(r.arc.to).id
                  << " set aside: " << r.reason << "\n";
    std::cerr << a.graph.node_count() << " nodes, " << a.graph.arc_count() << " arcs, " << a.graph.components().size()
              << " components\n";
    if (g.format == "pajek") {
        emit(io::write_pajek(a.graph));
        return;
    }
    auto lcs = local_citation_scores(a.corpus, a.edges.edges);
    io::CsvWriter w({"node_id", "pub_year", "lcs", "gcs", "label"});
    for (std::size_t i = 0; i < a.graph.node_count(); ++i) {
        const auto& n = a.graph.node(i);
        w.row({n.id, io::opt_number(n.year), std::to_string(lcs[i]), std::to_string(a.corpus.record(i).times_cited_global),
               n.label});
    }
    emit(w.str());
}

void cmd_graph_mainpath() {
    require_format({"csv", "pajek"});
    auto state = load_corpus();
    auto a = analyze(state);
    auto w = spc_weights(a.dag.graph);
    auto paths = main_path(w);
    if (paths.empty()) std::cerr << "note: the citation graph has no arcs; no main path\n";
    if (paths.size() > 1) std::cerr << "note: " << paths.size() << " tied main paths\n";
    if (g.format == "csv") {
        emit(io::main_path_csv(a.graph, paths));
        return;
    }
    // subgraph of all main-path arcs, weighted by SPC
    std::vector<GraphNode> nodes;
    std::map<std::size_t, std::size_t> index;
    std::vector<Arc> arcs;
    for (const auto& p : paths)
        for (auto v : p.nodes)
            if (index.emplace(v, 0).second) nodes.push_back(a.graph.node(v));
    std::sort(nodes.begin(), nodes.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    CitationGraph tmp(nodes, {});
    for (const auto& p : paths)
        for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
            // flow runs cited -> citing; Pajek arcs keep the citing -> cited direction
            auto cited = *tmp.find(a.graph.node(p.nodes[i]).id);
            auto citing = *tmp.find(a.graph.node(p.nodes[i + 1]).id);
            arcs.push_back({citing, cited, p.arc_spc[i]});
        }
    emit(io::write_pajek(CitationGraph(nodes, arcs)));
}

void cmd_graph_communities() {
    require_format({"csv"});
    auto state = load_corpus();
    auto a = analyze(state);
    auto part = louvain(undirected_view(a.graph), state.settings.seed);
    std::cerr << part.count << " communities, Q = " << text::format_number(part.q) << "\n";
    emit(io::partition_csv(a.node_ids(), part));
}

void cmd_graph_shortest(const std::string& from, const std::string& to) {
    auto state = load_corpus();
    auto a = analyze(state);
    std::vector<std::vector<std::size_t>> paths;
    try {
        paths = shortest_paths(a.graph, from, to);
    } catch (const UnknownNode& e) {
        throw DataError(e.what());
    }
    if (paths.empty()) {
        emit("no path\n");
        return;
    }
    std::ostringstream out;
    for (const auto& p : paths) {
        for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " -> " : "") << a.graph.node(p[i]).id;
        out << "\n";
    }
    emit(out.str());
}

void cmd_coupling(CouplingUnit unit, const std::string& focal, bool exclude_focal) {
    require_format({"csv", "pajek"});
    auto state = load_corpus();
    auto a = analyze(state);
    CouplingOptions opts;
    if (!focal.empty()) {
        opts.focal_author = normalize_author(focal);
        opts.include_focal = !exclude_focal;
    }
    auto cg = bibliographic_coupling(a.corpus, unit, &a.canonical, opts);
    emit(g.format == "pajek" ? io::write_pajek(cg) : io::coupling_csv(cg));
}

void cmd_export_pajek() {
    auto state = load_corpus();
    auto a = analyze(state);
    emit(io::write_pajek(a.graph));
}

void cmd_serve(const std::string& host, int port, const std::string& ui_dir) {
    auto path = project_path();
    if (!fs::exists(path)) throw DataError("no project file at " + path.string());
    api::Service service(path);
    httplib::Server server;
    service.mount(server);
    if (!ui_dir.empty() && !server.set_mount_point("/", ui_dir)) throw DataError("cannot serve UI from " + ui_dir);
    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) throw DataError("cannot bind to " + host);
        std::cerr << "listening on http://" << host << ":" << port << "\n";
        server.listen_after_bind();
        return;
    }
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    if (!server.listen(host, port)) throw DataError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citehist: citation history analysis of Web of Science exports"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);
    app.add_option("--project", g.project, "project file (default: $CITEHIST_PROJECT_DIR/citehist.json)");
    app.add_option("--seed", g.seed, "random seed for community detection");
    app.add_option("--threshold", g.threshold, "similarity threshold for automatic clustering");
    app.add_option("--range", g.range, "referenced-year range, e.g. 1900-2015");
    app.add_option("--segments", g.segments, "per-year | bins:N | cuts:Y1,Y2,...");
    app.add_option("--out", g.out, "write data to this file instead of standard output");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "pajek"}));

    std::function<void()> action;

    auto* parse = app.add_subcommand("parse", "read a Web of Science export into the project");
    std::string export_file;
    bool check_only = false;
    parse->add_option("file", export_file, "tagged export file")->required();
    parse->add_flag("--check", check_only, "only validate; leave the project untouched");
    parse->callback([&] { action = [&] { cmd_parse(export_file, check_only); }; });

    auto* stats = app.add_subcommand("stats", "publication profile and summary indicators");
    std::string table = "summary", by = "lcs";
    std::size_t top = 30;
    stats->add_option("--table", table, "summary | profile | top");
    stats->add_option("--top", top, "size of the top layer");
    stats->add_option("--by", by, "lcs | gcs");
    stats->callback([&] { action = [&] { cmd_stats(table, top, by); }; });

    auto* disambig = app.add_subcommand("disambig", "cited-reference variant clustering");
    disambig->require_subcommand(1);
    disambig->add_subcommand("auto", "cluster variants automatically")->callback([&] { action = cmd_disambig_auto; });
    disambig->add_subcommand("review-export", "write a review file")->callback([&] { action = cmd_review_export; });
    auto* rimport = disambig->add_subcommand("review-import", "record the decisions of an edited review file");
    std::string review_file;
    rimport->add_option("file", review_file, "edited review file")->required();
    rimport->callback([&] { action = [&] { cmd_review_import(review_file); }; });

    auto* rpys = app.add_subcommand("rpys", "reference publication year spectrum");
    std::int64_t min_count = 0;
    rpys->add_option("--min-count", min_count, "list references cited at least this often instead");
    rpys->callback([&] { action = [&] { cmd_rpys(min_count); }; });

    app.add_subcommand("multi-rpys", "spectra per citing-year segment")->callback([&] { action = cmd_multi_rpys; });

    auto* graph = app.add_subcommand("graph", "citation graph analyses");
    graph->require_subcommand(1);
    graph->add_subcommand("build", "node table or network")->callback([&] { action = cmd_graph_build; });
    graph->add_subcommand("mainpath", "search-path-count main path")->callback([&] { action = cmd_graph_mainpath; });
    graph->add_subcommand("communities", "Louvain partition")->callback([&] { action = cmd_graph_communities; });
    auto* shortest = graph->add_subcommand("shortest", "all shortest paths between two records");
    std::string from, to;
    shortest->add_option("--from", from, "citing record id")->required();
    shortest->add_option("--to", to, "cited record id")->required();
    shortest->callback([&] { action = [&] { cmd_graph_shortest(from, to); }; });

    auto* coupling = app.add_subcommand("coupling", "bibliographic coupling");
    coupling->require_subcommand(1);
    std::string focal;
    bool exclude_focal = false;
    coupling->add_subcommand("docs", "between documents")->callback([&] {
        action = [&] { cmd_coupling(CouplingUnit::documents, focal, exclude_focal); };
    });
    auto* authors = coupling->add_subcommand("authors", "between co-authors");
    authors->add_option("--focal", focal, "focal author name");
    authors->add_flag("--exclude-focal", exclude_focal, "leave the focal author out");
    authors->callback([&] { action = [&] { cmd_coupling(CouplingUnit::coauthors, focal, exclude_focal); }; });

    auto* exp = app.add_subcommand("export", "export networks");
    exp->require_subcommand(1);
    exp->add_subcommand("pajek", "citation network as Pajek .net")->callback([&] { action = cmd_export_pajek; });

    auto* serve = app.add_subcommand("serve", "start the local HTTP/JSON service");
    std::string host = "127.0.0.1", ui_dir;
    int port = 8765;
    serve->add_option("--host", host, "address to bind");
    serve->add_option("--port", port, "port (0 picks a free one)");
    serve->add_option("--ui", ui_dir, "directory with the built web UI");
    serve->callback([&] { action = [&] { cmd_serve(host, port, ui_dir); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        action();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
