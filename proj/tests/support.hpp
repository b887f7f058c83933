#pragma once

// Shared helpers for the test programs: brute-force oracles, random inputs,
// temporary directories and subprocess capture. The oracles deliberately avoid
// the library's own algorithms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include "citehist/citegraph.hpp"
#include "citehist/community.hpp"
#include "citehist/corpus.hpp"
#include "citehist/ingest.hpp"

namespace testsupport {

inline std::string fixture(const std::string& name) { return std::string(CITEHIST_FIXTURES) + "/" + name; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "citehist-XXXXXX").string();
        path_ = ::mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

/// Runs the CLI with the given arguments; stdout and stderr captured separately.
inline RunResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& workdir,
                         const std::string& env = {}) {
    auto err_file = workdir / ".stderr";
    std::string cmd = "cd " + shell_quote(workdir.string()) + " && " + env + " " + shell_quote(CITEHIST_CLI);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>" + shell_quote(err_file.string());
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int st = ::pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = slurp(err_file);
    return r;
}

// ---------------------------------------------------------------------------
// Oracles

/// Median of each 5-year window, found by sorting an explicit copy of the window.
inline std::vector<double> oracle_deviation(const std::vector<std::int64_t>& counts) {
    std::vector<double> out;
    const int n = static_cast<int>(counts.size());
    for (int t = 0; t < n; ++t) {
        std::vector<std::int64_t> w;
        for (int k = t - 2; k <= t + 2; ++k)
            if (k >= 0 && k < n) w.push_back(counts[k]);
        std::sort(w.begin(), w.end());
        double med = w.size() % 2 ? double(w[w.size() / 2]) : (double(w[w.size() / 2 - 1]) + double(w[w.size() / 2])) / 2;
        out.push_back(double(counts[t]) - med);
    }
    return out;
}

/// rank(v_i)/N with ties averaged, from explicit less/equal counts.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) {
        double less = 0, equal = 0;
        for (double y : v) {
            if (y < x) ++less;
            if (y == x) ++equal;
        }
        out.push_back((less + (equal + 1) / 2) / double(v.size()));
    }
    return out;
}

inline std::int64_t oracle_h_index(const std::vector<std::int64_t>& v) {
    for (std::int64_t h = static_cast<std::int64_t>(v.size()); h > 0; --h)
        if (std::count_if(v.begin(), v.end(), [h](std::int64_t x) { return x >= h; }) >= h) return h;
    return 0;
}

/// SPC by enumerating every source-to-sink path of the flow DAG (cited -> citing).
/// Returns per citation arc (same order as g.arcs()) the number of paths using it.
inline std::vector<double> oracle_spc(const citehist::CitationGraph& g, double* total = nullptr) {
    const auto n = g.node_count();
    std::vector<std::vector<std::size_t>> out(n);  // flow successors, as arc indices
    std::vector<int> indeg(n, 0);
    for (std::size_t i = 0; i < g.arc_count(); ++i) {
        out[g.arcs()[i].to].push_back(i);
        ++indeg[g.arcs()[i].from];
    }
    std::vector<double> count(g.arc_count(), 0.0);
    double paths = 0;
    std::vector<std::size_t> stack;
    std::function<void(std::size_t)> walk = [&](std::size_t v) {
        if (out[v].empty()) {
            ++paths;
            for (auto a : stack) count[a] += 1;
            return;
        }
        for (auto a : out[v]) {
            stack.push_back(a);
            walk(g.arcs()[a].from);
            stack.pop_back();
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0 && !out[v].empty()) walk(v);
    if (total) *total = paths;
    return count;
}

/// Q from the pairwise definition: (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j).
inline double oracle_modularity(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                                const std::vector<std::size_t>& community) {
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (auto [a, b, w] : edges) {
        if (a == b) {
            A[a][a] += 2 * w;
        } else {
            A[a][b] += w;
            A[b][a] += w;
        }
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            k[i] += A[i][j];
            two_m += A[i][j];
        }
    if (two_m == 0) return 0;
    double q = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (community[i] == community[j]) q += A[i][j] - k[i] * k[j] / two_m;
    return q / two_m;
}

/// Calls f on every set partition of {0..n-1} (restricted growth strings).
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& f) {
    std::vector<std::size_t> a(n, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
        if (i == n) {
            f(a);
            return;
        }
        for (std::size_t c = 0; c <= used && c < n; ++c) {
            a[i] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    if (n == 0) f(a);
    else rec(0, 0);
}

/// All shortest undirected paths by enumerating every simple path.
inline std::vector<std::vector<std::size_t>> oracle_shortest(const citehist::CitationGraph& g, std::size_t from,
                                                             std::size_t to) {
    const auto n = g.node_count();
    std::vector<std::set<std::size_t>> nb(n);
    for (const auto& a : g.arcs()) {
        nb[a.from].insert(a.to);
        nb[a.to].insert(a.from);
    }
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> path{from};
    std::vector<bool> seen(n, false);
    seen[from] = true;
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
        if (v == to) {
            all.push_back(path);
            return;
        }
        for (auto w : nb[v])
            if (!seen[w]) {
                seen[w] = true;
                path.push_back(w);
                dfs(w);
                path.pop_back();
                seen[w] = false;
            }
    };
    dfs(from);
    if (all.empty()) return all;
    std::size_t best = SIZE_MAX;
    for (const auto& p : all) best = std::min(best, p.size());
    std::vector<std::vector<std::size_t>> out;
    for (auto& p : all)
        if (p.size() == best) out.push_back(p);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Random inputs

/// Random citation DAG: node i may cite only nodes with a smaller index (older).
inline citehist::CitationGraph random_dag(std::mt19937_64& rng, std::size_t n, double p) {
    std::vector<citehist::GraphNode> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back({"N" + std::to_string(i), 1990 + int(i), "n" + std::to_string(i)});
    std::vector<citehist::Arc> arcs;
    std::bernoulli_distribution coin(p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (coin(rng)) arcs.push_back({i, j, 1.0});
    return citehist::CitationGraph(nodes, arcs);
}

/// Random cited-reference strings built from a small vocabulary so that
/// variants of the same work collide in blocks.
inline std::vector<citehist::CitedRef> random_refs(std::mt19937_64& rng, std::size_t count) {
    static const char* authors[] = {"LOTKA AJ", "LOTKA A. J.", "PRICE DJD", "PRICE D", "SMALL H", "SMALL HG",
                                    "GARFIELD E", "GARFIELD EUGENE", "NARIN F", "HAITUN SD"};
    static const char* sources[] = {"J WASH ACAD SCI", "J WASHINGTON ACAD SC", "SCIENCE", "SCIENCE-NEW YORK",
                                    "J AM SOC INFORM SCI", "SCIENTOMETRICS", "NATURE", "EVALUATIVE BIBLIOMETR"};
    std::uniform_int_distribution<int> pick_a(0, 9), pick_s(0, 7), year(1920, 1930), vol(1, 4), page(1, 6), shape(0, 5);
    std::vector<citehist::CitedRef> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::string raw = std::string(authors[pick_a(rng)]) + ", " + std::to_string(year(rng)) + ", " + sources[pick_s(rng)];
        int s = shape(rng);
        if (s != 0) raw += ", V" + std::to_string(vol(rng));
        if (s != 1) raw += ", P" + std::to_string(page(rng) * 7);
        if (s == 5) raw = "[Anonymous], " + std::to_string(year(rng)) + ", " + sources[pick_s(rng)];
        out.push_back(citehist::parse_cited_ref(raw));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic fixtures

/// Two generations of citing papers. The early one (1985-1989) cites a 1982 work
/// heavily on top of a flat background; the late one (2000-2004) cites every
/// background year except 1982 and has its own peak in 1990.
inline citehist::Corpus haitun_corpus() {
    std::vector<citehist::DocumentRecord> docs;
    auto add = [&](int year, const std::vector<std::string>& refs) {
        citehist::DocumentRecord d;
        d.id = "H" + std::to_string(docs.size() + 1);
        d.pub_year = year;
        for (const auto& r : refs) d.cited_refs.push_back(citehist::parse_cited_ref(r));
        docs.push_back(std::move(d));
    };
    auto background = [](int from, int to, int skip) {
        std::vector<std::string> refs;
        for (int y = from; y <= to; ++y)
            if (y != skip) refs.push_back("AUTHOR" + std::to_string(y) + " X, " + std::to_string(y) + ", J BACKGROUND");
        return refs;
    };
    for (int y = 1985; y <= 1989; ++y) {
        auto refs = background(1975, 1984, 0);
        for (int k = 0; k < 6; ++k) refs.push_back("HAITUN SD, 1982, SCIENTOMETRICS, V4, P5");
        add(y, refs);
    }
    for (int y = 2000; y <= 2004; ++y) {
        auto refs = background(1975, 1995, 1982);
        for (int k = 0; k < 4; ++k) refs.push_back("LATER PEAK, 1990, J PEAK");
        add(y, refs);
    }
    return citehist::Corpus(std::move(docs));
}

/// Four spellings of one work occurring 7, 1, 1 and 1 times.
inline const std::vector<std::string>& narin_variants() {
    static const std::vector<std::string> v{"NARIN F, 1976, EVALUATIVE BIBLIOMETR", "NARIN F, 1976, EVALUATIVE BIBLIOMETRI",
                                            "NARIN F., 1976, EVALUATIVE BIBLIOMETRICS",
                                            "NARIN F, 1976, EVAL BIBLIOMETRICS USE"};
    return v;
}

inline std::vector<citehist::CitedRef> narin_refs() {
    std::vector<citehist::CitedRef> refs;
    const auto& v = narin_variants();
    for (int k = 0; k < 7; ++k) refs.push_back(citehist::parse_cited_ref(v[0]));
    for (std::size_t i = 1; i < v.size(); ++i) refs.push_back(citehist::parse_cited_ref(v[i]));
    refs.push_back(citehist::parse_cited_ref("GARFIELD E, 1955, SCIENCE, V122, P108"));
    refs.push_back(citehist::parse_cited_ref("GARFIELD E, 1955, SCIENCE, V122, P108"));
    return refs;
}

}  // namespace testsupport
