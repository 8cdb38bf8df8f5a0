#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "fcdbn/io.hpp"

namespace fcdbn {

namespace {

constexpr std::string_view kManifestHeader = "path_a,path_b,label,relation,subject_a,subject_b";
constexpr std::string_view kScoresHeader = "s,genuine,k,kin";
constexpr std::string_view kCountsHeader = "group,kk,kn,nk,nn";

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = line.find(sep, start);
        out.emplace_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::vector<std::string> tokens(const std::string& field) {
    std::vector<std::string> out;
    std::istringstream ss(field);
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

// Lines without trailing '\r'; blank lines are dropped but keep their numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t n = 0;
    for (std::string& l : split(text, '\n')) {
        ++n;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        if (!l.empty()) out.emplace_back(n, std::move(l));
    }
    return out;
}

[[noreturn]] void bad_line(const std::string& name, std::size_t line, const std::string& what) {
    fail(Errc::parse, name + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& s, const std::string& name, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        bad_line(name, line, "'" + s + "' is not a finite number");
    return v;
}

std::uint64_t parse_count(const std::string& s, const std::string& name, std::size_t line) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        bad_line(name, line, "'" + s + "' is not a non-negative integer");
    errno = 0;
    const auto v = std::strtoull(s.c_str(), nullptr, 10);
    if (errno == ERANGE) bad_line(name, line, "count out of range");
    return v;
}

int parse_flag(const std::string& s, const std::string& name, std::size_t line) {
    if (s == "1") return 1;
    if (s == "0") return 0;
    bad_line(name, line, "expected 0 or 1, got '" + s + "'");
}

}  // namespace

std::string manifest_csv(std::span<const KinPair> pairs) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const KinPair& p : pairs) {
        for (const std::string* f : {&p.image_a, &p.image_b, &p.subject_a, &p.subject_b})
            require(f->find_first_of(",\n\r") == std::string::npos, Errc::invalid_parameter,
                    "manifest fields may not contain commas or newlines");
        out += p.image_a + ',' + p.image_b + ',' + (p.label ? "kin" : "nonkin") + ',' + to_string(p.relation) + ',' +
               p.subject_a + ',' + p.subject_b + '\n';
    }
    return out;
}

std::vector<KinPair> parse_manifest(std::string_view text, const std::string& name) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front().second != kManifestHeader)
        fail(Errc::parse, name + ": manifest header must be exactly '" + std::string(kManifestHeader) + "'");
    std::vector<KinPair> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [n, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != 6) bad_line(name, n, "expected 6 fields, got " + std::to_string(f.size()));
        KinPair p;
        p.image_a = f[0];
        p.image_b = f[1];
        if (f[2] == "kin")
            p.label = 1;
        else if (f[2] == "nonkin")
            p.label = 0;
        else
            bad_line(name, n, "label must be kin or nonkin, got '" + f[2] + "'");
        try {
            p.relation = relation_from_string(f[3]);
        } catch (const Error& e) {
            bad_line(name, n, e.what());
        }
        p.subject_a = f[4];
        p.subject_b = f[5];
        if (p.image_a.empty() || p.image_b.empty() || p.subject_a.empty() || p.subject_b.empty())
            bad_line(name, n, "empty path or subject field");
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<KinPair> read_manifest(const std::string& path) { return parse_manifest(read_file(path), path); }

std::string scores_csv(std::span<const ScoreRecord> records) {
    std::string out(kScoresHeader);
    out += '\n';
    for (const ScoreRecord& r : records) {
        out += format_double(r.s) + ',' + std::to_string(r.genuine) + ',';
        for (std::size_t i = 0; i < r.k.size(); ++i) out += (i ? " " : "") + format_double(r.k[i]);
        out += ',';
        for (std::size_t i = 0; i < r.kin.size(); ++i) out += (i ? " " : "") + std::to_string(r.kin[i]);
        out += '\n';
    }
    return out;
}

std::vector<ScoreRecord> parse_scores(std::string_view text, const std::string& name) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front().second != kScoresHeader)
        fail(Errc::parse, name + ": score header must be exactly '" + std::string(kScoresHeader) + "'");
    std::vector<ScoreRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [n, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != 4) bad_line(name, n, "expected 4 fields, got " + std::to_string(f.size()));
        ScoreRecord r;
        r.s = parse_real(f[0], name, n);
        r.genuine = parse_flag(f[1], name, n);
        for (const std::string& t : tokens(f[2])) r.k.push_back(parse_real(t, name, n));
        for (const std::string& t : tokens(f[3])) r.kin.push_back(parse_flag(t, name, n));
        if (r.k.size() != r.kin.size()) bad_line(name, n, "kin scores and kin labels differ in count");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::pair<std::string, ConfusionCounts>> parse_counts(std::string_view text, const std::string& name) {
    const auto lines = lines_of(text);
    if (lines.empty()) fail(Errc::parse, name + ": no counts");
    std::vector<std::pair<std::string, ConfusionCounts>> out;
    if (lines.front().second == kCountsHeader) {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto& [n, line] = lines[i];
            const auto f = split(line, ',');
            if (f.size() != 5) bad_line(name, n, "expected 5 fields, got " + std::to_string(f.size()));
            ConfusionCounts c;
            c.counts = {{{parse_count(f[1], name, n), parse_count(f[2], name, n)},
                         {parse_count(f[3], name, n), parse_count(f[4], name, n)}}};
            if (c.total() == 0) bad_line(name, n, "all counts are zero");
            out.emplace_back(f[0], c);
        }
        if (out.empty()) fail(Errc::parse, name + ": header without rows");
        return out;
    }
    if (lines.size() != 2) fail(Errc::parse, name + ": expected a header 'group,kk,kn,nk,nn' or two rows of counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& [n, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != 2) bad_line(name, n, "expected 2 counts, got " + std::to_string(f.size()));
        c.counts[i] = {parse_count(f[0], name, n), parse_count(f[1], name, n)};
    }
    if (c.total() == 0) fail(Errc::parse, name + ": all counts are zero");
    out.emplace_back("all", c);
    return out;
}

}  // namespace fcdbn
