// Pair-spec JSON ingestion and the content-addressed cache.
//
// Schema (schema_version 1): name, base_dim, a, r, sparse structure/anchor/
// splitting/connection tables with rational or polynomial coefficient
// strings, truncation N, filtration F, suite selection.  Structure entries
// fill c[i][j][k] literally (both orientations are listed in well-formed
// files, so validation can catch antisymmetry violations).  Connection
// entries are given for the B-directions of the adapted frame only;
// A-directions are always the Bott extension.

#pragma once

#include "fedosov/liepair.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fedosov {

struct PairSpec {
    std::string name;
    int schema_version = 1;
    int d = 0, a = 0, r = 0;
    std::vector<std::tuple<int, int, int, std::string>> structure; // i,j,k,c
    std::vector<std::tuple<int, int, std::string>> anchor;         // i, component, v
    std::vector<std::tuple<int, int, std::string>> splitting;      // m, k, c
    std::vector<std::tuple<int, int, int, std::string>> connection; // t,j,k,c
    int truncation = 4;
    int filtration = 4;
    std::vector<std::string> suites;
};

class SpecError : public std::runtime_error {
public:
    SpecError(const std::string& field, const std::string& what)
        : std::runtime_error("pair spec field '" + field + "': " + what), field_(field)
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline PairSpec parse_spec_json(const nlohmann::json& j)
{
    PairSpec s;
    auto need = [&](const char* key) {
        if (!j.contains(key))
            throw SpecError(key, "missing");
        return j.at(key);
    };
    s.schema_version = need("schema_version").get<int>();
    if (s.schema_version != 1)
        throw SpecError("schema_version", "unsupported version " +
                                              std::to_string(s.schema_version));
    s.name = need("name").get<std::string>();
    s.d = need("base_dim").get<int>();
    s.a = need("a").get<int>();
    s.r = need("r").get<int>();
    if (s.d < 0 || s.a < 0 || s.r < 0 || s.a + s.r == 0 || s.a + s.r > 30)
        throw SpecError("a/r/base_dim", "shape out of range");
    auto coeff = [&](const nlohmann::json& e, const std::string& field) {
        std::string str = e.at("c").get<std::string>();
        try {
            (void)poly_parse(str, s.d);
        } catch (const std::exception& ex) {
            throw SpecError(field, std::string(ex.what()));
        }
        return str;
    };
    if (j.contains("structure"))
        for (auto& e : j.at("structure")) {
            int i = e.at("i").get<int>(), jj = e.at("j").get<int>(), k = e.at("k").get<int>();
            if (i < 1 || i > s.a + s.r || jj < 1 || jj > s.a + s.r || k < 1 ||
                k > s.a + s.r)
                throw SpecError("structure", "index out of range");
            s.structure.emplace_back(i, jj, k, coeff(e, "structure.c"));
        }
    if (j.contains("anchor"))
        for (auto& e : j.at("anchor")) {
            int i = e.at("i").get<int>(), comp = e.at("component").get<int>();
            if (i < 1 || i > s.a + s.r || comp < 1 || comp > s.d)
                throw SpecError("anchor", "index out of range");
            std::string str = e.at("v").get<std::string>();
            try {
                (void)poly_parse(str, s.d);
            } catch (const std::exception& ex) {
                throw SpecError("anchor.v", std::string(ex.what()));
            }
            s.anchor.emplace_back(i, comp, str);
        }
    if (j.contains("splitting"))
        for (auto& e : j.at("splitting")) {
            int mm = e.at("m").get<int>(), k = e.at("k").get<int>();
            if (mm < 1 || mm > s.a || k < 1 || k > s.r)
                throw SpecError("splitting", "index out of range");
            s.splitting.emplace_back(mm, k, coeff(e, "splitting.c"));
        }
    if (j.contains("connection"))
        for (auto& e : j.at("connection")) {
            int t = e.at("t").get<int>(), jj = e.at("j").get<int>(), k = e.at("k").get<int>();
            if (t <= s.a || t > s.a + s.r)
                throw SpecError("connection", "direction t must index a B-frame "
                                              "element (A-directions are Bott)");
            if (jj < 1 || jj > s.r || k < 1 || k > s.r)
                throw SpecError("connection", "index out of range");
            s.connection.emplace_back(t, jj, k, coeff(e, "connection.c"));
        }
    if (j.contains("truncation"))
        s.truncation = j.at("truncation").get<int>();
    if (j.contains("filtration"))
        s.filtration = j.at("filtration").get<int>();
    if (s.truncation < 1 || s.truncation > 8 || s.filtration < 1 || s.filtration > 8)
        throw SpecError("truncation/filtration", "out of supported range 1..8");
    if (j.contains("suites"))
        for (auto& e : j.at("suites"))
            s.suites.push_back(e.get<std::string>());
    return s;
}

inline PairSpec parse_spec_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SpecError("file", "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw SpecError("json", std::string(ex.what()));
    }
    return parse_spec_json(j);
}

struct BuiltPair {
    LiePair pair;
    Splitting splitting;
    PairModel model; // valid only when validation passed
    ValidationReport validation;
};

inline BuiltPair build_pair(const PairSpec& s)
{
    BuiltPair out;
    out.pair = LiePair::zero(s.a, s.r, s.d);
    for (auto& [i, j, k, c] : s.structure)
        out.pair.c[i - 1][j - 1][k - 1] = poly_parse(c, s.d);
    for (auto& [i, comp, v] : s.anchor)
        out.pair.rho[i - 1].v[comp - 1] = poly_parse(v, s.d);
    out.splitting = Splitting::zero(out.pair);
    for (auto& [mm, k, c] : s.splitting)
        out.splitting.J[mm - 1][k - 1] = poly_parse(c, s.d);
    out.validation = validate_liepair(out.pair);
    if (out.validation.ok()) {
        std::vector gb(s.r, std::vector(s.r, std::vector(s.r, PolyCoeff(s.d))));
        for (auto& [t, j, k, c] : s.connection)
            gb[t - 1 - s.a][j - 1][k - 1] = poly_parse(c, s.d);
        out.model = make_model(out.pair, out.splitting, gb);
    }
    return out;
}

// --- content hashing and the cache ------------------------------------------------

inline std::string canonical_spec_string(const PairSpec& s)
{
    std::ostringstream os;
    os << "v1;" << s.name << ";" << s.d << ";" << s.a << ";" << s.r << ";";
    for (auto& [i, j, k, c] : s.structure)
        os << "c" << i << "," << j << "," << k << "=" << c << ";";
    for (auto& [i, comp, v] : s.anchor)
        os << "a" << i << "," << comp << "=" << v << ";";
    for (auto& [mm, k, c] : s.splitting)
        os << "s" << mm << "," << k << "=" << c << ";";
    for (auto& [t, j, k, c] : s.connection)
        os << "g" << t << "," << j << "," << k << "=" << c << ";";
    os << "N" << s.truncation << "F" << s.filtration;
    return os.str();
}

inline std::string fnv1a_hex(const std::string& data)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline std::filesystem::path cache_root()
{
    if (const char* env = std::getenv("FEDOSOV_CACHE_DIR"))
        return env;
    return ".fedosov-cache";
}

// versioned text serialization of a coset-valued PBW table
inline std::string serialize_pbw(const PbwTable& t, int a, int r)
{
    std::ostringstream os;
    os << "fedosov-pbw v1 depth " << t.depth() << "\n";
    for (auto& J : multiindices_up_to(r, t.depth())) {
        os << "J";
        for (int e : J.e)
            os << " " << e;
        os << "\n";
        for (auto& [k, c] : t.monomial_image(J).terms()) {
            os << "  b";
            for (int e : k.beta.e)
                os << " " << e;
            os << " : " << c.str() << "\n";
        }
    }
    return os.str();
}

// parses the text serialization; returns false on any malformation
inline bool deserialize_pbw(const std::string& text, int a, int r, int d, int depth,
                            std::map<MultiIndex, CosetElem>& out)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        return false;
    std::istringstream head(line);
    std::string magic, version, depthword;
    int file_depth = -1;
    head >> magic >> version >> depthword >> file_depth;
    if (magic != "fedosov-pbw" || version != "v1" || depthword != "depth" ||
        file_depth != depth)
        return false;
    MultiIndex cur;
    bool have_cur = false;
    try {
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "J") {
                cur = MultiIndex(r);
                for (int i = 0; i < r; ++i)
                    if (!(ls >> cur.e[i]))
                        return false;
                out.emplace(cur, CosetElem(a, r, d));
                have_cur = true;
            } else if (tag == "b") {
                if (!have_cur)
                    return false;
                UKey k{MultiIndex(r), MultiIndex(a)};
                for (int i = 0; i < r; ++i)
                    if (!(ls >> k.beta.e[i]))
                        return false;
                std::string colon;
                ls >> colon;
                if (colon != ":")
                    return false;
                std::string rest;
                std::getline(ls, rest);
                out.at(cur).add(k, poly_parse(rest, d));
            } else {
                return false;
            }
        }
    } catch (const std::exception&) {
        return false;
    }
    // every monomial up to the depth must be present
    for (auto& J : multiindices_up_to(r, depth))
        if (!out.count(J))
            return false;
    return true;
}

struct CacheStats {
    int hits = 0;
    int misses = 0;
    std::vector<std::string> warnings;
};

// Loads the PBW table from the content-addressed cache or builds and stores
// it.  A corrupted entry is bypassed with a warning; a loaded table is
// spot-checked on one hash-derived monomial against the recursion before use.
class PbwCache {
public:
    PbwCache(const PairSpec& spec, const UAlgebra& alg, const LConnection& conn,
             int depth, CacheStats& stats)
    {
        const PairModel& m = alg.model();
        std::string key =
            fnv1a_hex(canonical_spec_string(spec) + ";pbwdepth" + std::to_string(depth));
        auto dir = cache_root();
        auto file = dir / (key + ".pbw");
        std::error_code ec;
        if (std::filesystem::exists(file, ec)) {
            std::ifstream in(file);
            std::stringstream buf;
            buf << in.rdbuf();
            std::map<MultiIndex, CosetElem> loaded;
            if (deserialize_pbw(buf.str(), m.a, m.r, m.d, depth, loaded)) {
                PbwTable cand = PbwTable::from_cached(alg, conn, depth, std::move(loaded));
                // spot check one hash-derived monomial of positive order
                auto all = multiindices_up_to(m.r, depth);
                std::vector<MultiIndex> positive;
                for (auto& J : all)
                    if (!J.is_zero())
                        positive.push_back(J);
                bool ok = positive.empty();
                if (!positive.empty()) {
                    size_t pick = std::hash<std::string>{}(key) % positive.size();
                    ok = (cand.recompute(positive[pick]) ==
                          cand.monomial_image(positive[pick]));
                }
                if (ok) {
                    table_ = std::make_unique<PbwTable>(std::move(cand));
                    ++stats.hits;
                    return;
                }
                stats.warnings.push_back("cache entry " + key +
                                         " failed the spot check; bypassed");
            } else {
                stats.warnings.push_back("cache entry " + key + " corrupt; bypassed");
            }
        }
        ++stats.misses;
        table_ = std::make_unique<PbwTable>(alg, conn, depth);
        std::filesystem::create_directories(dir, ec);
        std::ofstream out(file);
        out << serialize_pbw(*table_, m.a, m.r);
    }

    const PbwTable& table() const { return *table_; }

private:
    std::unique_ptr<PbwTable> table_;
};

} // namespace fedosov
