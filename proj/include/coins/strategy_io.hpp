#pragma once

// Strategy serialization, graph export, and the persistent base-strategy
// cache.
//
// The on-disk format is versioned JSON with one record per tree node:
// internal nodes carry "weigh" plus the three children "gt"/"eq"/"lt"
// (left-heavier, balanced, right-heavier); leaves are "leaf" with the decided
// configuration or "contradiction". Strategies double as publishable
// artifacts, hence a text format that diffs cleanly.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "coins/model.hpp"
#include "coins/verify.hpp"

namespace coins {

inline constexpr int kStrategyFormatVersion = 1;

namespace detail {

inline void write_coins(std::ostream& os, const std::vector<CoinId>& pan) {
    os << '[';
    for (std::size_t i = 0; i < pan.size(); ++i) {
        if (i) os << ',';
        os << '[' << pan[i].set << ',' << pan[i].index << ']';
    }
    os << ']';
}

inline void write_node(std::ostream& os, const StrategyNode& n, int indent) {
    std::string pad(indent, ' ');
    switch (n.kind) {
        case StrategyNode::Kind::Decide: {
            os << pad << "{\"leaf\": [";
            for (std::size_t i = 0; i < n.decided.fakes.size(); ++i) {
                if (i) os << ',';
                os << n.decided.fakes[i];
            }
            os << "]}";
            return;
        }
        case StrategyNode::Kind::Contradiction:
            os << pad << "{\"contradiction\": true}";
            return;
        case StrategyNode::Kind::Weigh: {
            os << pad << "{\n";
            os << pad << " \"weigh\": {\"left\": ";
            write_coins(os, n.weighing.left);
            os << ", \"right\": ";
            write_coins(os, n.weighing.right);
            os << "},\n";
            const char* keys[3] = {"gt", "eq", "lt"};
            for (int i = 0; i < 3; ++i) {
                os << pad << " \"" << keys[i] << "\":\n";
                write_node(os, *n.child[i], indent + 2);
                os << (i < 2 ? ",\n" : "\n");
            }
            os << pad << "}";
            return;
        }
    }
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline std::unique_ptr<StrategyNode> node_from_json(const nlohmann::json& j, const Instance& inst,
                                                    const std::string& path) {
    if (!j.is_object())
        throw ParseError("strategy node at " + path + " is not an object");
    if (j.contains("leaf")) {
        Configuration c;
        for (const auto& v : j.at("leaf")) c.fakes.push_back(v.get<std::uint32_t>());
        validate_config(inst, c);
        return make_decide(std::move(c));
    }
    if (j.contains("contradiction")) {
        if (!j.at("contradiction").get<bool>())
            throw ParseError("strategy node at " + path + ": contradiction must be true");
        return make_contradiction();
    }
    if (!j.contains("weigh"))
        throw ParseError("strategy node at " + path + " has none of weigh/leaf/contradiction");
    const auto& jw = j.at("weigh");
    Weighing w;
    auto read_pan = [&](const char* key, std::vector<CoinId>& pan) {
        for (const auto& v : jw.at(key)) {
            if (!v.is_array() || v.size() != 2)
                throw ParseError("coin at " + path + "/weigh/" + key + " must be [set,index]");
            pan.push_back({v[0].get<std::uint32_t>(), v[1].get<std::uint32_t>()});
        }
    };
    read_pan("left", w.left);
    read_pan("right", w.right);
    validate_weighing(inst, w);
    const char* keys[3] = {"gt", "eq", "lt"};
    std::array<std::unique_ptr<StrategyNode>, 3> kids;
    for (int i = 0; i < 3; ++i) {
        if (!j.contains(keys[i]))
            throw ParseError("strategy node at " + path + " is missing child \"" + keys[i] +
                             "\"");
        kids[i] = node_from_json(j.at(keys[i]), inst, path + "/" + keys[i]);
    }
    return make_weigh(std::move(w), std::move(kids[0]), std::move(kids[1]), std::move(kids[2]));
}

} // namespace detail

inline void save(const Strategy& s, std::ostream& os) {
    validate_strategy(s);
    os << "{\n\"format_version\": " << kStrategyFormatVersion << ",\n";
    os << "\"instance\": [";
    for (std::size_t i = 0; i < s.instance.sizes.size(); ++i) {
        if (i) os << ',';
        os << s.instance.sizes[i];
    }
    os << "],\n\"tree\":\n";
    detail::write_node(os, *s.root, 0);
    os << "\n}\n";
    if (!os) throw IoError("failed writing strategy");
}

inline std::string save_to_string(const Strategy& s) {
    std::ostringstream os;
    save(s, os);
    return os.str();
}

inline void save_file(const Strategy& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    save(s, out);
}

inline Strategy load_from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("strategy file is not valid JSON (line " +
                         std::to_string(detail::line_of_offset(text, e.byte)) +
                         "): " + e.what());
    }
    try {
        if (!j.is_object() || !j.contains("format_version"))
            throw ParseError("strategy file has no format_version");
        int version = j.at("format_version").get<int>();
        if (version != kStrategyFormatVersion)
            throw ParseError("unsupported format_version " + std::to_string(version) +
                             " (expected " + std::to_string(kStrategyFormatVersion) + ")");
        Instance inst;
        for (const auto& v : j.at("instance")) inst.sizes.push_back(v.get<std::uint32_t>());
        inst.validate();
        auto root = detail::node_from_json(j.at("tree"), inst, "tree");
        Strategy s(std::move(inst), std::move(root));
        validate_strategy(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed strategy file: ") + e.what());
    }
}

inline Strategy load(std::istream& is) {
    std::ostringstream buf;
    buf << is.rdbuf();
    return load_from_string(buf.str());
}

inline Strategy load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return load(in);
}

/// Graphviz DOT export: one node per tree node, edges labeled +/0/-, internal
/// nodes labeled with the two pans, leaves with the decided configuration.
inline void export_graph(const Strategy& s, std::ostream& os) {
    validate_strategy(s);
    os << "digraph strategy {\n";
    os << "  node [fontname=\"monospace\"];\n";
    int next_id = 0;
    auto emit = [&](auto&& self, const StrategyNode& n) -> int {
        int id = next_id++;
        switch (n.kind) {
            case StrategyNode::Kind::Decide:
                os << "  n" << id << " [label=\"fakes " << n.decided.to_string() << "\"];\n";
                break;
            case StrategyNode::Kind::Contradiction:
                os << "  n" << id << " [label=\"contradiction\" shape=octagon];\n";
                break;
            case StrategyNode::Kind::Weigh: {
                auto pan = [](const std::vector<CoinId>& coins) {
                    std::string out;
                    for (std::size_t i = 0; i < coins.size(); ++i) {
                        if (i) out += ' ';
                        out += coins[i].to_string();
                    }
                    return out;
                };
                os << "  n" << id << " [shape=box label=\"" << pan(n.weighing.left) << " vs "
                   << pan(n.weighing.right) << "\"];\n";
                const char* labels[3] = {"+", "0", "-"};
                for (int i = 0; i < 3; ++i) {
                    int kid = self(self, *n.child[i]);
                    os << "  n" << id << " -> n" << kid << " [label=\"" << labels[i] << "\"];\n";
                }
                break;
            }
        }
        return id;
    };
    emit(emit, *s.root);
    os << "}\n";
    if (!os) throw IoError("failed writing graph");
}

inline void export_graph_file(const Strategy& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    export_graph(s, out);
}

namespace detail {

// Stable permutation sorting the sizes descending: perm[old_set] = new_set.
inline std::vector<std::uint32_t> normalization_perm(const Instance& inst) {
    std::vector<std::uint32_t> order(inst.set_count());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return inst.sizes[a] > inst.sizes[b];
    });
    std::vector<std::uint32_t> perm(inst.set_count());
    for (std::uint32_t new_set = 0; new_set < order.size(); ++new_set)
        perm[order[new_set]] = new_set;
    return perm;
}

inline std::unique_ptr<StrategyNode> permute_sets(const StrategyNode& n,
                                                  const std::vector<std::uint32_t>& perm) {
    auto out = std::make_unique<StrategyNode>();
    out->kind = n.kind;
    switch (n.kind) {
        case StrategyNode::Kind::Decide:
            out->decided.fakes.resize(n.decided.fakes.size());
            for (std::size_t i = 0; i < n.decided.fakes.size(); ++i)
                out->decided.fakes[perm[i]] = n.decided.fakes[i];
            break;
        case StrategyNode::Kind::Contradiction:
            break;
        case StrategyNode::Kind::Weigh:
            out->weighing = n.weighing;
            for (auto& c : out->weighing.left) c.set = perm[c.set];
            for (auto& c : out->weighing.right) c.set = perm[c.set];
            for (int i = 0; i < 3; ++i) out->child[i] = permute_sets(*n.child[i], perm);
            break;
    }
    return out;
}

inline Strategy permute_strategy(const Strategy& s, const std::vector<std::uint32_t>& perm) {
    Instance inst;
    inst.sizes.resize(s.instance.sizes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inst.sizes[perm[i]] = s.instance.sizes[i];
    return Strategy(std::move(inst), permute_sets(*s.root, perm));
}

} // namespace detail

/// Directory of verified strategies, one file per normalized instance
/// (sizes sorted descending, e.g. "s20x4.strategy"). Entries are verified on
/// write and re-verified on read; a corrupt or incomplete entry is evicted
/// rather than returned. Writers take an advisory per-entry lock and publish
/// with an atomic rename, so concurrent readers only ever see whole files.
class StrategyCache {
  public:
    explicit StrategyCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path entry_path(const Instance& inst) const {
        auto sizes = normalized_sizes(inst);
        std::string name = "s";
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (i) name += 'x';
            name += std::to_string(sizes[i]);
        }
        return dir_ / (name + ".strategy");
    }

    /// Stores a complete strategy under its normalized instance.
    void put(const Strategy& s) {
        auto report = exhaustive_verify(s);
        if (!report.complete)
            throw ValidationError("cache: refusing to store an incomplete strategy for [" +
                                  s.instance.to_string() + "]");
        Strategy normalized = detail::permute_strategy(s, detail::normalization_perm(s.instance));

        auto path = entry_path(s.instance);
        auto lock_path = path.string() + ".lock";
        int lock_fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (lock_fd >= 0) ::flock(lock_fd, LOCK_EX);
        auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
        try {
            save_file(normalized, tmp);
            std::filesystem::rename(tmp, path);
        } catch (...) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            if (lock_fd >= 0) ::close(lock_fd);
            throw;
        }
        if (lock_fd >= 0) ::close(lock_fd);
    }

    /// Loads, re-verifies, and remaps the entry onto the requested set order.
    /// Returns nothing on a miss; evicts and reports corrupt entries.
    std::optional<Strategy> get(const Instance& inst, std::string* note = nullptr) {
        auto path = entry_path(inst);
        if (!std::filesystem::exists(path)) return std::nullopt;
        try {
            Strategy stored = load_file(path);
            if (!(Instance(normalized_sizes(inst)) == stored.instance))
                throw ValidationError("entry instance does not match its file name");
            auto report = exhaustive_verify(stored);
            if (!report.complete) throw ValidationError("entry fails exhaustive verification");
            // Remap normalized set order back onto the requested order.
            auto perm = detail::normalization_perm(inst); // old -> normalized
            std::vector<std::uint32_t> inverse(perm.size());
            for (std::uint32_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
            return detail::permute_strategy(stored, inverse);
        } catch (const Error& e) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
            if (note) *note = "evicted corrupt cache entry " + path.string() + ": " + e.what();
            return std::nullopt;
        }
    }

  private:
    std::filesystem::path dir_;
};

} // namespace coins
