#include "dalbench/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace dalbench {

ConfigError::ConfigError(std::size_t line, const std::string& what)
    : ConfigError(line, what, line > 0 ? fmt::format("line {}: {}", line, what) : what) {}

ConfigError::ConfigError(std::size_t line, std::string message, std::string full)
    : std::runtime_error(full), line_(line), message_(std::move(message)) {}

ConfigError ConfigError::in_file(const std::filesystem::path& path) const {
    const std::string where = line_ > 0 ? fmt::format("{}:{}", path.string(), line_) : path.string();
    return ConfigError(line_, message_, fmt::format("{}: {}", where, message_));
}

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>> kKeys{
    {"dataset",
     {"source", "name", "classes", "dims", "counts", "samples_per_class", "means", "grid_spacing", "stddev",
      "seed", "train_fraction", "split_seed", "noise_rate", "noise_seed", "path", "test_path"}},
    {"learner",
     {"kind", "epochs", "batch_size", "learning_rate", "momentum", "weight_decay", "cosine_decay",
      "hidden_dim", "pretrained"}},
    {"strategy", {"name", "mc_T", "dropout_rate", "cm_multiplier", "cm_cluster_count"}},
    {"protocol", {"budget_fraction", "cycles", "seeds", "metric", "collapse"}},
    {"output", {"dir"}},
};

const std::set<std::string> kMixtureOnly{"classes", "dims", "counts", "samples_per_class", "means",
                                         "grid_spacing", "stddev", "seed", "noise_rate", "noise_seed"};
const std::set<std::string> kFileOnly{"path", "test_path"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

template <typename T>
T parse_number(const Entry& e, const std::string& key) {
    T v{};
    const std::string& s = e.value;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(e.line, fmt::format("'{}' expects a number, got '{}'", key, s));
    }
    return v;
}

bool parse_bool(const Entry& e, const std::string& key) {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ConfigError(e.line, fmt::format("'{}' expects true/false, got '{}'", key, e.value));
}

class Reader {
public:
    explicit Reader(const Section& s) : s_(s) {}

    const Entry* find(const std::string& key) const {
        auto it = s_.find(key);
        return it == s_.end() ? nullptr : &it->second;
    }
    template <typename T>
    void number(const std::string& key, T& out) const {
        if (auto* e = find(key)) out = parse_number<T>(*e, key);
    }
    void boolean(const std::string& key, bool& out) const {
        if (auto* e = find(key)) out = parse_bool(*e, key);
    }

private:
    const Section& s_;
};

template <typename Fn>
auto at_line(std::size_t line, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(line, ex.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void build_dataset(const Section& sec, std::size_t section_line, const std::filesystem::path& base,
                   BenchmarkPlan& plan) {
    Reader r(sec);
    const Entry* src = r.find("source");
    const std::string source = src ? src->value : "mixture";
    if (source != "mixture" && source != "file") {
        throw ConfigError(src->line, fmt::format("unknown dataset source '{}'", source));
    }
    for (const auto& [key, e] : sec) {
        if (source == "mixture" && kFileOnly.count(key)) {
            throw ConfigError(e.line, fmt::format("key '{}' does not apply to a mixture source", key));
        }
        if (source == "file" && kMixtureOnly.count(key)) {
            throw ConfigError(e.line, fmt::format("key '{}' does not apply to a file source", key));
        }
    }
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
    r.number("train_fraction", train_fraction);
    r.number("split_seed", split_seed);

    if (source == "file") {
        const Entry* path = r.find("path");
        if (!path) throw ConfigError(section_line, "file dataset needs 'path'");
        FileSource fs;
        fs.train = resolve(base, path->value);
        if (const Entry* t = r.find("test_path")) fs.test = resolve(base, t->value);
        fs.train_fraction = train_fraction;
        fs.split_seed = split_seed;
        plan.base.data = fs;
        plan.mixture.reset();
        return;
    }

    MixtureSpec m;
    r.number("classes", m.class_count);
    r.number("dims", m.dims);
    r.number("stddev", m.class_stddev);
    r.number("seed", m.seed);
    if (m.class_count < 2) throw ConfigError(section_line, "'classes' must be >= 2");
    if (m.dims < 1) throw ConfigError(section_line, "'dims' must be >= 1");
    if (const Entry* e = r.find("counts")) {
        for (const auto& tok : split_list(e->value, ',')) {
            m.per_class_counts.push_back(parse_number<std::size_t>(Entry{tok, e->line}, "counts"));
        }
        if (r.find("samples_per_class")) {
            throw ConfigError(e->line, "use either 'counts' or 'samples_per_class'");
        }
    } else {
        std::size_t per_class = 500;
        r.number("samples_per_class", per_class);
        m.per_class_counts.assign(static_cast<std::size_t>(m.class_count), per_class);
    }
    if (const Entry* e = r.find("means")) {
        const auto rows = split_list(e->value, ';');
        m.class_means = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), m.dims);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto cols = split_list(rows[k], ',');
            if (cols.size() != static_cast<std::size_t>(m.dims)) {
                throw ConfigError(e->line, fmt::format("mean {} has {} values, expected {}", k, cols.size(),
                                                       m.dims));
            }
            for (std::size_t j = 0; j < cols.size(); ++j) {
                m.class_means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                    parse_number<double>(Entry{cols[j], e->line}, "means");
            }
        }
        if (r.find("grid_spacing")) throw ConfigError(e->line, "use either 'means' or 'grid_spacing'");
    } else {
        double spacing = 1.0;
        r.number("grid_spacing", spacing);
        m.class_means = grid_means(m.class_count, m.dims, spacing);
    }
    at_line(section_line, [&] {
        m.validate();
        return 0;
    });

    GeneratedSource gs;
    gs.mixture = m;
    gs.train_fraction = train_fraction;
    gs.split_seed = split_seed;
    r.number("noise_rate", gs.noise_rate);
    r.number("noise_seed", gs.noise_seed);
    plan.base.data = gs;
    plan.mixture = m;
}

void build_learner(const Section& sec, const std::filesystem::path& base, LearnerConfig& l) {
    Reader r(sec);
    if (const Entry* e = r.find("kind")) {
        if (e->value == "multinomial-logistic" || e->value == "logistic") {
            l.kind = LearnerKind::MultinomialLogistic;
        } else if (e->value == "nearest-centroid") {
            l.kind = LearnerKind::NearestCentroid;
        } else {
            throw ConfigError(e->line, fmt::format("unknown learner kind '{}'", e->value));
        }
    }
    r.number("epochs", l.epochs);
    r.number("batch_size", l.batch_size);
    r.number("learning_rate", l.learning_rate);
    r.number("momentum", l.momentum);
    r.number("weight_decay", l.weight_decay);
    r.boolean("cosine_decay", l.cosine_decay);
    r.number("hidden_dim", l.hidden_dim);
    if (const Entry* e = r.find("pretrained")) {
        l.pretrained = at_line(e->line, [&] {
            return std::make_shared<const ModelWeights>(load_weights(resolve(base, e->value)));
        });
    }
}

StrategyConfig build_strategy(const Section& sec, std::size_t section_line) {
    Reader r(sec);
    StrategyConfig s;
    const Entry* name = r.find("name");
    if (!name) throw ConfigError(section_line, "[strategy] needs 'name'");
    s.name = at_line(name->line, [&] { return parse_strategy(name->value); });
    r.number("mc_T", s.mc_iterations);
    r.number("dropout_rate", s.dropout_rate);
    r.number("cm_multiplier", s.cm_multiplier);
    r.number("cm_cluster_count", s.cm_cluster_count);
    at_line(section_line, [&] {
        s.validate();
        return 0;
    });
    return s;
}

void build_protocol(const Section& sec, RunConfig& cfg) {
    Reader r(sec);
    r.number("budget_fraction", cfg.budget_fraction);
    r.number("cycles", cfg.cycles);
    if (const Entry* e = r.find("seeds")) {
        cfg.seeds = at_line(e->line, [&] { return parse_seed_list(e->value); });
    }
    if (const Entry* e = r.find("metric")) {
        cfg.metric = at_line(e->line, [&] { return parse_metric(e->value); });
    }
    if (const Entry* e = r.find("collapse")) {
        std::vector<int> mapping;
        for (const auto& tok : split_list(e->value, ',')) mapping.push_back(parse_number<int>(Entry{tok, e->line}, "collapse"));
        cfg.collapse = at_line(e->line, [&] { return CollapseMap(std::move(mapping)); });
    }
}

}  // namespace

nlohmann::json Overrides::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (seeds) j["seeds"] = *seeds;
    if (!strategies.empty()) j["strategies"] = strategies;
    if (cycles) j["cycles"] = *cycles;
    if (fraction) j["fraction"] = *fraction;
    if (out_dir) j["out"] = out_dir->generic_string();
    return j;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& tok : split_list(text, ',')) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw ConfigError(0, fmt::format("bad seed '{}'", tok));
        }
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ConfigError(0, "seed list is empty");
    return seeds;
}

BenchmarkPlan parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    struct Block {
        std::string name;
        std::size_t line;
        Section entries;
    };
    std::vector<Block> blocks;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (!kKeys.count(name)) throw ConfigError(lineno, fmt::format("unknown section [{}]", name));
            if (name != "strategy") {
                for (const Block& b : blocks) {
                    if (b.name == name) throw ConfigError(lineno, fmt::format("duplicate section [{}]", name));
                }
            }
            blocks.push_back({name, lineno, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
        if (blocks.empty()) throw ConfigError(lineno, "key outside of any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        Block& b = blocks.back();
        if (!kKeys.at(b.name).count(key)) {
            throw ConfigError(lineno, fmt::format("unknown key '{}' in [{}]", key, b.name));
        }
        if (b.entries.count(key)) throw ConfigError(lineno, fmt::format("duplicate key '{}'", key));
        b.entries[key] = {value, lineno};
    }

    BenchmarkPlan plan;
    bool have_dataset = false;
    for (const Block& b : blocks) {
        if (b.name == "dataset") {
            build_dataset(b.entries, b.line, base_dir, plan);
            have_dataset = true;
        } else if (b.name == "learner") {
            build_learner(b.entries, base_dir, plan.base.learner);
        } else if (b.name == "strategy") {
            plan.strategies.push_back(build_strategy(b.entries, b.line));
        } else if (b.name == "protocol") {
            build_protocol(b.entries, plan.base);
        } else if (b.name == "output") {
            if (auto it = b.entries.find("dir"); it != b.entries.end()) {
                plan.out_dir = resolve(base_dir, it->second.value);
            }
        }
    }
    if (!have_dataset) throw ConfigError(0, "missing [dataset] section");
    return plan;
}

BenchmarkPlan load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, fmt::format("{}: cannot open config", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), path.parent_path());
    } catch (const ConfigError& e) {
        throw e.in_file(path);
    }
}

void apply_overrides(BenchmarkPlan& plan, const Overrides& o) {
    if (o.seeds) plan.base.seeds = *o.seeds;
    if (o.cycles) plan.base.cycles = *o.cycles;
    if (o.fraction) plan.base.budget_fraction = *o.fraction;
    if (o.out_dir) plan.out_dir = *o.out_dir;
    if (!o.strategies.empty()) {
        std::vector<StrategyConfig> chosen;
        for (const std::string& name : o.strategies) {
            const StrategyName n = at_line(0, [&] { return parse_strategy(name); });
            // Keep per-strategy settings from the file when present.
            auto it = std::find_if(plan.strategies.begin(), plan.strategies.end(),
                                   [&](const StrategyConfig& s) { return s.name == n; });
            StrategyConfig s;
            s.name = n;
            chosen.push_back(it != plan.strategies.end() ? *it : s);
        }
        plan.strategies = std::move(chosen);
    }
}

RunConfig config_for(const BenchmarkPlan& plan, const StrategyConfig& strategy) {
    RunConfig cfg = plan.base;
    cfg.strategy = strategy;
    return cfg;
}

}  // namespace dalbench
