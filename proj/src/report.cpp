#include "dalbench/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace dalbench {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
    out << content;
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("{}: write failed", path.string()));
}

std::string learner_kind_name(LearnerKind k) {
    return k == LearnerKind::MultinomialLogistic ? "multinomial-logistic" : "nearest-centroid";
}

nlohmann::json data_to_json(const DataSource& source) {
    return std::visit(
        [](const auto& src) -> nlohmann::json {
            using T = std::decay_t<decltype(src)>;
            nlohmann::json j;
            if constexpr (std::is_same_v<T, GeneratedSource>) {
                const auto& m = src.mixture;
                j["source"] = "mixture";
                j["classes"] = m.class_count;
                j["dims"] = m.dims;
                j["counts"] = m.per_class_counts;
                std::vector<std::vector<double>> means;
                for (Eigen::Index k = 0; k < m.class_means.rows(); ++k) {
                    means.emplace_back(m.class_means.row(k).begin(), m.class_means.row(k).end());
                }
                j["means"] = means;
                j["stddev"] = m.class_stddev;
                j["seed"] = m.seed;
                j["train_fraction"] = src.train_fraction;
                j["split_seed"] = src.split_seed;
                j["noise_rate"] = src.noise_rate;
                j["noise_seed"] = src.noise_seed;
            } else if constexpr (std::is_same_v<T, FileSource>) {
                j["source"] = "file";
                j["path"] = src.train.generic_string();
                if (src.test) j["test_path"] = src.test->generic_string();
                j["train_fraction"] = src.train_fraction;
                j["split_seed"] = src.split_seed;
            } else {
                j["source"] = "memory";
                if (src.train) j["train_name"] = src.train->name();
                if (src.test) j["test_name"] = src.test->name();
            }
            return j;
        },
        source);
}

nlohmann::json learner_to_json(const LearnerConfig& l) {
    return {{"kind", learner_kind_name(l.kind)},
            {"epochs", l.epochs},
            {"batch_size", l.batch_size},
            {"learning_rate", l.learning_rate},
            {"momentum", l.momentum},
            {"weight_decay", l.weight_decay},
            {"cosine_decay", l.cosine_decay},
            {"hidden_dim", l.hidden_dim},
            {"init", l.pretrained ? "pretrained" : "scratch"}};
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = data_to_json(cfg.data);
    j["learner"] = learner_to_json(cfg.learner);
    if (cfg.oracle_learner) j["oracle_learner"] = learner_to_json(*cfg.oracle_learner);
    j["strategy"] = {{"name", to_string(cfg.strategy.name)},
                     {"mc_T", cfg.strategy.mc_iterations},
                     {"dropout_rate", cfg.strategy.dropout_rate},
                     {"cm_multiplier", cfg.strategy.cm_multiplier},
                     {"cm_cluster_count", cfg.strategy.cm_cluster_count}};
    j["protocol"] = {{"budget_fraction", cfg.budget_fraction},
                     {"cycles", cfg.cycles},
                     {"seeds", cfg.seeds},
                     {"metric", to_string(cfg.metric)},
                     {"mode", cfg.mode == RunMode::Verification ? "verification" : "standard"}};
    if (cfg.collapse) j["protocol"]["collapse"] = cfg.collapse->mapping();
    return j;
}

ResultFiles write_results(std::span<const SuiteResult> suites, const std::filesystem::path& out_dir,
                          const nlohmann::json& provenance) {
    if (suites.empty()) throw ValidationError("no suite results to write");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error(fmt::format("{}: {}", out_dir.string(), ec.message()));

    ResultFiles files{out_dir / "curves.csv", out_dir / "labeled_hist.csv", out_dir / "queries.csv",
                      out_dir / "summary.json", out_dir / "curves.svg"};

    std::string curves = "strategy,seed,cycle,labeled_count,metric,value\n";
    std::string hist = "strategy,seed,cycle,class,count\n";
    std::string queries = "strategy,seed,cycle,rank,index\n";
    nlohmann::json summary;
    summary["config"] = config_to_json(suites.front().config);
    summary["provenance"] = provenance;
    summary["strategies"] = nlohmann::json::array();
    std::vector<Curve> mean_curves;

    for (const SuiteResult& s : suites) {
        const auto name = to_string(s.config.strategy.name);
        const auto metric = to_string(s.config.metric);
        for (const ExperimentRun& run : s.per_seed) {
            for (const CycleRecord& rec : run.cycles) {
                curves += fmt::format("{},{},{},{},{},{}\n", name, run.seed, rec.cycle, rec.labeled_count,
                                      metric, rec.metric_value);
                for (std::size_t k = 0; k < rec.per_class_labeled.size(); ++k) {
                    hist += fmt::format("{},{},{},{},{}\n", name, run.seed, rec.cycle, k,
                                        rec.per_class_labeled[k]);
                }
                for (std::size_t r = 0; r < rec.queried.indices.size(); ++r) {
                    queries += fmt::format("{},{},{},{},{}\n", name, run.seed, rec.cycle, r,
                                           rec.queried.indices[r]);
                }
            }
        }
        Curve curve = s.curve();
        nlohmann::json entry;
        entry["strategy"] = name;
        entry["metric"] = metric;
        entry["labeled_counts"] = s.labeled_counts;
        entry["mean_curve"] = s.mean_curve;
        entry["aubc"] = curve.points.size() >= 2 ? nlohmann::json(aubc(curve)) : nlohmann::json(nullptr);
        if (s.mean_oracle_metric) entry["oracle_metric"] = *s.mean_oracle_metric;
        summary["strategies"].push_back(std::move(entry));
        if (s.mean_oracle_metric && !summary.contains("oracle_metric")) {
            summary["oracle_metric"] = *s.mean_oracle_metric;
        }
        mean_curves.push_back(std::move(curve));
    }

    write_file(files.curves, curves);
    write_file(files.histogram, hist);
    write_file(files.queries, queries);
    write_file(files.summary, summary.dump(2) + "\n");
    write_file(files.plot, curves_svg(mean_curves, to_string(suites.front().config.metric)));
    return files;
}

// ---------------------------------------------------------------------------
// SVG chart

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    if (std::abs(v - std::round(v)) < 1e-9) return fmt::format("{}", static_cast<long long>(std::llround(v)));
    return fmt::format("{:.3g}", v);
}

}  // namespace

std::string curves_svg(std::span<const Curve> curves, std::string_view metric_label) {
    if (curves.empty()) throw ValidationError("no curves to render");
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const Curve& c : curves) {
        if (c.points.empty()) throw ValidationError(fmt::format("curve '{}' is empty", c.name));
        for (const CurvePoint& p : c.points) {
            x_lo = std::min(x_lo, p.labeled_count);
            x_hi = std::max(x_hi, p.labeled_count);
            y_lo = std::min(y_lo, p.value);
            y_hi = std::max(y_hi, p.value);
        }
    }
    y_lo = std::max(0.0, std::floor(y_lo * 20.0 - 1e-9) / 20.0);
    y_hi = std::min(1.0, std::ceil(y_hi * 20.0 + 1e-9) / 20.0);
    if (y_hi <= y_lo) y_hi = y_lo + 0.05;
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;

    constexpr double width = 720, height = 480;
    constexpr double left = 70, right = 170, top = 30, bottom = 60;
    constexpr double plot_w = width - left - right, plot_h = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto sy = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h; };

    std::string svg;
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        width, height, width, height);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
        plot_w, plot_h);

    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / ticks;
        const double yv = y_lo + (y_hi - y_lo) * i / ticks;
        svg += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#dddddd\"/>\n", sx(xv), top,
            sx(xv), top + plot_h);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", sx(xv),
                           top + plot_h + 18, tick_label(xv));
        svg += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#dddddd\"/>\n", left, sy(yv),
            left + plot_w, sy(yv));
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6,
                           sy(yv) + 4, yv);
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">annotated samples</text>\n",
                       left + plot_w / 2, height - 15);
    svg += fmt::format(
        "<text x=\"18\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{}</text>\n",
        top + plot_h / 2, top + plot_h / 2, xml_escape(metric_label));

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const Curve& c = curves[i];
        const char* color = kPalette[i % kPalette.size()];
        std::string pts;
        for (const CurvePoint& p : c.points) {
            if (!pts.empty()) pts += ' ';
            pts += fmt::format("{:.2f},{:.2f}", sx(p.labeled_count), sy(p.value));
        }
        svg += fmt::format(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"><title>{}</title></polyline>\n",
            color, pts, xml_escape(c.name));
        const double ly = top + 10 + 20.0 * static_cast<double>(i);
        svg += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            left + plot_w + 12, ly, left + plot_w + 36, ly, color);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + plot_w + 42, ly + 4,
                           xml_escape(c.name));
    }
    svg += "</svg>\n";
    return svg;
}

void render_curves(std::span<const Curve> curves, const std::filesystem::path& out,
                   std::string_view metric_label) {
    write_file(out, curves_svg(curves, metric_label));
}

CurveTable read_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("{}: cannot open file", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "strategy,seed,cycle,labeled_count,metric,value") {
        throw ParseError(fmt::format("{}:1: unexpected header", path.string()));
    }
    struct Acc {
        double count = 0.0;
        double sum = 0.0;
        int n = 0;
    };
    CurveTable table;
    std::vector<std::string> order;
    std::map<std::string, std::map<int, Acc>> acc;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw ParseError(fmt::format("{}:{}: expected 6 fields", path.string(), lineno));
        try {
            const int cycle = std::stoi(f[2]);
            Acc& a = acc[f[0]][cycle];
            a.count = std::stod(f[3]);
            a.sum += std::stod(f[5]);
            ++a.n;
        } catch (const std::exception&) {
            throw ParseError(fmt::format("{}:{}: malformed number", path.string(), lineno));
        }
        if (std::find(order.begin(), order.end(), f[0]) == order.end()) order.push_back(f[0]);
        if (table.metric.empty()) table.metric = f[4];
    }
    if (order.empty()) throw ParseError(fmt::format("{}: no data rows", path.string()));
    for (const std::string& name : order) {
        Curve c;
        c.name = name;
        for (const auto& [cycle, a] : acc[name]) c.points.push_back({a.count, a.sum / a.n});
        table.curves.push_back(std::move(c));
    }
    return table;
}

}  // namespace dalbench
