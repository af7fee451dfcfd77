#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cdp/evaluation.hpp"
#include "cdp/io.hpp"
#include "cdp/svg.hpp"

namespace cdp::io {

/// One row per run x (printer, fake) cell x metric.
inline std::string runs_csv(const EvalReport& rep) {
    std::string s = "seed,printer,fake,metric,auc,threshold,test_accuracy,mu,fallbacks\n";
    for (const auto& r : rep.runs)
        s += std::to_string(r.seed) + "," + r.printer + "," + r.fake.short_label() + "," + std::string(to_string(r.metric)) +
             "," + fmt_double(r.auc) + "," + fmt_double(r.threshold) + "," + fmt_double(r.test_accuracy) + "," +
             fmt_double(r.mu) + "," + std::to_string(r.fallbacks) + "\n";
    return s;
}

/// Metric rows; columns are the 8 (printer, fake) cells, the per-printer
/// averages and the total, as mean AUC over runs.
inline std::string auc_table_csv(const EvalReport& rep) {
    std::string s = "metric";
    for (char p : kPrinters) {
        for (const auto& f : kFakeTypes) s += std::string(",x") + p + " " + f.short_label();
        s += std::string(",x") + p + " avg";
    }
    s += ",total\n";
    for (MetricId m : rep.metrics) {
        s += std::string(to_string(m));
        for (char p : kPrinters) {
            for (const auto& c : rep.cells)
                if (c.printer == p && c.metric == m) s += "," + fmt_double(c.auc_mean);
            s += "," + fmt_double(rep.printer_average.at({p, m}));
        }
        s += "," + fmt_double(rep.total_average.at(m)) + "\n";
    }
    return s;
}

inline json summary_json(const EvalReport& rep) {
    json cells = json::array();
    for (const auto& c : rep.cells)
        cells.push_back({{"printer", std::string(1, c.printer)},
                         {"fake", c.fake.short_label()},
                         {"metric", std::string(to_string(c.metric))},
                         {"auc_mean", c.auc_mean},
                         {"auc_std", c.auc_std}});
    json totals = json::object(), printers = json::object();
    for (MetricId m : rep.metrics) {
        const std::string name(to_string(m));
        totals[name] = rep.total_average.at(m);
        for (char p : kPrinters) printers[std::string(1, p)][name] = rep.printer_average.at({p, m});
    }
    return {{"cells", cells}, {"printer_average", printers}, {"total_average", totals}};
}

inline std::string roc_csv(const EvalReport& rep) {
    std::string s = "printer,fake,metric,fpr,tpr,threshold\n";
    for (const auto& [key, curve] : rep.roc) {
        const auto& [p, f, m] = key;
        for (const auto& pt : curve)
            s += std::string(1, p) + "," + kFakeTypes[static_cast<std::size_t>(f)].short_label() + "," +
                 std::string(to_string(m)) + "," + fmt_double(pt.fpr) + "," + fmt_double(pt.tpr) + "," +
                 fmt_double(pt.threshold) + "\n";
    }
    return s;
}

/// ROC curves of printer p under one metric, one series per fake type.
inline std::string roc_svg(const EvalReport& rep, char p, MetricId m) {
    std::vector<svg::Series> series;
    for (std::size_t f = 0; f < kFakeTypes.size(); ++f) {
        const auto it = rep.roc.find({p, static_cast<int>(f), m});
        if (it == rep.roc.end()) continue;
        svg::Series s{kFakeTypes[f].label(), {}, {}};
        for (const auto& pt : it->second) s.points.emplace_back(pt.fpr, pt.tpr);
        series.push_back(std::move(s));
    }
    return svg::line_plot({std::string("ROC ") + std::string(to_string(m)) + ", originals x" + p, "FPR", "TPR"}, series);
}

inline std::string stability_csv(const std::vector<StabilityPoint>& curve) {
    std::string s = "size,mean_d1,std_d1\n";
    for (const auto& pt : curve)
        s += std::to_string(pt.size) + "," + fmt_double(pt.mean_d1) + "," + fmt_double(pt.std_d1) + "\n";
    return s;
}

inline std::string stability_svg(const std::vector<StabilityPoint>& curve) {
    svg::Series s{"mean d1", {}, {}};
    double xmax = 1.0, ymax = 0.0;
    for (const auto& pt : curve) {
        s.points.emplace_back(static_cast<double>(pt.size), pt.mean_d1);
        s.error.push_back(pt.std_d1);
        xmax = std::max(xmax, static_cast<double>(pt.size));
        ymax = std::max(ymax, pt.mean_d1 + pt.std_d1);
    }
    return svg::line_plot({"Codebook variability vs training size", "training pairs", "d1 to reference", 0.0, xmax,
                           0.0, ymax > 0 ? ymax * 1.1 : 1.0},
                          {s});
}

/// Writes runs.csv, auc_table.csv, summary.json, roc.csv and ROC plots.
inline std::vector<fs::path> write_eval_report(const fs::path& dir, const EvalReport& rep) {
    fs::create_directories(dir);
    std::vector<fs::path> written{dir / "runs.csv", dir / "auc_table.csv", dir / "summary.json", dir / "roc.csv"};
    write_file(written[0], runs_csv(rep));
    write_file(written[1], auc_table_csv(rep));
    write_json(written[2], summary_json(rep));
    write_file(written[3], roc_csv(rep));
    for (char p : kPrinters)
        for (MetricId m : rep.metrics) {
            std::string name = std::string("roc_x") + p + "_" + std::string(to_string(m)) + ".svg";
            written.push_back(dir / name);
            write_file(written.back(), roc_svg(rep, p, m));
        }
    return written;
}

}  // namespace cdp::io
