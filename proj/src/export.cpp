#include "adamz/export.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace adamz {

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

const char* kPalette[9] = {"#4063d8", "#d84040", "#2a9d4e", "#b05cc6", "#e08b2d",
                           "#3aa8b8", "#8a6d3b", "#d44f8e", "#5b5ea6"};

struct Extent {
    double lo = 0.0, hi = 1.0;
};

Extent extend(std::vector<double> vals) {
    Extent e;
    if (vals.empty()) return e;
    e.lo = *std::min_element(vals.begin(), vals.end());
    e.hi = *std::max_element(vals.begin(), vals.end());
    if (e.hi - e.lo < 1e-9) {
        e.lo -= 0.5;
        e.hi += 0.5;
    }
    const double pad = 0.05 * (e.hi - e.lo);
    e.lo -= pad;
    e.hi += pad;
    return e;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// One boxplot panel (quartile boxes plus min/max whiskers) at x offset.
void boxplot_panel(std::ostream& svg, double x0, double y0, double w, double h,
                   const std::string& title, const std::vector<std::string>& names,
                   const std::vector<std::array<double, 5>>& boxes) {
    std::vector<double> all;
    for (const auto& b : boxes) {
        for (double v : b) {
            if (std::isfinite(v)) all.push_back(v);
        }
    }
    const Extent e = extend(all);
    auto Y = [&](double v) { return y0 + h - (v - e.lo) / (e.hi - e.lo) * h; };
    svg << "<text x=\"" << fmt2(x0 + w / 2) << "\" y=\"" << fmt2(y0 - 12)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    svg << "<rect x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0) << "\" width=\"" << fmt2(w)
        << "\" height=\"" << fmt2(h) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = e.lo + (e.hi - e.lo) * tick / 4.0;
        svg << "<text x=\"" << fmt2(x0 - 6) << "\" y=\"" << fmt2(Y(v) + 4)
            << "\" text-anchor=\"end\" font-size=\"10\">" << fmt2(v) << "</text>\n";
        svg << "<line x1=\"" << fmt2(x0) << "\" y1=\"" << fmt2(Y(v)) << "\" x2=\"" << fmt2(x0 + w)
            << "\" y2=\"" << fmt2(Y(v)) << "\" stroke=\"#eee\"/>\n";
    }
    const double slot = w / static_cast<double>(boxes.size());
    for (size_t i = 0; i < boxes.size(); ++i) {
        const auto& [mn, q1, med, q3, mx] = boxes[i];
        if (!std::isfinite(med)) continue;
        const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        const double bw = slot * 0.5;
        const char* color = kPalette[i % 9];
        svg << "<line x1=\"" << fmt2(cx) << "\" y1=\"" << fmt2(Y(mn)) << "\" x2=\"" << fmt2(cx)
            << "\" y2=\"" << fmt2(Y(mx)) << "\" stroke=\"" << color << "\"/>\n";
        svg << "<rect x=\"" << fmt2(cx - bw / 2) << "\" y=\"" << fmt2(Y(q3)) << "\" width=\""
            << fmt2(bw) << "\" height=\"" << fmt2(Y(q1) - Y(q3)) << "\" fill=\"" << color
            << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n";
        svg << "<line x1=\"" << fmt2(cx - bw / 2) << "\" y1=\"" << fmt2(Y(med)) << "\" x2=\""
            << fmt2(cx + bw / 2) << "\" y2=\"" << fmt2(Y(med)) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << fmt2(cx) << "\" y=\"" << fmt2(y0 + h + 14)
            << "\" text-anchor=\"middle\" font-size=\"10\" transform=\"rotate(30 " << fmt2(cx)
            << " " << fmt2(y0 + h + 14) << ")\">" << names[i] << "</text>\n";
    }
}

}  // namespace

void export_results(const std::vector<RunRecord>& records, const BenchmarkSummary& summary,
                    const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    const std::filesystem::path dir(out_dir);

    {
        auto out = open_out((dir / "summary.csv").string());
        out << "optimizer,metric,q1,median,q3\n";
        for (const auto& row : summary.rows) {
            out << row.optimizer << ",accuracy," << format_fixed(row.accuracy.q1) << ","
                << format_fixed(row.accuracy.median) << "," << format_fixed(row.accuracy.q3) << "\n";
            out << row.optimizer << ",duration," << format_fixed(row.duration.q1) << ","
                << format_fixed(row.duration.median) << "," << format_fixed(row.duration.q3) << "\n";
        }
    }
    {
        auto out = open_out((dir / "runs.csv").string());
        out << "optimizer,seed,status,accuracy,duration_seconds\n";
        for (const auto& r : records) {
            out << r.optimizer << "," << r.seed << "," << (r.failed ? "diverged" : "ok") << ",";
            if (!r.failed) out << format_fixed(r.accuracy);
            out << "," << format_fixed(r.duration_seconds) << "\n";
        }
    }
    {
        auto out = open_out((dir / "loss_curves.csv").string());
        out << "optimizer,seed,step,loss\n";
        for (const auto& r : records) {
            for (size_t s = 0; s < r.loss_series.size(); ++s) {
                out << r.optimizer << "," << r.seed << "," << s + 1 << ","
                    << format_fixed(r.loss_series[s]) << "\n";
            }
        }
    }
    const RunRecord* first_adamz = nullptr;
    for (const auto& r : records) {
        if (r.optimizer == "adamz" && !r.failed) {
            first_adamz = &r;
            break;
        }
    }
    if (first_adamz != nullptr) {
        write_lr_trace_csv(*first_adamz, (dir / "lr_trace.csv").string());
    }

    // boxplot.svg
    {
        std::vector<std::string> names;
        std::vector<std::array<double, 5>> acc_boxes, dur_boxes;
        for (const auto& row : summary.rows) {
            names.push_back(row.optimizer);
            std::vector<double> accs, durs;
            for (const auto& r : records) {
                if (r.optimizer != row.optimizer || r.failed) continue;
                accs.push_back(r.accuracy);
                durs.push_back(r.duration_seconds);
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            if (accs.empty()) {
                acc_boxes.push_back({nan, nan, nan, nan, nan});
                dur_boxes.push_back({nan, nan, nan, nan, nan});
            } else {
                acc_boxes.push_back({*std::min_element(accs.begin(), accs.end()), row.accuracy.q1,
                                     row.accuracy.median, row.accuracy.q3,
                                     *std::max_element(accs.begin(), accs.end())});
                dur_boxes.push_back({*std::min_element(durs.begin(), durs.end()), row.duration.q1,
                                     row.duration.median, row.duration.q3,
                                     *std::max_element(durs.begin(), durs.end())});
            }
        }
        auto out = open_out((dir / "boxplot.svg").string());
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"360\" "
               "font-family=\"sans-serif\">\n";
        boxplot_panel(out, 60, 40, 350, 250, "accuracy (%)", names, acc_boxes);
        boxplot_panel(out, 510, 40, 350, 250, "training duration (s)", names, dur_boxes);
        out << "</svg>\n";
    }

    // loss_curves.svg: per-optimizer median loss per step
    {
        std::vector<std::string> names;
        std::vector<std::vector<double>> curves;
        for (const auto& row : summary.rows) {
            std::vector<const RunRecord*> group;
            for (const auto& r : records) {
                if (r.optimizer == row.optimizer && !r.failed && !r.loss_series.empty()) {
                    group.push_back(&r);
                }
            }
            if (group.empty()) continue;
            const size_t steps = group[0]->loss_series.size();
            std::vector<double> median_curve(steps);
            std::vector<double> tmp;
            for (size_t s = 0; s < steps; ++s) {
                tmp.clear();
                for (const RunRecord* r : group) {
                    if (s < r->loss_series.size()) tmp.push_back(r->loss_series[s]);
                }
                median_curve[s] = percentile_nearest_rank(tmp, 0.5);
            }
            names.push_back(row.optimizer);
            curves.push_back(std::move(median_curve));
        }
        auto out = open_out((dir / "loss_curves.svg").string());
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"420\" "
               "font-family=\"sans-serif\">\n";
        std::vector<double> all;
        size_t max_steps = 1;
        for (const auto& c : curves) {
            all.insert(all.end(), c.begin(), c.end());
            max_steps = std::max(max_steps, c.size());
        }
        const Extent e = extend(all);
        const double x0 = 60, y0 = 30, w = 700, h = 340;
        auto X = [&](size_t s) {
            return x0 + w * static_cast<double>(s) / static_cast<double>(std::max<size_t>(1, max_steps - 1));
        };
        auto Y = [&](double v) { return y0 + h - (v - e.lo) / (e.hi - e.lo) * h; };
        out << "<rect x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0) << "\" width=\"" << fmt2(w)
            << "\" height=\"" << fmt2(h) << "\" fill=\"none\" stroke=\"#999\"/>\n";
        out << "<text x=\"" << fmt2(x0 + w / 2) << "\" y=\"" << fmt2(y0 + h + 30)
            << "\" text-anchor=\"middle\" font-size=\"12\">step</text>\n";
        out << "<text x=\"16\" y=\"" << fmt2(y0 + h / 2)
            << "\" font-size=\"12\" transform=\"rotate(-90 16 " << fmt2(y0 + h / 2)
            << ")\" text-anchor=\"middle\">median loss</text>\n";
        for (size_t c = 0; c < curves.size(); ++c) {
            out << "<polyline fill=\"none\" stroke=\"" << kPalette[c % 9] << "\" points=\"";
            for (size_t s = 0; s < curves[c].size(); ++s) {
                out << fmt2(X(s)) << "," << fmt2(Y(curves[c][s])) << " ";
            }
            out << "\"/>\n";
            out << "<text x=\"" << fmt2(x0 + w + 10) << "\" y=\"" << fmt2(y0 + 16.0 * static_cast<double>(c + 1))
                << "\" font-size=\"11\" fill=\"" << kPalette[c % 9] << "\">" << names[c]
                << "</text>\n";
        }
        out << "</svg>\n";
    }
}

void write_lr_trace_csv(const RunRecord& record, const std::string& path) {
    auto out = open_out(path);
    out << "step,lr,adjustment\n";
    size_t next_event = 0;
    for (size_t s = 0; s < record.lr_series.size(); ++s) {
        const char* tag = "none";
        if (next_event < record.adjustments.size() &&
            record.adjustments[next_event].step == static_cast<int>(s) + 1) {
            tag = to_string(record.adjustments[next_event].tag);
            ++next_event;
        }
        out << s + 1 << "," << format_fixed(record.lr_series[s]) << "," << tag << "\n";
    }
}

void write_trace_svg(const RunRecord& record, const std::string& path) {
    auto out = open_out(path);
    const double x0 = 60, y0 = 30, w = 760, h = 340;
    const size_t steps = record.loss_series.size();
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"430\" "
           "font-family=\"sans-serif\">\n";
    out << "<rect x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0) << "\" width=\"" << fmt2(w)
        << "\" height=\"" << fmt2(h) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    if (steps > 0) {
        auto X = [&](size_t s) {
            return x0 + w * static_cast<double>(s) / static_cast<double>(std::max<size_t>(1, steps - 1));
        };
        const Extent le = extend(record.loss_series);
        auto Yl = [&](double v) { return y0 + h - (v - le.lo) / (le.hi - le.lo) * h; };
        // lr on a log axis: adjustments are multiplicative
        std::vector<double> lr_log;
        lr_log.reserve(record.lr_series.size());
        for (double v : record.lr_series) lr_log.push_back(std::log10(v));
        const Extent re = extend(lr_log);
        auto Yr = [&](double v) { return y0 + h - (std::log10(v) - re.lo) / (re.hi - re.lo) * h; };

        out << "<polyline fill=\"none\" stroke=\"#4063d8\" points=\"";
        for (size_t s = 0; s < steps; ++s) out << fmt2(X(s)) << "," << fmt2(Yl(record.loss_series[s])) << " ";
        out << "\"/>\n";
        out << "<polyline fill=\"none\" stroke=\"#d84040\" points=\"";
        for (size_t s = 0; s < record.lr_series.size(); ++s) {
            out << fmt2(X(s)) << "," << fmt2(Yr(record.lr_series[s])) << " ";
        }
        out << "\"/>\n";
        for (const auto& ev : record.adjustments) {
            const size_t s = static_cast<size_t>(ev.step - 1);
            const char* color = ev.tag == Adjustment::overshoot ? "#a01010" : "#1a7a2a";
            out << "<circle cx=\"" << fmt2(X(s)) << "\" cy=\"" << fmt2(Yr(record.lr_series[s]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
    }
    out << "<text x=\"70\" y=\"20\" font-size=\"12\" fill=\"#4063d8\">loss</text>\n";
    out << "<text x=\"120\" y=\"20\" font-size=\"12\" fill=\"#d84040\">learning rate (log)</text>\n";
    out << "<text x=\"280\" y=\"20\" font-size=\"12\" fill=\"#a01010\">overshoot</text>\n";
    out << "<text x=\"370\" y=\"20\" font-size=\"12\" fill=\"#1a7a2a\">stagnation</text>\n";
    out << "<text x=\"" << fmt2(x0 + w / 2) << "\" y=\"" << fmt2(y0 + h + 30)
        << "\" text-anchor=\"middle\" font-size=\"12\">step</text>\n";
    out << "</svg>\n";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace adamz
