#include "stressmkl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace stressmkl {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace {

// 0 -> white, 1 -> black
std::string gray(double v) {
    v = std::clamp(v, 0.0, 1.0);
    const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, g);
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string similarity_svg(const ClusteringResult& cl) {
    const auto order = cluster_order(cl);
    const int n = static_cast<int>(order.size());
    const int cell = n > 40 ? 8 : 16;
    const int margin = 90;
    const int size = margin + n * cell + 10;
    double lo = 1.0;
    for (Eigen::Index i = 0; i < cl.similarity.rows(); ++i)
        for (Eigen::Index j = 0; j < cl.similarity.cols(); ++j) lo = std::min(lo, cl.similarity(i, j));
    const double span = 1.0 - lo;

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size) + "\" height=\"" +
         std::to_string(size) + "\" viewBox=\"0 0 " + std::to_string(size) + " " + std::to_string(size) + "\">\n";
    s += "<title>Drive similarity grouped by task (T = " + std::to_string(cl.assignment.tasks) + ")</title>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const double w = cl.similarity(static_cast<Eigen::Index>(order[static_cast<std::size_t>(a)]),
                                           static_cast<Eigen::Index>(order[static_cast<std::size_t>(b)]));
            const double shade = span > 0.0 ? (w - lo) / span : 1.0;
            s += "<rect x=\"" + std::to_string(margin + b * cell) + "\" y=\"" + std::to_string(margin + a * cell) +
                 "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
                 gray(shade) + "\"><title>" + num(w) + "</title></rect>\n";
        }
    }
    for (int a = 0; a < n; ++a) {
        const std::string id = xml_escape(cl.profiles[order[static_cast<std::size_t>(a)]].drive_id);
        const int mid = margin + a * cell + cell / 2;
        s += "<text x=\"" + std::to_string(margin - 4) + "\" y=\"" + std::to_string(mid + 3) +
             "\" font-size=\"8\" text-anchor=\"end\">" + id + "</text>\n";
        s += "<text transform=\"translate(" + std::to_string(mid + 3) + "," + std::to_string(margin - 4) +
             ") rotate(-90)\" font-size=\"8\">" + id + "</text>\n";
    }
    // task blocks are contiguous in the sorted order
    int begin = 0;
    while (begin < n) {
        const int task = cl.assignment.task(cl.profiles[order[static_cast<std::size_t>(begin)]].drive_id);
        int end = begin;
        while (end < n && cl.assignment.task(cl.profiles[order[static_cast<std::size_t>(end)]].drive_id) == task) ++end;
        const int x = margin + begin * cell, w = (end - begin) * cell;
        s += "<rect class=\"cluster\" x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(x) + "\" width=\"" +
             std::to_string(w) + "\" height=\"" + std::to_string(w) +
             "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"><title>task " + std::to_string(task + 1) +
             "</title></rect>\n";
        begin = end;
    }
    s += "</svg>\n";
    return s;
}

std::string eta_heatmap_svg(const CvReport& report) {
    struct Row {
        std::string label;
        std::vector<double> eta;
    };
    std::vector<Row> rows;
    std::size_t views = 0;
    for (const auto& f : report.folds) {
        for (std::size_t t = 0; t < f.etas.size(); ++t) {
            Row r{"fold " + std::to_string(f.fold + 1) + " task " + std::to_string(t + 1), {}};
            for (Eigen::Index m = 0; m < f.etas[t].size(); ++m) r.eta.push_back(f.etas[t][m]);
            views = std::max(views, r.eta.size());
            rows.push_back(std::move(r));
        }
    }
    const std::vector<std::string> view_names{"EDA", "HR"};
    const int cell_w = 60, cell_h = 14, left = 110, top = 30;
    const int width = left + static_cast<int>(views) * cell_w + 20;
    const int height = top + static_cast<int>(rows.size()) * cell_h + 20;

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) + "\">\n";
    s += "<title>Kernel weights per fold and task</title>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (std::size_t m = 0; m < views; ++m) {
        const std::string name = m < view_names.size() ? view_names[m] : "view " + std::to_string(m + 1);
        s += "<text x=\"" + std::to_string(left + static_cast<int>(m) * cell_w + cell_w / 2) + "\" y=\"" +
             std::to_string(top - 8) + "\" font-size=\"10\" text-anchor=\"middle\">" + name + "</text>\n";
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int y = top + static_cast<int>(r) * cell_h;
        s += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + cell_h - 3) +
             "\" font-size=\"9\" text-anchor=\"end\">" + rows[r].label + "</text>\n";
        for (std::size_t m = 0; m < rows[r].eta.size(); ++m) {
            const double v = rows[r].eta[m];
            const int x = left + static_cast<int>(m) * cell_w;
            s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                 std::to_string(cell_w) + "\" height=\"" + std::to_string(cell_h) + "\" fill=\"" + gray(v) +
                 "\"><title>" + num(v) + "</title></rect>\n";
            s += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" + std::to_string(y + cell_h - 3) +
                 "\" font-size=\"9\" text-anchor=\"middle\" fill=\"" + (v > 0.5 ? "#ffffff" : "#000000") + "\">" +
                 num(v) + "</text>\n";
        }
    }
    if (rows.empty())
        s += "<text x=\"10\" y=\"" + std::to_string(top) + "\" font-size=\"10\">no kernel weights (not an mtmkl run)</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace stressmkl
