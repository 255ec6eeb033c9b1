#include "tk/report.hpp"

#include "tk/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tk {

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

bool is_highlighted(const ExplainReport& report, std::size_t token_index,
                    const std::vector<double>& kernel_mus, double& mu_out) {
    if (token_index >= report.affiliation.size()) return false;
    const double mu = kernel_mus[report.affiliation[token_index]];
    for (double h : report.highlight_centers) {
        if (h == mu) {
            mu_out = mu;
            return true;
        }
    }
    return false;
}

void append_kernel_table(std::ostringstream& out, const ExplainReport& report,
                         const std::vector<double>& kernel_mus) {
    out << "  mu      s_log\n";
    for (std::size_t k = 0; k < kernel_mus.size(); ++k) {
        out << "  " << format_double(kernel_mus[k]) << "\t" << fixed2(report.breakdown.kernel_log[k])
            << "\n";
    }
    out << "  -----\n";
    out << "  s_log\t" << fixed2(report.breakdown.s_log) << "\n";
    out << "  s_len\t" << fixed2(report.breakdown.s_len) << "\n";
    out << "  s    \t" << fixed2(report.breakdown.score) << "\n";
}

const char* kHighlightColors[] = {"#009714", "#ca4646", "#4646ca", "#ca9a46"};

std::string html_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

std::string render_explain_text(const std::string& query_id, const std::string& query_text,
                                const std::vector<double>& kernel_mus,
                                const std::vector<ExplainDocumentView>& documents) {
    std::ostringstream out;
    out << "Query (Id:" << query_id << "): " << query_text << "\n";
    for (const auto& doc : documents) {
        out << "\n=== Document " << doc.doc_id;
        if (!doc.label.empty()) out << " (" << doc.label << ")";
        out << " ===\n";
        for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
            if (t) out << " ";
            double mu = 0.0;
            if (is_highlighted(doc.report, t, kernel_mus, mu)) {
                out << doc.tokens[t] << "[" << format_double(mu) << "]";
            } else {
                out << doc.tokens[t];
            }
        }
        out << "\n";
        append_kernel_table(out, doc.report, kernel_mus);
    }
    return out.str();
}

std::string render_explain_html(const std::string& query_id, const std::string& query_text,
                                const std::vector<double>& kernel_mus,
                                const std::vector<ExplainDocumentView>& documents) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
        << "<style>\n"
        << "body { font-family: sans-serif; margin: 2em; }\n"
        << ".docs { display: flex; gap: 2em; }\n"
        << ".doc { flex: 1; }\n"
        << ".plain { color: #919195; }\n"
        << "table { border-collapse: collapse; margin-top: 1em; }\n"
        << "td, th { padding: 2px 10px; text-align: right; }\n"
        << "tr.total { border-top: 1px solid #333; }\n"
        << "</style></head><body>\n";
    out << "<h2>Query (Id:" << html_escape(query_id) << ") <em>" << html_escape(query_text)
        << "</em></h2>\n<div class=\"docs\">\n";
    for (const auto& doc : documents) {
        out << "<div class=\"doc\">\n<h3>Document " << html_escape(doc.doc_id);
        if (!doc.label.empty()) out << " (" << html_escape(doc.label) << ")";
        out << "</h3>\n<p>";
        for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
            if (t) out << " ";
            double mu = 0.0;
            if (is_highlighted(doc.report, t, kernel_mus, mu)) {
                std::size_t color = 0;
                for (std::size_t h = 0; h < doc.report.highlight_centers.size(); ++h) {
                    if (doc.report.highlight_centers[h] == mu) {
                        color = h % (sizeof(kHighlightColors) / sizeof(kHighlightColors[0]));
                        break;
                    }
                }
                out << "<span style=\"color:" << kHighlightColors[color]
                    << ";text-decoration:underline\" title=\"mu=" << format_double(mu) << "\">"
                    << html_escape(doc.tokens[t]) << "</span>";
            } else {
                out << "<span class=\"plain\">" << html_escape(doc.tokens[t]) << "</span>";
            }
        }
        out << "</p>\n<table>\n<tr><th>mu</th><th>s_log</th></tr>\n";
        for (std::size_t k = 0; k < kernel_mus.size(); ++k) {
            out << "<tr><td>" << format_double(kernel_mus[k]) << "</td><td>"
                << fixed2(doc.report.breakdown.kernel_log[k]) << "</td></tr>\n";
        }
        out << "<tr class=\"total\"><td>s_log</td><td>" << fixed2(doc.report.breakdown.s_log)
            << "</td></tr>\n";
        out << "<tr><td>s_len</td><td>" << fixed2(doc.report.breakdown.s_len) << "</td></tr>\n";
        out << "<tr class=\"total\"><td>s</td><td>" << fixed2(doc.report.breakdown.score)
            << "</td></tr>\n";
        out << "</table>\n</div>\n";
    }
    out << "</div>\n</body></html>\n";
    return out.str();
}

} // namespace tk
