#pragma once

#include "tk/model.hpp"

#include <string>
#include <vector>

namespace tk {

// One document pane of the side-by-side comparison: the tokens actually
// scored (after the cap) plus the interpretability payload.
struct ExplainDocumentView {
    std::string doc_id;
    std::string label; // free-form, e.g. "input rank 9"
    std::vector<std::string> tokens;
    ExplainReport report;
};

// Query header, then per document its annotated text and kernel table
// (mu column, s^k_log column, then s_log / s_len / s rows). Words whose
// best match affiliates with a highlighted kernel carry a [mu] marker.
std::string render_explain_text(const std::string& query_id, const std::string& query_text,
                                const std::vector<double>& kernel_mus,
                                const std::vector<ExplainDocumentView>& documents);

// Same layout as a standalone HTML page; words are colored by their
// affiliation with the highlighted kernels.
std::string render_explain_html(const std::string& query_id, const std::string& query_text,
                                const std::vector<double>& kernel_mus,
                                const std::vector<ExplainDocumentView>& documents);

} // namespace tk
