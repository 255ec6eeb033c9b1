#include "tk/text.hpp"

#include "tk/rng.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace tk {

namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_punct(char32_t cp) {
    return cp < 0x80 && std::ispunct(static_cast<int>(cp));
}

// Decodes one UTF-8 code point at `pos`; malformed bytes pass through as
// single-byte code points so no input ever fails to tokenize.
char32_t decode_utf8(std::string_view text, std::size_t& pos, std::size_t& byte_len) {
    const auto first = static_cast<unsigned char>(text[pos]);
    std::size_t len = 1;
    char32_t cp = first;
    if (first >= 0xF0) {
        len = 4;
        cp = first & 0x07u;
    } else if (first >= 0xE0) {
        len = 3;
        cp = first & 0x0Fu;
    } else if (first >= 0xC0) {
        len = 2;
        cp = first & 0x1Fu;
    }
    if (len > 1) {
        if (pos + len > text.size()) {
            byte_len = 1;
            ++pos;
            return first;
        }
        for (std::size_t i = 1; i < len; ++i) {
            const auto cont = static_cast<unsigned char>(text[pos + i]);
            if ((cont & 0xC0u) != 0x80u) {
                byte_len = 1;
                ++pos;
                return first;
            }
            cp = (cp << 6) | (cont & 0x3Fu);
        }
    }
    byte_len = len;
    pos += len;
    return cp;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        std::size_t byte_len = 0;
        const char32_t cp = decode_utf8(text, pos, byte_len);
        if (is_unicode_space(cp)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (is_ascii_punct(cp)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            tokens.emplace_back(1, static_cast<char>(cp));
            continue;
        }
        if (cp < 0x80) {
            current.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
        } else {
            current.append(text.substr(start, byte_len));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary Vocabulary::build(const std::function<bool(std::string&)>& next_document,
                             std::size_t min_occurrence) {
    if (min_occurrence < 1) {
        throw std::invalid_argument("Vocabulary::build: min_occurrence must be >= 1");
    }
    std::unordered_map<std::string, std::size_t> counts;
    std::string doc;
    while (next_document(doc)) {
        for (auto& term : tokenize(doc)) {
            ++counts[term];
        }
    }

    std::vector<std::pair<std::string, std::size_t>> retained;
    for (auto& [term, count] : counts) {
        if (count >= min_occurrence) retained.emplace_back(term, count);
    }
    std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_occurrence_ = min_occurrence;
    for (auto& [term, count] : retained) {
        (void)count;
        vocab.term_to_id_.emplace(term, static_cast<std::uint32_t>(vocab.id_to_term_.size()));
        vocab.id_to_term_.push_back(term);
    }
    return vocab;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& documents, std::size_t min_occurrence) {
    std::size_t next = 0;
    return build(
        [&](std::string& out) {
            if (next >= documents.size()) return false;
            out = documents[next++];
            return true;
        },
        min_occurrence);
}

Vocabulary Vocabulary::from_terms(const std::vector<std::string>& terms, std::size_t min_occurrence) {
    Vocabulary vocab;
    vocab.min_occurrence_ = min_occurrence;
    for (const auto& term : terms) {
        vocab.term_to_id_.emplace(term, static_cast<std::uint32_t>(vocab.id_to_term_.size()));
        vocab.id_to_term_.push_back(term);
    }
    return vocab;
}

std::uint32_t Vocabulary::id(const std::string& term) const {
    auto it = term_to_id_.find(term);
    return it == term_to_id_.end() ? kOovId : it->second;
}

bool Vocabulary::contains(const std::string& term) const {
    return term_to_id_.find(term) != term_to_id_.end();
}

const std::string& Vocabulary::term(std::uint32_t id) const {
    if (id >= id_to_term_.size()) {
        throw std::out_of_range("Vocabulary::term: id " + std::to_string(id) + " out of range");
    }
    return id_to_term_[id];
}

std::vector<std::string> Vocabulary::retained_terms() const {
    return {id_to_term_.begin() + 2, id_to_term_.end()};
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::mt19937_64& rng) {
    EmbeddingTable table;
    table.dim = dim;
    table.vectors = Tensor(vocab.size(), dim);
    for (std::size_t row = 1; row < vocab.size(); ++row) {
        for (std::size_t c = 0; c < dim; ++c) {
            table.vectors.at(row, c) = uniform_draw(rng, -0.05, 0.05);
        }
    }
    return table;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                               std::mt19937_64& rng) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);

    std::unordered_map<std::string, std::vector<double>> file_vectors;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string term;
        fields >> term;
        std::vector<double> vec;
        double v = 0.0;
        while (fields >> v) vec.push_back(v);
        if (!fields.eof()) {
            throw std::runtime_error("load_embeddings: " + path + ":" + std::to_string(line_number) +
                                     ": non-numeric value");
        }
        if (vec.size() != dim) {
            throw std::runtime_error("load_embeddings: " + path + ":" + std::to_string(line_number) +
                                     ": expected " + std::to_string(dim) + " values, found " +
                                     std::to_string(vec.size()));
        }
        file_vectors[term] = std::move(vec);
    }

    EmbeddingTable table;
    table.dim = dim;
    table.vectors = Tensor(vocab.size(), dim);
    // Fixed row order keeps the seeded draws for missing terms reproducible.
    for (std::size_t row = 1; row < vocab.size(); ++row) {
        const std::vector<double>* from_file = nullptr;
        if (row >= 2) {
            auto it = file_vectors.find(vocab.term(static_cast<std::uint32_t>(row)));
            if (it != file_vectors.end()) from_file = &it->second;
        }
        if (from_file) {
            for (std::size_t c = 0; c < dim; ++c) table.vectors.at(row, c) = (*from_file)[c];
        } else {
            for (std::size_t c = 0; c < dim; ++c) {
                table.vectors.at(row, c) = uniform_draw(rng, -0.05, 0.05);
            }
        }
    }
    return table;
}

TokenSequence encode_sequence(const std::string& text, const Vocabulary& vocab, std::size_t cap) {
    if (cap < 1) throw std::invalid_argument("encode_sequence: cap must be >= 1");
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
        throw EmptyTextError("encode_sequence: text tokenizes to zero tokens");
    }
    TokenSequence seq;
    seq.cap = cap;
    seq.true_length = std::min(tokens.size(), cap);
    seq.ids.reserve(seq.true_length);
    for (std::size_t i = 0; i < seq.true_length; ++i) {
        seq.ids.push_back(vocab.id(tokens[i]));
    }
    return seq;
}

TokenSequence pad_sequence(TokenSequence seq, std::size_t length) {
    while (seq.ids.size() < length) seq.ids.push_back(Vocabulary::kPadId);
    return seq;
}

std::vector<std::pair<std::string, std::string>> load_tsv_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tsv_pairs: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": expected key<TAB>text");
        }
        rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return rows;
}

std::vector<TripleText> load_triples_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_triples_tsv: cannot open " + path);
    std::vector<TripleText> rows;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": expected query<TAB>positive<TAB>negative");
        }
        rows.push_back({line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                        line.substr(tab2 + 1)});
    }
    return rows;
}

} // namespace tk
