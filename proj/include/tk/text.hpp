#pragma once

#include "tk/tensor.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tk {

// Lowercases, splits on Unicode whitespace, and breaks ASCII punctuation
// out into standalone tokens. Never returns empty tokens.
std::vector<std::string> tokenize(std::string_view text);

struct EmptyTextError : std::runtime_error {
    explicit EmptyTextError(const std::string& what) : std::runtime_error(what) {}
};

class Vocabulary {
public:
    static constexpr std::uint32_t kPadId = 0;
    static constexpr std::uint32_t kOovId = 1;

    Vocabulary() = default;

    // Counts terms across the document stream and keeps those that occur at
    // least `min_occurrence` times. Ids are dense from 2, assigned in
    // descending frequency order with lexicographic tie-break.
    static Vocabulary build(const std::function<bool(std::string&)>& next_document,
                            std::size_t min_occurrence);
    static Vocabulary build(const std::vector<std::string>& documents, std::size_t min_occurrence);

    // Rebuilds from a stored term list (ids 2..N+1 in list order).
    static Vocabulary from_terms(const std::vector<std::string>& terms, std::size_t min_occurrence);

    std::uint32_t id(const std::string& term) const; // unknown -> kOovId
    bool contains(const std::string& term) const;
    const std::string& term(std::uint32_t id) const;
    std::size_t size() const { return id_to_term_.size(); } // includes the two reserved ids
    std::size_t min_occurrence() const { return min_occurrence_; }
    // terms with ids >= 2, in id order
    std::vector<std::string> retained_terms() const;

private:
    std::vector<std::string> id_to_term_{"<pad>", "<oov>"};
    std::unordered_map<std::string, std::uint32_t> term_to_id_;
    std::size_t min_occurrence_ = 1;
};

struct EmbeddingTable {
    Tensor vectors; // |V| x dim, row 0 (padding) all zeros
    std::size_t dim = 0;
    // loaders mark tables trainable; freezing is expressed by training with
    // lr_embedding = 0
    bool trainable = true;
};

// All non-reserved rows drawn uniform(-0.05, 0.05); padding row zero.
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::mt19937_64& rng);

// Whitespace-separated text file, one term per line followed by `dim`
// floats. Vocabulary terms missing from the file (and the OOV row) get
// seeded uniform(-0.05, 0.05) rows; file terms outside the vocabulary are
// ignored.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                               std::mt19937_64& rng);

struct TokenSequence {
    std::vector<std::uint32_t> ids; // may include trailing padding zeros
    std::size_t true_length = 0;
    std::size_t cap = 0;
};

// Tokenize, map to ids (unknown terms -> OOV), truncate to `cap`. Texts
// that tokenize to nothing are an error; inference call sites catch and
// skip with a warning.
TokenSequence encode_sequence(const std::string& text, const Vocabulary& vocab, std::size_t cap);

// Appends padding ids up to `length`; true_length is unchanged.
TokenSequence pad_sequence(TokenSequence seq, std::size_t length);

// TSV interchange files. Lines are `key<TAB>text`; the text may itself
// contain further tabs only for the triples format, which has exactly
// three fields.
std::vector<std::pair<std::string, std::string>> load_tsv_pairs(const std::string& path);

struct TripleText {
    std::string query;
    std::string positive;
    std::string negative;
};

std::vector<TripleText> load_triples_tsv(const std::string& path);

} // namespace tk
