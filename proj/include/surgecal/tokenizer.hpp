#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace surgecal {

/// Word-level tokenizer over lower-cased alphanumeric runs. Known words map
/// into a frequency-built vocabulary; out-of-vocabulary words hash into a
/// fixed bucket range so any text tokenizes deterministically. Id 0 is the
/// reserved begin token.
class Tokenizer {
public:
    static constexpr int kBosId = 0;

    Tokenizer() = default;
    Tokenizer(int n_hash_buckets, std::vector<std::string> words);

    /// Lower-cased alphanumeric runs; punctuation and whitespace separate.
    static std::vector<std::string> split_pieces(const std::string& text);

    /// Builds a vocabulary from the corpus: the max_words most frequent
    /// pieces (ties broken lexicographically).
    static Tokenizer build(const std::vector<std::string>& corpus, int max_words,
                           int n_hash_buckets);

    /// Deterministic encoding, tail-truncated to max_len (which must be >= 8).
    /// Empty text yields an empty sequence with truncated = false.
    std::pair<std::vector<int>, bool> encode(const std::string& text, int max_len) const;

    /// Total id space: 1 (begin token) + hash buckets + words.
    int vocab_size() const { return 1 + n_hash_buckets_ + static_cast<int>(words_.size()); }

    int n_hash_buckets() const { return n_hash_buckets_; }
    const std::vector<std::string>& words() const { return words_; }

    std::string to_json() const;
    static Tokenizer from_json(const std::string& json_text);

    /// Stable hash of the serialized vocabulary.
    std::uint64_t content_hash() const;

private:
    int n_hash_buckets_ = 64;
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> word_to_id_;
};

}  // namespace surgecal
