#include "surgecal/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "surgecal/rng.hpp"

#include <json.hpp>

namespace surgecal {

Tokenizer::Tokenizer(int n_hash_buckets, std::vector<std::string> words)
    : n_hash_buckets_(n_hash_buckets), words_(std::move(words)) {
    if (n_hash_buckets_ < 1) throw std::invalid_argument("n_hash_buckets must be >= 1");
    for (size_t i = 0; i < words_.size(); ++i) {
        word_to_id_[words_[i]] = 1 + n_hash_buckets_ + static_cast<int>(i);
    }
}

std::vector<std::string> Tokenizer::split_pieces(const std::string& text) {
    std::vector<std::string> pieces;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            pieces.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) pieces.push_back(std::move(current));
    return pieces;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, int max_words,
                           int n_hash_buckets) {
    std::map<std::string, long> counts;  // ordered: deterministic tie-break
    for (const std::string& doc : corpus) {
        for (const std::string& piece : split_pieces(doc)) ++counts[piece];
    }
    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (static_cast<int>(ranked.size()) > max_words) ranked.resize(static_cast<size_t>(max_words));
    std::vector<std::string> words;
    words.reserve(ranked.size());
    for (auto& [w, _] : ranked) words.push_back(w);
    return Tokenizer(n_hash_buckets, std::move(words));
}

std::pair<std::vector<int>, bool> Tokenizer::encode(const std::string& text, int max_len) const {
    if (max_len < 8) throw std::invalid_argument("tokenizer max_len must be >= 8");
    std::vector<int> ids;
    bool truncated = false;
    for (const std::string& piece : split_pieces(text)) {
        if (static_cast<int>(ids.size()) >= max_len) {
            truncated = true;
            break;
        }
        auto it = word_to_id_.find(piece);
        if (it != word_to_id_.end()) {
            ids.push_back(it->second);
        } else {
            ids.push_back(1 + static_cast<int>(fnv1a(piece) % static_cast<std::uint64_t>(
                                                                   n_hash_buckets_)));
        }
    }
    return {std::move(ids), truncated};
}

std::string Tokenizer::to_json() const {
    nlohmann::json j;
    j["n_hash_buckets"] = n_hash_buckets_;
    j["words"] = words_;
    return j.dump();
}

Tokenizer Tokenizer::from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    return Tokenizer(j.at("n_hash_buckets").get<int>(),
                     j.at("words").get<std::vector<std::string>>());
}

std::uint64_t Tokenizer::content_hash() const { return fnv1a(to_json()); }

}  // namespace surgecal
