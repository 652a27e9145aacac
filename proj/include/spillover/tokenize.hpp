#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace spillover {

using StopwordSet = std::unordered_set<std::string>;

// Fixed default list, shipped in-repo as data/stopwords_en.txt as well.
// Overridable per run via the stopword file.
inline const StopwordSet& default_stopwords() {
    static const StopwordSet set = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "aren", "as", "at", "be", "because", "been", "before", "being",
        "below", "between", "both", "but", "by", "can", "cannot", "could", "couldn",
        "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each",
        "few", "for", "from", "further", "had", "hadn", "has", "hasn", "have", "haven",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
        "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just",
        "ll", "me", "more", "most", "mustn", "my", "myself", "no", "nor", "not", "now",
        "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
        "out", "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn",
        "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
        "themselves", "then", "there", "these", "they", "this", "those", "through",
        "to", "too", "under", "until", "up", "ve", "very", "was", "wasn", "we", "were",
        "weren", "what", "when", "where", "which", "while", "who", "whom", "why",
        "will", "with", "won", "would", "wouldn", "you", "your", "yours", "yourself",
        "yourselves",
    };
    return set;
}

// Lowercased alphanumeric unigrams, split on any non-alphanumeric byte.
// Tokens shorter than 2 characters and stopwords are dropped. No stemming
// or lemmatization.
inline std::vector<std::string> tokenize(std::string_view body, const StopwordSet& stopwords) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2 && !stopwords.contains(cur)) tokens.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : body) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

inline std::vector<std::string> tokenize(std::string_view body) {
    return tokenize(body, default_stopwords());
}

}  // namespace spillover
