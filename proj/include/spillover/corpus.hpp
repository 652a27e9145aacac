#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "spillover/io_util.hpp"
#include "spillover/time_util.hpp"

namespace spillover {

enum class PostKind : std::uint8_t { submission, comment };

struct PostRecord {
    std::string id;
    std::string author;
    std::string subreddit;
    std::int64_t created_utc = 0;
    std::string body;
    PostKind kind = PostKind::comment;
    std::int64_t score = 0;  // per-post vote score when the dump carries one

    std::int64_t day() const { return day_of(created_utc); }
};

struct CorpusHandle {
    std::filesystem::path store_dir;
    std::size_t record_count = 0;
    std::size_t author_count = 0;
    std::size_t subreddit_count = 0;
    std::size_t error_count = 0;
};

namespace detail {

inline bool parse_post_line(std::string_view line, PostRecord& out) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    auto author = j.find("author");
    auto subreddit = j.find("subreddit");
    auto created = j.find("created_utc");
    auto body = j.find("body");
    if (author == j.end() || subreddit == j.end() || created == j.end() || body == j.end())
        return false;
    if (!author->is_string() || !subreddit->is_string() || !body->is_string()) return false;
    if (created->is_number()) {
        out.created_utc = created->get<std::int64_t>();
    } else if (created->is_string()) {
        // PushShift dumps flip between numeric and string timestamps
        try {
            out.created_utc = std::stoll(created->get<std::string>());
        } catch (...) {
            return false;
        }
    } else {
        return false;
    }
    out.author = author->get<std::string>();
    out.subreddit = subreddit->get<std::string>();
    out.body = body->get<std::string>();
    if (out.created_utc <= 0 || out.author.empty() || out.subreddit.empty()) return false;
    if (auto it = j.find("id"); it != j.end() && it->is_string())
        out.id = it->get<std::string>();
    else
        out.id.clear();
    out.kind = PostKind::comment;
    if (auto it = j.find("kind"); it != j.end() && it->is_string() && *it == "submission")
        out.kind = PostKind::submission;
    else if (j.contains("title"))
        out.kind = PostKind::submission;
    out.score = 0;
    if (auto it = j.find("score"); it != j.end() && it->is_number())
        out.score = it->get<std::int64_t>();
    return true;
}

}  // namespace detail

// In-memory post store with author and subreddit indices, persisted as one
// normalized line-delimited JSON file sorted by record id. Queries are
// read-only and safe to run concurrently.
class CorpusStore {
public:
    CorpusStore() = default;

    // Streams dump files into the store. Malformed lines are counted, not
    // fatal; an unreadable file is.
    CorpusHandle ingest(const std::vector<std::filesystem::path>& inputs) {
        for (const auto& path : inputs) {
            if (!std::filesystem::exists(path))
                throw std::runtime_error("input file does not exist: " + path.string());
            for_each_line(path, [&](std::string_view line) {
                if (line.empty()) return;
                PostRecord rec;
                if (detail::parse_post_line(line, rec)) {
                    if (rec.id.empty()) rec.id = synth_id(records_.size());
                    records_.push_back(std::move(rec));
                } else {
                    ++error_count_;
                }
            });
        }
        finalize();
        return handle();
    }

    CorpusHandle handle() const {
        CorpusHandle h;
        h.record_count = records_.size();
        h.author_count = by_author_.size();
        h.subreddit_count = by_subreddit_.size();
        h.error_count = error_count_;
        return h;
    }

    std::size_t size() const { return records_.size(); }
    std::size_t error_count() const { return error_count_; }
    const PostRecord& record(std::size_t i) const { return records_[i]; }

    // Posts of one author, ordered by (created_utc, id).
    std::vector<const PostRecord*> posts_by_author(const std::string& author) const {
        return gather(by_author_, author);
    }

    std::vector<const PostRecord*> posts_by_subreddit(const std::string& subreddit) const {
        return gather(by_subreddit_, subreddit);
    }

    bool has_subreddit(const std::string& s) const { return by_subreddit_.contains(s); }
    bool has_author(const std::string& a) const { return by_author_.contains(a); }

    std::vector<std::string> authors() const { return keys(by_author_); }
    std::vector<std::string> subreddits() const { return keys(by_subreddit_); }

    // Distinct authors who posted in the subreddit (set semantics).
    std::set<std::string> authors_of(const std::string& subreddit) const {
        std::set<std::string> out;
        if (auto it = by_subreddit_.find(subreddit); it != by_subreddit_.end())
            for (std::size_t i : it->second) out.insert(records_[i].author);
        return out;
    }

    void save(const std::filesystem::path& store_dir) const {
        std::ostringstream out;
        for (const PostRecord& r : records_) {
            nlohmann::json j{{"id", r.id},
                             {"author", r.author},
                             {"subreddit", r.subreddit},
                             {"created_utc", r.created_utc},
                             {"body", r.body},
                             {"kind", r.kind == PostKind::submission ? "submission" : "comment"},
                             {"score", r.score}};
            out << j.dump() << '\n';
        }
        atomic_write(store_dir / "records.ndjson", out.str());
        nlohmann::json meta{{"record_count", records_.size()},
                            {"author_count", by_author_.size()},
                            {"subreddit_count", by_subreddit_.size()},
                            {"error_count", error_count_}};
        atomic_write(store_dir / "meta.json", meta.dump(2) + "\n");
    }

    static CorpusStore load(const std::filesystem::path& store_dir) {
        CorpusStore store;
        store.ingest({store_dir / "records.ndjson"});
        if (store.error_count_ != 0)
            throw std::runtime_error("corrupt store: " + store_dir.string());
        auto meta = nlohmann::json::parse(read_file(store_dir / "meta.json"));
        store.error_count_ = meta.at("error_count").get<std::size_t>();
        return store;
    }

private:
    static std::string synth_id(std::size_t n) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "anon%012zu", n);
        return buf;
    }

    // Deterministic order regardless of input sharding: sort by record id,
    // then rebuild the indices.
    void finalize() {
        std::sort(records_.begin(), records_.end(),
                  [](const PostRecord& a, const PostRecord& b) { return a.id < b.id; });
        by_author_.clear();
        by_subreddit_.clear();
        for (std::size_t i = 0; i < records_.size(); ++i) {
            by_author_[records_[i].author].push_back(i);
            by_subreddit_[records_[i].subreddit].push_back(i);
        }
        auto by_time = [this](std::size_t a, std::size_t b) {
            const PostRecord &ra = records_[a], &rb = records_[b];
            return std::tie(ra.created_utc, ra.id) < std::tie(rb.created_utc, rb.id);
        };
        for (auto& [_, idx] : by_author_) std::sort(idx.begin(), idx.end(), by_time);
        for (auto& [_, idx] : by_subreddit_) std::sort(idx.begin(), idx.end(), by_time);
    }

    using Index = std::unordered_map<std::string, std::vector<std::size_t>>;

    std::vector<const PostRecord*> gather(const Index& index, const std::string& key) const {
        std::vector<const PostRecord*> out;
        if (auto it = index.find(key); it != index.end()) {
            out.reserve(it->second.size());
            for (std::size_t i : it->second) out.push_back(&records_[i]);
        }
        return out;
    }

    static std::vector<std::string> keys(const Index& index) {
        std::vector<std::string> out;
        out.reserve(index.size());
        for (const auto& [k, _] : index) out.push_back(k);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<PostRecord> records_;
    Index by_author_;
    Index by_subreddit_;
    std::size_t error_count_ = 0;
};

// Distinct usernames that posted in the subreddit; empty set when absent.
inline std::set<std::string> extract_members(const CorpusStore& corpus,
                                             const std::string& subreddit) {
    return corpus.authors_of(subreddit);
}

}  // namespace spillover
