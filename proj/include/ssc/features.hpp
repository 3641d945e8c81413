#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ssc/common.hpp"
#include "ssc/corpus.hpp"

namespace ssc {

using TokenSeq = std::vector<std::string>;

inline constexpr std::size_t kClusterCount = 150;
inline constexpr std::size_t kAuxDim = 4 + kClusterCount;  // 154
inline constexpr std::size_t kMaxChars = 280;
inline constexpr std::string_view kUrlToken = "<url>";
inline constexpr std::string_view kUserToken = "<user>";

/// Layout: [abuse_presence, abuse_count, slang_presence, slang_count, cluster bits 0..149].
using AuxVector = std::array<double, kAuxDim>;

namespace aux_index {
inline constexpr std::size_t abuse_presence = 0;
inline constexpr std::size_t abuse_count = 1;
inline constexpr std::size_t slang_presence = 2;
inline constexpr std::size_t slang_count = 3;
inline constexpr std::size_t cluster_base = 4;
}  // namespace aux_index

namespace detail {

inline bool is_ascii_punct(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

inline bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

/// Applies the per-token rules to one whitespace-delimited piece (already
/// lowercased). Returns an empty string when nothing survives.
inline std::string normalize_token(std::string_view piece) {
    if (piece == kUrlToken || piece == kUserToken) return std::string(piece);
    std::size_t lead = 0;
    while (lead < piece.size() && is_ascii_punct(piece[lead])) ++lead;
    std::string_view body = piece.substr(lead);
    std::string_view prefix = piece.substr(0, lead);
    if (starts_with(body, "http://") || starts_with(body, "https://") || starts_with(body, "www.") ||
        starts_with(piece, "http://") || starts_with(piece, "https://"))
        return std::string(kUrlToken);
    while (!body.empty() && is_ascii_punct(body.back())) body.remove_suffix(1);
    if (body.empty()) return {};
    if (!prefix.empty() && prefix.back() == '@') return std::string(kUserToken);
    if (!prefix.empty() && prefix.back() == '#') return "#" + std::string(body);
    return std::string(body);
}

}  // namespace detail

/// Lowercases (ASCII), splits on Unicode whitespace, rewrites URLs to <url>
/// and @-mentions to <user>, strips leading/trailing ASCII punctuation while
/// keeping the '#' of hashtags.
inline TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::string piece;
    auto flush = [&] {
        if (piece.empty()) return;
        auto tok = detail::normalize_token(piece);
        if (!tok.empty()) out.push_back(std::move(tok));
        piece.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
        std::size_t start = i;
        char32_t cp = text::next_code_point(text, i);
        if (text::is_unicode_space(cp)) {
            flush();
            continue;
        }
        if (cp >= 'A' && cp <= 'Z')
            piece.push_back(static_cast<char>(cp - 'A' + 'a'));
        else
            piece.append(text.substr(start, i - start));
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------
// Lexical resources

class Lexicon {
public:
    Lexicon() = default;

    /// min_length: terms must be strictly longer than this many characters
    /// to be kept (0 keeps everything).
    explicit Lexicon(const std::vector<std::string>& terms, std::size_t min_length = 0) {
        for (const auto& t : terms) add(t, min_length);
    }

    bool contains(const std::string& term) const { return terms_.count(term) != 0; }
    std::size_t size() const noexcept { return terms_.size(); }
    const std::unordered_set<std::string>& terms() const noexcept { return terms_; }

    void add(std::string_view term, std::size_t min_length = 0) {
        auto t = text::to_lower_ascii(text::trim(term));
        if (t.empty() || text::utf8_length(t) <= min_length) return;
        terms_.insert(std::move(t));
    }

private:
    std::unordered_set<std::string> terms_;
};

/// Slang lexicon entries must be longer than five characters.
inline constexpr std::size_t kSlangMinLength = 5;

/// One term per line; '#'-prefixed lines are comments.
inline Lexicon load_lexicon(const std::string& path, std::size_t min_length = 0) {
    Lexicon lex;
    for (const auto& line : detail::read_lines(path)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        lex.add(t, min_length);
    }
    return lex;
}

inline Lexicon load_slang_lexicon(const std::string& path) { return load_lexicon(path, kSlangMinLength); }

class ClusterMap {
public:
    void add(std::string term, std::size_t cluster) {
        if (cluster >= kClusterCount) throw Error("cluster id out of range [0,150): " + std::to_string(cluster));
        map_[text::to_lower_ascii(term)] = static_cast<std::uint8_t>(cluster);
    }
    /// -1 when the term is not clustered.
    int find(const std::string& term) const {
        auto it = map_.find(term);
        return it == map_.end() ? -1 : it->second;
    }
    std::size_t size() const noexcept { return map_.size(); }

private:
    std::unordered_map<std::string, std::uint8_t> map_;
};

/// `term<TAB>cluster_id` per line.
inline ClusterMap load_clusters(const std::string& path) {
    ClusterMap cm;
    auto lines = detail::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) continue;
        auto cols = text::split(lines[n], '\t');
        if (cols.size() != 2 || cols[0].empty()) throw ParseError(path, n + 1, "expected term<TAB>cluster_id");
        std::size_t id = 0, used = 0;
        try {
            id = std::stoul(std::string(cols[1]), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != cols[1].size()) throw ParseError(path, n + 1, "invalid cluster id");
        if (id >= kClusterCount) throw ParseError(path, n + 1, "cluster id must be in [0,150)");
        cm.add(std::string(cols[0]), id);
    }
    return cm;
}

class SynonymMap {
public:
    void add(const std::string& term, std::vector<std::string> synonyms) {
        auto key = text::to_lower_ascii(term);
        auto& list = map_[key];
        for (auto& s : synonyms) {
            auto syn = text::to_lower_ascii(text::trim(s));
            if (syn.empty()) continue;
            if (syn == key) throw Error("synonym map: term '" + key + "' maps to itself");
            list.push_back(std::move(syn));
        }
    }
    const std::vector<std::string>* find(const std::string& term) const {
        auto it = map_.find(term);
        return it == map_.end() ? nullptr : &it->second;
    }
    bool empty() const noexcept { return map_.empty(); }
    std::size_t size() const noexcept { return map_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> map_;
};

/// `term<TAB>syn1,syn2,...` per line.
inline SynonymMap load_synonyms(const std::string& path) {
    SynonymMap syn;
    auto lines = detail::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) continue;
        auto cols = text::split(lines[n], '\t');
        if (cols.size() != 2 || cols[0].empty()) throw ParseError(path, n + 1, "expected term<TAB>syn1,syn2,...");
        std::vector<std::string> list;
        for (auto s : text::split(cols[1], ',')) list.emplace_back(s);
        try {
            syn.add(std::string(cols[0]), std::move(list));
        } catch (const Error& e) {
            throw ParseError(path, n + 1, e.what());
        }
    }
    return syn;
}

inline constexpr std::size_t kDefaultMaxSynonyms = 10;

/// Original tokens, then the de-duplicated synonyms of every token in
/// first-occurrence order, at most max_append of them.
inline TokenSeq expand_synonyms(const TokenSeq& tokens, const SynonymMap& syn,
                                std::size_t max_append = kDefaultMaxSynonyms) {
    TokenSeq out = tokens;
    if (syn.empty() || max_append == 0) return out;
    std::unordered_set<std::string> appended;
    for (const auto& tok : tokens) {
        const auto* list = syn.find(tok);
        if (!list) continue;
        for (const auto& s : *list) {
            if (appended.size() == max_append) return out;
            if (appended.insert(s).second) out.push_back(s);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Engineered features

using LexiconFeatures = std::array<double, 4>;

inline LexiconFeatures lexicon_features(const TokenSeq& tokens, const Lexicon& abuse, const Lexicon& slang) {
    double abuse_hits = 0, slang_hits = 0;
    for (const auto& t : tokens) {
        abuse_hits += abuse.contains(t);
        slang_hits += slang.contains(t);
    }
    return {abuse_hits > 0 ? 1.0 : 0.0, abuse_hits, slang_hits > 0 ? 1.0 : 0.0, slang_hits};
}

/// Multi-hot cluster presence.
inline std::array<double, kClusterCount> cluster_features(const TokenSeq& tokens, const ClusterMap& cm) {
    std::array<double, kClusterCount> v{};
    for (const auto& t : tokens)
        if (int c = cm.find(t); c >= 0) v[static_cast<std::size_t>(c)] = 1.0;
    return v;
}

inline AuxVector build_aux_vector(const TokenSeq& tokens, const Lexicon& abuse, const Lexicon& slang,
                                  const ClusterMap& cm) {
    AuxVector v{};
    auto lex = lexicon_features(tokens, abuse, slang);
    std::copy(lex.begin(), lex.end(), v.begin());
    auto cl = cluster_features(tokens, cm);
    std::copy(cl.begin(), cl.end(), v.begin() + aux_index::cluster_base);
    return v;
}

// ---------------------------------------------------------------------------
// Character encoding

/// Index 0 pads, index 1 marks unknown characters; printable ASCII
/// letters, digits, punctuation and space follow.
class Charset {
public:
    static constexpr std::int32_t pad = 0;
    static constexpr std::int32_t unknown = 1;

    Charset() {
        table_.fill(unknown);
        std::int32_t next = 2;
        for (char c = 'a'; c <= 'z'; ++c) table_[static_cast<unsigned char>(c)] = next++;
        for (char c = '0'; c <= '9'; ++c) table_[static_cast<unsigned char>(c)] = next++;
        for (int c = 33; c < 127; ++c)
            if (detail::is_ascii_punct(static_cast<char>(c))) table_[static_cast<std::size_t>(c)] = next++;
        table_[' '] = next++;
        size_ = static_cast<std::size_t>(next);
    }

    std::size_t size() const noexcept { return size_; }

    std::int32_t index(char32_t c) const {
        if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
        return c < 128 ? table_[c] : unknown;
    }

private:
    std::array<std::int32_t, 128> table_{};
    std::size_t size_ = 0;
};

inline const Charset& default_charset() {
    static const Charset cs;
    return cs;
}

using CharSeq = std::vector<std::int32_t>;

/// Lowercased code points mapped through the charset, truncated to 280 and
/// right-padded with 0.
inline CharSeq encode_chars(std::string_view text, const Charset& cs = default_charset()) {
    CharSeq seq(kMaxChars, Charset::pad);
    std::size_t n = 0;
    for (std::size_t i = 0; i < text.size() && n < kMaxChars;) seq[n++] = cs.index(text::next_code_point(text, i));
    return seq;
}

/// Loaded lexical resources for feature extraction.
struct FeatureResources {
    Lexicon abuse;
    Lexicon slang;
    ClusterMap clusters;
    SynonymMap synonyms;
    std::size_t max_synonyms = kDefaultMaxSynonyms;

    AuxVector aux(const TokenSeq& tokens) const { return build_aux_vector(tokens, abuse, slang, clusters); }
    TokenSeq word_tokens(const TokenSeq& tokens) const { return expand_synonyms(tokens, synonyms, max_synonyms); }
};

}  // namespace ssc
