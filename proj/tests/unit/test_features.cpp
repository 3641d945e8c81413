#include <gtest/gtest.h>

#include <numeric>
#include <regex>
#include <set>

#include "../support/fixtures.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/features.hpp"

using namespace ssc;
using ssc::testing::TempDir;
using ssc::testing::write_file;

namespace {

// Rule-by-rule reference tokenizer over ASCII text, built on std::regex.
TokenSeq reference_tokenize(const std::string& text) {
    TokenSeq out;
    static const std::regex ws("[ \\t\\n\\r\\f\\v]+");
    static const std::regex url("^[!-/:-@\\[-`{-~]*(https?://|www\\.).*");
    static const std::regex parts("^([!-/:-@\\[-`{-~]*)(.*?)[!-/:-@\\[-`{-~]*$");
    std::string lower = text;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::sregex_token_iterator it(lower.begin(), lower.end(), ws, -1), end; it != end; ++it) {
        const std::string piece = *it;
        if (piece.empty()) continue;
        if (piece == "<url>" || piece == "<user>" || std::regex_match(piece, url)) {
            out.push_back(piece == "<user>" ? "<user>" : "<url>");
            continue;
        }
        std::smatch m;
        std::regex_match(piece, m, parts);
        const std::string lead = m[1], body = m[2];
        if (body.empty()) continue;
        if (!lead.empty() && lead.back() == '@')
            out.push_back("<user>");
        else if (!lead.empty() && lead.back() == '#')
            out.push_back("#" + body);
        else
            out.push_back(body);
    }
    return out;
}

}  // namespace

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("Love This!"), (TokenSeq{"love", "this"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("high af http://t.co/x @bob #weed"), (TokenSeq{"high", "af", "<url>", "<user>", "#weed"}));
    EXPECT_EQ(tokenize("...!!! ?? ,"), TokenSeq{});
    EXPECT_EQ(tokenize("(www.example.com) \"quoted\""), (TokenSeq{"<url>", "quoted"}));
}

TEST(Tokenize, UnicodeWhitespaceSplits) {
    EXPECT_EQ(tokenize("a\xc2\xa0" "b\xe2\x80\x83" "c"), (TokenSeq{"a", "b", "c"}));
}

TEST(Tokenize, MatchesReferenceOnRandomText) {
    const std::vector<std::string> atoms = {"Weed", "HIGH", "af", "@bob", "#420", "http://t.co/x", "https://a.b",
                                            "www.x.org", "lol!", "(ok)", "...", "#", "@", "don't", "3am", "?!",
                                            "e-mail", "<url>", "x", "\"quote\""};
    const std::vector<std::string> seps = {" ", "  ", "\t", "\n", " \r\n "};
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const auto n = rng.below(8);
        for (std::uint64_t i = 0; i < n; ++i) {
            s += atoms[rng.below(atoms.size())];
            if (rng.bernoulli(0.3)) s += atoms[rng.below(atoms.size())];
            s += seps[rng.below(seps.size())];
        }
        EXPECT_EQ(tokenize(s), reference_tokenize(s)) << "input: " << s;
    }
}

TEST(Lexicon, CountsAndPresence) {
    Lexicon abuse({"weed", "xanax", "oxy"});
    Lexicon slang;
    EXPECT_EQ(lexicon_features({"i", "love", "weed", "and", "xanax"}, abuse, slang), (LexiconFeatures{1, 2, 0, 0}));
    EXPECT_EQ(lexicon_features({"nothing", "here"}, abuse, slang), (LexiconFeatures{0, 0, 0, 0}));
    EXPECT_EQ(lexicon_features({"weed", "weed"}, abuse, slang), (LexiconFeatures{1, 2, 0, 0}));
}

TEST(Lexicon, SlangShortTermsExcludedAtLoad) {
    TempDir dir;
    const auto slang = load_slang_lexicon(write_file(dir.file("slang.txt"), "# comment\ncoke\nblunt\nzooted\n  GREENERY \n"));
    EXPECT_FALSE(slang.contains("coke"));
    EXPECT_FALSE(slang.contains("blunt"));
    EXPECT_TRUE(slang.contains("zooted"));
    EXPECT_TRUE(slang.contains("greenery"));
    EXPECT_EQ(lexicon_features({"coke", "zooted"}, Lexicon{}, slang), (LexiconFeatures{0, 0, 1, 1}));
    const auto plain = load_lexicon(dir.file("slang.txt"));
    EXPECT_TRUE(plain.contains("coke"));
}

TEST(Clusters, PresenceBits) {
    ClusterMap cm;
    cm.add("weed", 7);
    cm.add("grass", 7);
    cm.add("pizza", 149);
    auto none = cluster_features({"hello"}, cm);
    EXPECT_TRUE(std::all_of(none.begin(), none.end(), [](double v) { return v == 0; }));
    auto one = cluster_features({"weed"}, cm);
    for (std::size_t i = 0; i < kClusterCount; ++i) EXPECT_EQ(one[i], i == 7 ? 1.0 : 0.0);
    auto two = cluster_features({"weed", "grass", "pizza"}, cm);
    EXPECT_EQ(two[7], 1.0);
    EXPECT_EQ(two[149], 1.0);
    EXPECT_EQ(std::accumulate(two.begin(), two.end(), 0.0), 2.0);
    EXPECT_THROW(cm.add("x", 150), Error);
}

TEST(Clusters, FileParsing) {
    TempDir dir;
    const auto cm = load_clusters(write_file(dir.file("c.tsv"), "Weed\t7\n\npizza\t0\n"));
    EXPECT_EQ(cm.find("weed"), 7);
    EXPECT_EQ(cm.find("pizza"), 0);
    EXPECT_EQ(cm.find("other"), -1);
    EXPECT_THROW(load_clusters(write_file(dir.file("b1.tsv"), "x\t150\n")), ParseError);
    EXPECT_THROW(load_clusters(write_file(dir.file("b2.tsv"), "x\tseven\n")), ParseError);
    EXPECT_THROW(load_clusters(write_file(dir.file("b3.tsv"), "x 7\n")), ParseError);
}

TEST(Synonyms, Expansion) {
    SynonymMap syn;
    syn.add("happy", {"glad"});
    EXPECT_EQ(expand_synonyms({"happy"}, syn), (TokenSeq{"happy", "glad"}));
    EXPECT_EQ(expand_synonyms({"happy", "x"}, SynonymMap{}), (TokenSeq{"happy", "x"}));
    syn.add("joyful", {"glad", "merry"});
    EXPECT_EQ(expand_synonyms({"happy", "joyful"}, syn), (TokenSeq{"happy", "joyful", "glad", "merry"}));
}

TEST(Synonyms, CapAndSelfMap) {
    SynonymMap syn;
    syn.add("a", {"b", "c", "d"});
    EXPECT_EQ(expand_synonyms({"a"}, syn, 2), (TokenSeq{"a", "b", "c"}));
    EXPECT_EQ(expand_synonyms({"a"}, syn, 0), (TokenSeq{"a"}));
    EXPECT_THROW(syn.add("x", {"X"}), Error);
    TempDir dir;
    const auto loaded = load_synonyms(write_file(dir.file("s.tsv"), "high\tstoned, lifted\n"));
    EXPECT_EQ(expand_synonyms({"high"}, loaded), (TokenSeq{"high", "stoned", "lifted"}));
    EXPECT_THROW(load_synonyms(write_file(dir.file("bad.tsv"), "high\thigh\n")), ParseError);
}

TEST(Aux, LayoutAndZeroCase) {
    FeatureResources res;
    res.abuse = Lexicon({"weed"});
    res.slang = Lexicon({"zooted"}, kSlangMinLength);
    res.clusters.add("weed", 3);
    const auto zero = res.aux({"nothing"});
    EXPECT_EQ(zero.size(), 154u);
    EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0; }));
    const auto v = res.aux({"weed", "zooted", "weed"});
    EXPECT_EQ(v[aux_index::abuse_presence], 1);
    EXPECT_EQ(v[aux_index::abuse_count], 2);
    EXPECT_EQ(v[aux_index::slang_presence], 1);
    EXPECT_EQ(v[aux_index::slang_count], 1);
    EXPECT_EQ(v[aux_index::cluster_base + 3], 1);
    EXPECT_EQ(std::accumulate(v.begin(), v.end(), 0.0), 6.0);
}

TEST(Chars, Encoding) {
    const auto& cs = default_charset();
    EXPECT_EQ(cs.size(), 71u);
    const auto a = encode_chars("a");
    ASSERT_EQ(a.size(), kMaxChars);
    EXPECT_EQ(a[0], cs.index('a'));
    EXPECT_TRUE(std::all_of(a.begin() + 1, a.end(), [](std::int32_t v) { return v == Charset::pad; }));
    EXPECT_EQ(encode_chars("A"), encode_chars("a"));
    EXPECT_EQ(encode_chars("\xc3\xa9")[0], Charset::unknown);
    std::string long_text(300, 'x');
    long_text[279] = 'y';
    long_text[280] = 'z';
    const auto l = encode_chars(long_text);
    EXPECT_EQ(l[279], cs.index('y'));
    EXPECT_EQ(l.size(), kMaxChars);
}

TEST(Chars, DistinctIndices) {
    const auto& cs = default_charset();
    std::set<std::int32_t> seen;
    for (int c = 33; c < 127; ++c)
        if (!(c >= 'A' && c <= 'Z')) EXPECT_TRUE(seen.insert(cs.index(static_cast<char32_t>(c))).second) << c;
    EXPECT_TRUE(seen.insert(cs.index(' ')).second);
    EXPECT_EQ(seen.size(), 69u);
    EXPECT_EQ(seen.count(Charset::pad), 0u);
    EXPECT_EQ(seen.count(Charset::unknown), 0u);
}

TEST(Embeddings, LoadWithAndWithoutHeader) {
    TempDir dir;
    const auto with = load_embeddings<double>(write_file(dir.file("e1.txt"), "3 4\na 1 2 3 4\nb 0 0 0 1\nc -1 0.5 2 1e-3\n"));
    EXPECT_EQ(with.size(), 3u);
    EXPECT_EQ(with.dim(), 4u);
    EXPECT_EQ(with.find("c")[3], 1e-3);
    const auto without = load_embeddings<float>(write_file(dir.file("e2.txt"), "a 1 2\nb 3 4\n"));
    EXPECT_EQ(without.dim(), 2u);
    EXPECT_EQ(without.find("b")[0], 3.0f);
    EXPECT_EQ(without.find("zzz"), nullptr);
}

TEST(Embeddings, ErrorsCarryLineNumbers) {
    TempDir dir;
    try {
        load_embeddings<double>(write_file(dir.file("bad.txt"), "2 4\na 1 2 3 4\nb 1 2 3\n"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(load_embeddings<double>(write_file(dir.file("nan.txt"), "a 1 x\n")), ParseError);
    EXPECT_THROW(load_embeddings<double>(write_file(dir.file("dup.txt"), "a 1\na 2\n")), ParseError);
    EXPECT_THROW(load_embeddings<double>(write_file(dir.file("empty.txt"), "\n")), Error);
    EXPECT_THROW(load_embeddings<double>(write_file(dir.file("hdr.txt"), "1 3\na 1 2\n"), 3), ParseError);
}

TEST(Embeddings, WordMatrix) {
    EmbeddingTable<double> t(3);
    const double v[] = {0.5, -1, 2};
    t.add("known", v);
    const auto empty = embed_words<double>({}, t);
    EXPECT_EQ(empty.shape(), (nn::Shape{40, 3}));
    EXPECT_TRUE(std::all_of(empty.values().begin(), empty.values().end(), [](double x) { return x == 0; }));

    const auto m = embed_words<double>({"known", "unknown"}, t);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.at(0, j), v[j]);
    const auto oov = oov_vector<double>("unknown", 3);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.at(1, j), oov[j]);
    EXPECT_EQ(oov, oov_vector<double>("unknown", 3));
    EXPECT_NE(oov, oov_vector<double>("other", 3));
    double maxabs = 0;
    for (double x : oov) maxabs = std::max(maxabs, std::abs(x));
    EXPECT_EQ(maxabs, 1.0);
    EXPECT_TRUE(std::all_of(m.values().begin() + 6, m.values().end(), [](double x) { return x == 0; }));

    TokenSeq fifty(50, "known");
    fifty[39] = "last";
    fifty[40] = "dropped";
    const auto f = embed_words<double>(fifty, t);
    EXPECT_EQ(f.dim(0), 40u);
    EXPECT_EQ(f.at(39, 0), oov_vector<double>("last", 3)[0]);
}
