#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssc/corpus.hpp"
#include "ssc/random.hpp"

namespace ssc::synth {

/// Seeded template generator for a labeled drug-abuse-style corpus. Both
/// classes draw on the same vocabulary. A share of each class uses a
/// "swap" template whose two forms contain identical tokens and differ only
/// in word order (who used the drug), which bag-of-words models cannot
/// separate.
struct Config {
    std::size_t positives = 3000;
    std::size_t negatives = 3000;
    std::uint64_t seed = 7;
    double swap_positive = 0.25;
    double swap_negative = 0.10;
    std::size_t embed_dim = 50;
};

namespace words {

inline const std::vector<std::string> drugs = {"weed", "xanax", "percocet", "oxy", "molly", "adderall", "codeine",
                                               "lean", "vicodin", "cocaine", "ketamine", "shrooms", "edibles",
                                               "percs", "xannies", "blunt"};
inline const std::vector<std::string> use_past = {"smoked", "took", "popped", "snorted", "did", "dropped", "sipped",
                                                  "rolled"};
inline const std::vector<std::string> use_present = {"smoke", "take", "pop", "snort", "do", "drop", "sip", "roll"};
inline const std::vector<std::string> first_person = {"i", "me and my friends", "we"};
inline const std::vector<std::string> others = {"my mom", "my brother", "my roommate", "my dad", "my sister",
                                                "my neighbor", "my cousin", "my boss"};
inline const std::vector<std::string> reactions = {"got mad", "got worried", "freaked out", "started yelling",
                                                   "called me out", "was not happy", "laughed about it",
                                                   "went to bed"};
inline const std::vector<std::string> adverbs = {"just", "finally", "literally", "already", "totally", ""};
inline const std::vector<std::string> quantities = {"some", "a little", "two", "a bunch of", "more", ""};
inline const std::vector<std::string> times = {"tonight", "this morning", "before class", "at the party",
                                               "after work", "all weekend", "again", "right now", ""};
inline const std::vector<std::string> feelings = {"feeling so high", "so faded", "im gone", "stoned af",
                                                  "feeling great", "cant feel my face", "so relaxed", "lit af",
                                                  "zoned out", ""};
inline const std::vector<std::string> needs = {"need", "really need", "could use", "want", "gotta get"};
inline const std::vector<std::string> stressors = {"so stressed", "cant sleep", "exams are killing me",
                                                   "long day", "anxiety is bad", "bored out of my mind", ""};
inline const std::vector<std::string> high_words = {"high", "stoned", "faded", "blazed", "wasted", "zooted"};
inline const std::vector<std::string> news_src = {"police", "officials", "the fda", "researchers", "a new study",
                                                  "local news", "the government", "doctors"};
inline const std::vector<std::string> news_verbs = {"seized", "warn about", "report on", "found", "studied",
                                                    "banned", "linked", "approved"};
inline const std::vector<std::string> news_objects = {"worth millions", "overdose deaths", "in the schools",
                                                      "at the border", "in a new report", "across the state",
                                                      "and addiction rates", "in teens"};
inline const std::vector<std::string> policy = {"legalization", "laws", "prices", "policy", "addiction",
                                                "prescriptions", "awareness", "regulation"};
inline const std::vector<std::string> opinions = {"should be on the ballot", "is a serious issue",
                                                  "needs more research", "is ruining lives",
                                                  "is a hot topic right now", "deserves a real debate",
                                                  "is in the news again"};
inline const std::vector<std::string> daily_past = {"ate", "watched", "cooked", "played", "bought", "finished",
                                                    "ordered", "tried"};
inline const std::vector<std::string> daily_objects = {"pizza", "a movie", "tacos", "video games", "new shoes",
                                                       "my homework", "sushi", "a new show", "coffee"};
inline const std::vector<std::string> happy = {"feeling great", "so happy", "so relaxed", "love it", "best day",
                                               "so tired", ""};
inline const std::vector<std::string> negations = {"would never", "will never", "dont", "refuse to", "never"};
inline const std::vector<std::string> reasons = {"again", "after what happened", "its not worth it",
                                                 "not my thing", "ever", "too risky", ""};
inline const std::vector<std::string> hashtags = {"#420", "#highlife", "#party", "#news", "#health", "#mood",
                                                  "#lol", "#stoned", ""};
inline const std::vector<std::string> fillers = {"lol", "lmao", "ngl", "tbh", "smh", "omg", "", "", "", ""};

}  // namespace words

namespace detail {

inline const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
    return v[static_cast<std::size_t>(rng.below(v.size()))];
}

inline std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!s.empty()) s += ' ';
        s += p;
    }
    return s;
}

/// Random capitalization, trailing punctuation, mentions and links.
inline std::string decorate(Rng& rng, std::string s) {
    if (rng.bernoulli(0.2) && !s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (rng.bernoulli(0.15)) s = "@user" + std::to_string(rng.below(1000)) + " " + s;
    static const std::vector<std::string> ends = {"", "", "!", "!!", ".", "..", " :)", "?"};
    s += pick(rng, ends);
    if (rng.bernoulli(0.15)) s += " http://t.co/" + std::to_string(rng.below(100000));
    return s;
}

inline std::string positive_text(Rng& rng, bool swap) {
    using namespace words;
    if (swap)
        return join({pick(rng, first_person), pick(rng, use_past), pick(rng, drugs), "and", pick(rng, others),
                     pick(rng, reactions), pick(rng, fillers)});
    switch (rng.below(3)) {
        case 0:
            return join({pick(rng, first_person), pick(rng, adverbs), pick(rng, use_past), pick(rng, quantities),
                         pick(rng, drugs), pick(rng, times), pick(rng, feelings), pick(rng, hashtags)});
        case 1:
            return join({pick(rng, needs), pick(rng, quantities), pick(rng, drugs), pick(rng, times),
                         pick(rng, stressors), pick(rng, fillers)});
        default:
            return join({"so", pick(rng, high_words), "off", pick(rng, drugs), pick(rng, times), pick(rng, fillers),
                         pick(rng, hashtags)});
    }
}

inline std::string negative_text(Rng& rng, bool swap) {
    using namespace words;
    if (swap)
        return join({pick(rng, others), pick(rng, use_past), pick(rng, drugs), "and", pick(rng, first_person),
                     pick(rng, reactions), pick(rng, fillers)});
    switch (rng.below(4)) {
        case 0:
            return join({pick(rng, news_src), pick(rng, news_verbs), pick(rng, drugs), pick(rng, news_objects),
                         pick(rng, hashtags)});
        case 1:
            return join({pick(rng, drugs), pick(rng, policy), pick(rng, opinions), pick(rng, fillers)});
        case 2:
            return join({pick(rng, first_person), pick(rng, adverbs), pick(rng, daily_past), pick(rng, daily_objects),
                         pick(rng, times), pick(rng, happy), pick(rng, hashtags)});
        default:
            return join({pick(rng, first_person), pick(rng, negations), pick(rng, use_present), pick(rng, drugs),
                         pick(rng, reasons), pick(rng, fillers)});
    }
}

}  // namespace detail

/// Labeled items in a seeded order; ids are "syn<N>". Texts are unique
/// under the dedupe key.
inline Dataset generate(const Config& cfg) {
    Rng rng(mix_seed(cfg.seed, "synth"));
    std::vector<Label> labels;
    labels.insert(labels.end(), cfg.positives, Label::positive);
    labels.insert(labels.end(), cfg.negatives, Label::negative);
    rng.shuffle(labels);
    std::vector<Tweet> items;
    std::unordered_set<std::string> seen;
    items.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pos = labels[i] == Label::positive;
        for (int attempt = 0;; ++attempt) {
            const bool swap = rng.bernoulli(pos ? cfg.swap_positive : cfg.swap_negative);
            std::string t = detail::decorate(rng, pos ? detail::positive_text(rng, swap) : detail::negative_text(rng, swap));
            if (attempt >= 50) t += " #" + std::to_string(i);
            if (seen.insert(text::normalize_for_dedupe(t)).second) {
                items.push_back({"syn" + std::to_string(i), std::move(t), labels[i]});
                break;
            }
        }
    }
    return Dataset(std::move(items));
}

/// Every distinct whitespace-separated word the templates can emit.
inline std::vector<std::pair<std::string, std::size_t>> vocabulary() {
    using namespace words;
    const std::vector<const std::vector<std::string>*> groups = {
        &drugs,        &use_past,   &use_present, &first_person, &others,   &reactions,    &adverbs,
        &quantities,   &times,      &feelings,    &needs,        &stressors, &high_words,  &news_src,
        &news_verbs,   &news_objects, &policy,    &opinions,     &daily_past, &daily_objects, &happy,
        &negations,    &reasons,    &hashtags,    &fillers};
    std::vector<std::pair<std::string, std::size_t>> out;
    std::unordered_set<std::string> seen;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (const auto& phrase : *groups[g])
            for (auto w : text::split_ws(phrase))
                if (seen.insert(std::string(w)).second) out.emplace_back(std::string(w), g);
    for (const char* w : {"and", "so", "off"})
        if (seen.insert(w).second) out.emplace_back(w, groups.size());
    return out;
}

/// Writes dataset.tsv, abuse.txt, slang.txt, clusters.tsv, synonyms.tsv and
/// embeddings.txt into `dir`.
inline void write_resources(const std::string& dir, const Config& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_dataset(generate(cfg), (fs::path(dir) / "dataset.tsv").string());

    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
        return out;
    };
    {
        auto out = open("abuse.txt");
        out << "# abuse-indicating terms\n";
        for (const auto& w : words::drugs) out << w << '\n';
        for (const auto& w : words::high_words) out << w << '\n';
        for (const auto& w : words::use_past) out << w << '\n';
    }
    {
        // Short entries are present on purpose; the loader drops them.
        auto out = open("slang.txt");
        for (const char* w : {"xannies", "percs", "molly", "zooted", "blazed", "shrooms", "edibles", "lean", "coke",
                              "faded", "codeine", "percocet", "adderall"})
            out << w << '\n';
    }
    const auto vocab = vocabulary();
    {
        auto out = open("clusters.tsv");
        for (const auto& [w, g] : vocab) out << w << '\t' << (g * 6 + fnv1a(w) % 6) % 150 << '\n';
    }
    {
        auto out = open("synonyms.tsv");
        out << "weed\tmarijuana,pot\n"
               "high\tstoned,intoxicated\n"
               "smoked\tpuffed\n"
               "took\tingested\n"
               "popped\tswallowed\n"
               "pill\ttablet\n"
               "happy\tglad\n"
               "stressed\tanxious\n";
    }
    {
        // Each template group gets a shared direction; words add a small
        // private offset.
        std::vector<std::string> lines;
        auto emit = [&](const std::string& w, std::size_t group) {
            Rng g(mix_seed(cfg.seed, "group" + std::to_string(group)));
            Rng r(mix_seed(cfg.seed, "word:" + w));
            std::string line = w;
            for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
                const double v = 0.8 * g.uniform(-1, 1) + 0.35 * r.uniform(-1, 1);
                char buf[32];
                std::snprintf(buf, sizeof buf, " %.6f", v);
                line += buf;
            }
            lines.push_back(std::move(line));
        };
        std::unordered_set<std::string> written;
        for (const auto& [w, g] : vocab) {
            emit(w, g);
            written.insert(w);
        }
        for (const char* w : {"marijuana", "pot", "intoxicated", "puffed", "ingested", "swallowed", "tablet",
                              "anxious", "glad"})
            if (written.insert(w).second) emit(w, 0);
        auto out = open("embeddings.txt");
        out << lines.size() << ' ' << cfg.embed_dim << '\n';
        for (const auto& l : lines) out << l << '\n';
    }
}

}  // namespace ssc::synth
