#include "recscale/judge/judge.hpp"

#include "recscale/common/parallel.hpp"
#include "recscale/common/rng.hpp"
#include "recscale/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace recscale::judge {

using nlohmann::json;

const char* to_string(Choice c) {
    switch (c) {
        case Choice::first: return "first";
        case Choice::second: return "second";
        case Choice::unclear: return "unclear";
    }
    return "unclear";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::a_wins: return "a_wins";
        case Outcome::b_wins: return "b_wins";
        case Outcome::tie: return "tie";
    }
    return "tie";
}

namespace {

bool has_word(const std::string& hay, std::string_view word) {
    for (auto pos = hay.find(word); pos != std::string::npos; pos = hay.find(word, pos + 1)) {
        const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
        const auto end = pos + word.size();
        const bool right = end >= hay.size() || !std::isalnum(static_cast<unsigned char>(hay[end]));
        if (left && right) return true;
    }
    return false;
}

}  // namespace

Choice parse_choice(std::string_view reply) {
    const std::string s = text::to_lower(text::strip_emphasis(reply));
    const bool first = has_word(s, "first") || has_word(s, "description 1") || text::trim(s) == "1";
    const bool second = has_word(s, "second") || has_word(s, "description 2") || text::trim(s) == "2";
    if (first == second) return Choice::unclear;
    return first ? Choice::first : Choice::second;
}

Outcome combine(Choice round_1, Choice round_2) {
    if (round_1 == Choice::first && round_2 == Choice::second) return Outcome::a_wins;
    if (round_1 == Choice::second && round_2 == Choice::first) return Outcome::b_wins;
    return Outcome::tie;
}

std::string describe(const search::Feature& f) { return f.name + ": " + f.definition; }

Verdict compare_pair(llm::Gateway& gateway, const TemplateLibrary& templates, const JudgePair& pair,
                     const std::string& judge_model_id) {
    auto ask = [&](const search::Feature& first, const search::Feature& second) {
        const auto prompt = templates.render("judge", {{"first", describe(first)}, {"second", describe(second)}});
        return gateway.complete(llm::single_turn(judge_model_id, prompt, 0.0, 16)).text;
    };
    Verdict v;
    v.round_1 = ask(pair.side_a, pair.side_b);
    v.round_2 = ask(pair.side_b, pair.side_a);
    v.choice_1 = parse_choice(v.round_1);
    v.choice_2 = parse_choice(v.round_2);
    v.outcome = combine(v.choice_1, v.choice_2);
    return v;
}

std::vector<JudgePair> form_pairs(const std::map<std::string, search::FeatureSet>& sets_a,
                                  const std::map<std::string, search::FeatureSet>& sets_b, const JudgeConfig& config) {
    auto valid = [](const search::FeatureSet& s) {
        std::vector<const search::Feature*> out;
        for (const auto& f : s.features) {
            if (f.valid.value_or(false)) out.push_back(&f);
        }
        return out;
    };
    std::vector<std::string> users;
    for (const auto& [user, set] : sets_a) {
        const auto it = sets_b.find(user);
        if (it != sets_b.end() && !valid(set).empty() && !valid(it->second).empty()) users.push_back(user);
    }
    if (users.empty()) throw std::invalid_argument("no user has valid features from both models");

    if (config.sample_size > 0 && config.sample_size < users.size()) {
        SplitMix64 rng(derive_seed(config.pairing_seed, "judge/users"));
        for (std::size_t i = 0; i < config.sample_size; ++i) {
            std::swap(users[i], users[i + rng.bounded(users.size() - i)]);
        }
        users.resize(config.sample_size);
        std::sort(users.begin(), users.end());
    }

    std::vector<JudgePair> pairs;
    for (const auto& user : users) {
        const auto a = valid(sets_a.at(user));
        const auto b = valid(sets_b.at(user));
        SplitMix64 ra(derive_seed(config.pairing_seed, "judge/a/" + user));
        SplitMix64 rb(derive_seed(config.pairing_seed, "judge/b/" + user));
        pairs.push_back({*a[ra.bounded(a.size())], *b[rb.bounded(b.size())], user});
    }
    return pairs;
}

JudgingRun judge_pairs(const std::vector<JudgePair>& pairs, const std::vector<Judge>& judges,
                       const TemplateLibrary& templates, std::size_t workers) {
    JudgingRun run;
    for (const auto& judge : judges) {
        struct Result {
            std::optional<Verdict> verdict;
            std::string error;
        };
        const auto results = parallel_map(pairs.size(), workers, [&](std::size_t i) {
            Result r;
            try {
                r.verdict = compare_pair(*judge.gateway, templates, pairs[i], judge.model_id);
            } catch (const llm::TransientError& e) {
                r.error = e.what();
            } catch (const llm::RetriesExhausted& e) {
                r.error = e.what();
            } catch (const llm::MalformedReply& e) {
                r.error = e.what();
            }
            return r;
        });
        JudgeReport report;
        report.judge_model_id = judge.model_id;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            json row{{"judge", judge.model_id},
                     {"user_id", pairs[i].user_id},
                     {"a", describe(pairs[i].side_a)},
                     {"b", describe(pairs[i].side_b)}};
            const auto& r = results[i];
            if (!r.verdict) {
                ++report.skipped;
                row["outcome"] = "skipped";
                row["error"] = r.error;
            } else {
                const auto& v = *r.verdict;
                switch (v.outcome) {
                    case Outcome::a_wins: ++report.wins_a; break;
                    case Outcome::b_wins: ++report.wins_b; break;
                    case Outcome::tie: ++report.ties; break;
                }
                row["round_1"] = v.round_1;
                row["round_2"] = v.round_2;
                row["choice_1"] = to_string(v.choice_1);
                row["choice_2"] = to_string(v.choice_2);
                row["outcome"] = to_string(v.outcome);
            }
            run.audit.push_back(std::move(row));
        }
        run.reports.push_back(report);
    }
    return run;
}

JudgingRun run_judging(const std::map<std::string, search::FeatureSet>& sets_a,
                       const std::map<std::string, search::FeatureSet>& sets_b, const std::vector<Judge>& judges,
                       const TemplateLibrary& templates, const JudgeConfig& config) {
    return judge_pairs(form_pairs(sets_a, sets_b, config), judges, templates, config.workers);
}

std::string reports_csv(const std::vector<JudgeReport>& reports) {
    std::string out = "judge,wins_a,ties,wins_b,skipped\n";
    for (const auto& r : reports) {
        out += r.judge_model_id + "," + std::to_string(r.wins_a) + "," + std::to_string(r.ties) + "," +
               std::to_string(r.wins_b) + "," + std::to_string(r.skipped) + "\n";
    }
    return out;
}

}  // namespace recscale::judge
