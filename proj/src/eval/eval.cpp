#include "recscale/eval/eval.hpp"

#include "recscale/common/parallel.hpp"
#include "recscale/common/rng.hpp"
#include "recscale/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <set>
#include <stdexcept>

namespace recscale::eval {

using dataset::CandidateSet;
using dataset::ItemCatalog;
using dataset::UserSplit;
using nlohmann::json;

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::direct_ranking: return "dr";
        case TaskKind::in_context_learning: return "icl";
        case TaskKind::next_item_prediction: return "nip";
    }
    return "dr";
}

TaskKind task_from_string(std::string_view s) {
    if (s == "dr") return TaskKind::direct_ranking;
    if (s == "icl") return TaskKind::in_context_learning;
    if (s == "nip") return TaskKind::next_item_prediction;
    throw std::invalid_argument("unknown task: " + std::string(s));
}

void RecTask::validate() const {
    if ((kind == TaskKind::in_context_learning) != example.has_value()) {
        throw std::invalid_argument("a one-shot example is required for ICL and only for ICL");
    }
}

namespace {

const dataset::ItemInfo& lookup(const ItemCatalog& catalog, const std::string& id) {
    const auto it = catalog.find(id);
    if (it == catalog.end()) throw dataset::DatasetError("item missing from catalog: " + id);
    return it->second;
}

std::string history_block(const TemplateLibrary& templates, const UserSplit& split, const ItemCatalog& catalog) {
    std::string out;
    for (const auto& x : split.train) {
        if (!out.empty()) out += '\n';
        out += templates.render("rec_history_item",
                                {{"title", lookup(catalog, x.item_id).title}, {"rating", std::to_string(x.rating)}});
    }
    return out;
}

std::string candidate_line(const TemplateLibrary& templates, std::size_t index, const std::string& title) {
    return templates.render("rec_candidate", {{"index", std::to_string(index + 1)}, {"title", title}});
}

std::string candidate_block(const TemplateLibrary& templates, const CandidateSet& cs, const ItemCatalog& catalog) {
    std::string out;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        if (i) out += '\n';
        out += candidate_line(templates, i, lookup(catalog, cs.candidates[i]).title);
    }
    return out;
}

std::string features_section(const TemplateLibrary& templates, const search::FeatureSet* features) {
    if (!features || features->features.empty()) return "";
    std::string lines;
    for (const auto& f : features->features) {
        if (!lines.empty()) lines += '\n';
        lines += "- " + f.name + ": " + f.definition;
    }
    return templates.render("rec_features", {{"features", lines}});
}

// "[12] Title" -> (12, "Title"); no index -> (0, whole line).
std::pair<std::size_t, std::string> split_index(std::string_view line) {
    if (line.empty() || line.front() != '[') return {0, std::string(line)};
    std::size_t j = 1;
    std::size_t value = 0;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j])) && j < 8) {
        value = value * 10 + static_cast<std::size_t>(line[j] - '0');
        ++j;
    }
    if (j == 1 || j >= line.size() || line[j] != ']') return {0, std::string(line)};
    return {value, std::string(text::trim(line.substr(j + 1)))};
}

bool looks_like_item(std::string_view raw_line) {
    const std::string line = text::strip_emphasis(raw_line);
    if (text::has_list_marker(line)) return true;
    return split_index(text::strip_list_marker(line)).first > 0;
}

}  // namespace

OneShotExample make_example(const TemplateLibrary& templates, const std::vector<UserSplit>& users,
                            const ItemCatalog& catalog, std::size_t c, std::uint64_t seed) {
    if (users.empty()) throw std::invalid_argument("no users to draw the one-shot example from");
    SplitMix64 rng(derive_seed(seed, "icl/example"));
    const UserSplit& split = users[rng.bounded(users.size())];
    const CandidateSet cs = dataset::sample_candidates(split, catalog, c, derive_seed(seed, "icl/candidates"));
    OneShotExample ex;
    ex.user_id = split.user_id;
    ex.history = history_block(templates, split, catalog);
    ex.candidates = candidate_block(templates, cs, catalog);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        if (cs.candidates[i] == cs.ground_truth) order.insert(order.begin(), i);
        else order.push_back(i);
    }
    for (std::size_t i : order) {
        if (!ex.answer.empty()) ex.answer += '\n';
        ex.answer += candidate_line(templates, i, lookup(catalog, cs.candidates[i]).title);
    }
    return ex;
}

std::string build_rec_prompt(const TemplateLibrary& templates, const RecTask& task, const UserSplit& split,
                             const search::FeatureSet* features, const CandidateSet& candidates,
                             const ItemCatalog& catalog) {
    task.validate();
    std::map<std::string, std::string> values{{"history", history_block(templates, split, catalog)},
                                              {"features_section", features_section(templates, features)},
                                              {"candidates", candidate_block(templates, candidates, catalog)}};
    switch (task.kind) {
        case TaskKind::direct_ranking:
            values["candidate_count"] = std::to_string(candidates.candidates.size());
            return templates.render("rec_dr", values);
        case TaskKind::in_context_learning:
            values["candidate_count"] = std::to_string(candidates.candidates.size());
            values["example_history"] = task.example->history;
            values["example_candidates"] = task.example->candidates;
            values["example_answer"] = task.example->answer;
            return templates.render("rec_icl", values);
        case TaskKind::next_item_prediction:
            return templates.render("rec_nip", values);
    }
    throw std::invalid_argument("unknown task");
}

RankingOutput parse_ranking(std::string_view raw, const CandidateSet& candidates, const ItemCatalog& catalog,
                            TaskKind kind) {
    RankingOutput out;
    out.raw_text = std::string(raw);
    const auto lines = text::split_lines(raw);
    bool any_marked = false;
    for (auto line : lines) any_marked |= looks_like_item(line);

    bool foreign = false;
    std::size_t item_lines = 0;
    for (auto raw_line : lines) {
        const std::string cleaned = text::strip_emphasis(raw_line);
        if (cleaned.empty()) continue;
        if (any_marked ? !looks_like_item(cleaned) : cleaned.back() == ':') continue;
        ++item_lines;
        const auto [index, title] = split_index(text::strip_list_marker(cleaned));
        std::optional<std::size_t> hit;
        for (std::size_t i = 0; i < candidates.candidates.size() && !hit; ++i) {
            if (text::iequals(text::trim(title), lookup(catalog, candidates.candidates[i]).title)) hit = i;
        }
        if (!hit && index >= 1 && index <= candidates.candidates.size()) hit = index - 1;
        if (!hit) {
            foreign = true;
            continue;
        }
        out.ordered_items.push_back(candidates.candidates[*hit]);
    }

    if (kind == TaskKind::next_item_prediction) {
        out.compliant = !foreign && item_lines == 1 && out.ordered_items.size() == 1;
        return out;
    }
    std::set<std::string> seen(out.ordered_items.begin(), out.ordered_items.end());
    out.compliant = !foreign && seen.size() == out.ordered_items.size() &&
                    out.ordered_items.size() == candidates.candidates.size();
    return out;
}

std::size_t rank_of(const RankingOutput& ranking, const std::string& truth) {
    if (!ranking.compliant) return 0;
    const auto it = std::find(ranking.ordered_items.begin(), ranking.ordered_items.end(), truth);
    return it == ranking.ordered_items.end() ? 0 : static_cast<std::size_t>(it - ranking.ordered_items.begin()) + 1;
}

double ndcg_at_k(const RankingOutput& ranking, const std::string& truth, int k) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    const auto r = rank_of(ranking, truth);
    if (r == 0 || r > static_cast<std::size_t>(k)) return 0.0;
    return 1.0 / std::log2(1.0 + static_cast<double>(r));
}

double hit_at_k(const RankingOutput& ranking, const std::string& truth, int k) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    const auto r = rank_of(ranking, truth);
    return r != 0 && r <= static_cast<std::size_t>(k) ? 1.0 : 0.0;
}

Metrics aggregate(const std::vector<UserOutcome>& outcomes, TaskKind kind, const std::vector<int>& ks,
                  bool exclude_noncompliant) {
    Metrics m;
    m.users = outcomes.size();
    std::size_t compliant = 0;
    double nip = 0;
    for (int k : ks) {
        m.ndcg_at[k] = 0;
        m.hit_at[k] = 0;
    }
    for (const auto& o : outcomes) {
        if (o.ranking.compliant) ++compliant;
        if (kind == TaskKind::next_item_prediction) {
            nip += o.ranking.compliant && o.ranking.ordered_items.front() == o.ground_truth ? 1.0 : 0.0;
            continue;
        }
        for (int k : ks) {
            m.ndcg_at[k] += ndcg_at_k(o.ranking, o.ground_truth, k);
            m.hit_at[k] += hit_at_k(o.ranking, o.ground_truth, k);
        }
    }
    const double denom = static_cast<double>(exclude_noncompliant ? compliant : outcomes.size());
    auto mean = [&](double sum) { return denom > 0 ? sum / denom : 0.0; };
    m.valid_rate = outcomes.empty() ? 0.0 : static_cast<double>(compliant) / static_cast<double>(outcomes.size());
    if (kind == TaskKind::next_item_prediction) {
        m.ndcg_at.clear();
        m.hit_at.clear();
        m.nip_hit = mean(nip);
    } else {
        for (int k : ks) {
            m.ndcg_at[k] = mean(m.ndcg_at[k]);
            m.hit_at[k] = mean(m.hit_at[k]);
        }
    }
    return m;
}

Metrics mean_of(const std::vector<Metrics>& repeats) {
    Metrics m;
    if (repeats.empty()) return m;
    const double n = static_cast<double>(repeats.size());
    for (const auto& r : repeats) {
        m.valid_rate += r.valid_rate / n;
        for (const auto& [k, v] : r.ndcg_at) m.ndcg_at[k] += v / n;
        for (const auto& [k, v] : r.hit_at) m.hit_at[k] += v / n;
        if (r.nip_hit) m.nip_hit = m.nip_hit.value_or(0.0) + *r.nip_hit / n;
        m.users = std::max(m.users, r.users);
    }
    return m;
}

json to_json(const UserOutcome& o) {
    return {{"user_id", o.user_id},
            {"ground_truth", o.ground_truth},
            {"items", o.ranking.ordered_items},
            {"compliant", o.ranking.compliant},
            {"raw_text", o.ranking.raw_text}};
}

UserOutcome outcome_from_json(const json& j) {
    UserOutcome o;
    o.user_id = j.at("user_id").get<std::string>();
    o.ground_truth = j.at("ground_truth").get<std::string>();
    o.ranking.ordered_items = j.at("items").get<std::vector<std::string>>();
    o.ranking.compliant = j.at("compliant").get<bool>();
    o.ranking.raw_text = j.value("raw_text", "");
    return o;
}

namespace {

std::vector<UserOutcome> load_outcomes(const fs::path& path) {
    std::vector<UserOutcome> out;
    if (!fs::exists(path)) return out;
    for (const auto& rec : read_jsonl(path).records) out.push_back(outcome_from_json(rec.value));
    return out;
}

void store_outcomes(const fs::path& path, const std::vector<UserOutcome>& outcomes) {
    std::vector<json> rows;
    for (const auto& o : outcomes) rows.push_back(to_json(o));
    write_file_atomic(path, to_jsonl(rows));
}

}  // namespace

EvalResult evaluate(llm::Gateway& gateway, const TemplateLibrary& templates, const std::vector<UserSplit>& users,
                    const ItemCatalog& catalog, const RecTask& task,
                    const std::map<std::string, search::FeatureSet>* features_by_user, const EvalConfig& config,
                    const std::optional<fs::path>& checkpoint_dir) {
    task.validate();
    if (config.seeds.empty()) throw std::invalid_argument("eval needs at least one repeat seed");
    if (checkpoint_dir) fs::create_directories(*checkpoint_dir);

    EvalResult result;
    result.kind = task.kind;
    result.repeats = static_cast<int>(config.seeds.size());
    for (std::size_t r = 0; r < config.seeds.size(); ++r) {
        const auto tag = "repeat_" + std::to_string(r);
        const auto done_path = checkpoint_dir ? *checkpoint_dir / (tag + ".jsonl") : fs::path();
        const auto partial_path = checkpoint_dir ? *checkpoint_dir / (tag + ".partial.jsonl") : fs::path();

        std::vector<UserOutcome> outcomes;
        if (checkpoint_dir && fs::exists(done_path)) {
            outcomes = load_outcomes(done_path);
        } else {
            std::map<std::string, UserOutcome> finished;
            if (checkpoint_dir) {
                for (auto& o : load_outcomes(partial_path)) finished.emplace(o.user_id, std::move(o));
            }
            std::vector<const UserSplit*> todo;
            for (const auto& u : users) {
                if (!finished.count(u.user_id)) todo.push_back(&u);
            }
            struct Attempt {
                std::optional<UserOutcome> outcome;
                std::exception_ptr error;
            };
            const auto attempts = parallel_map(todo.size(), config.workers, [&](std::size_t i) {
                Attempt a;
                try {
                    const UserSplit& split = *todo[i];
                    const CandidateSet cs = dataset::sample_candidates(
                        split, catalog, config.c, dataset::candidate_seed(config.seeds[r], split.user_id));
                    const search::FeatureSet* features = nullptr;
                    if (features_by_user) {
                        const auto it = features_by_user->find(split.user_id);
                        if (it != features_by_user->end()) features = &it->second;
                    }
                    const auto prompt = build_rec_prompt(templates, task, split, features, cs, catalog);
                    const auto reply = gateway.complete(llm::single_turn(config.model_id, prompt, config.temperature,
                                                                         config.max_tokens, static_cast<std::int64_t>(r)));
                    a.outcome = UserOutcome{split.user_id, cs.ground_truth,
                                            parse_ranking(reply.text, cs, catalog, task.kind)};
                } catch (...) {
                    a.error = std::current_exception();
                }
                return a;
            });
            std::exception_ptr first_error;
            for (const auto& a : attempts) {
                if (a.outcome) finished.emplace(a.outcome->user_id, *a.outcome);
                if (a.error && !first_error) first_error = a.error;
            }
            for (const auto& u : users) {
                if (finished.count(u.user_id)) outcomes.push_back(finished.at(u.user_id));
            }
            if (first_error) {
                if (checkpoint_dir) store_outcomes(partial_path, outcomes);
                std::rethrow_exception(first_error);
            }
            if (checkpoint_dir) {
                store_outcomes(done_path, outcomes);
                fs::remove(partial_path);
            }
        }
        result.per_repeat.push_back(aggregate(outcomes, task.kind, config.ks, config.exclude_noncompliant));
    }
    result.mean = mean_of(result.per_repeat);
    return result;
}

json to_json(const Metrics& m) {
    json j{{"valid_rate", m.valid_rate}, {"users", m.users}};
    json ndcg = json::object();
    json hit = json::object();
    for (const auto& [k, v] : m.ndcg_at) ndcg[std::to_string(k)] = v;
    for (const auto& [k, v] : m.hit_at) hit[std::to_string(k)] = v;
    j["ndcg_at"] = ndcg;
    j["hit_at"] = hit;
    if (m.nip_hit) j["nip_hit"] = *m.nip_hit;
    return j;
}

json to_json(const EvalResult& r) {
    json per = json::array();
    for (const auto& m : r.per_repeat) per.push_back(to_json(m));
    return {{"task", to_string(r.kind)}, {"repeats", r.repeats}, {"mean", to_json(r.mean)}, {"per_repeat", per}};
}

CorrelationFit fit_correlation(const std::vector<FitPoint>& points) {
    if (points.size() < 2) throw std::invalid_argument("correlation fit needs at least two points");
    const double n = static_cast<double>(points.size());
    double mx = 0, my = 0;
    for (const auto& p : points) {
        if (!(p.count > 0)) throw std::invalid_argument("counts must be positive for a log10 fit");
        mx += std::log10(p.count) / n;
        my += p.metric / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : points) {
        const double dx = std::log10(p.count) - mx;
        const double dy = p.metric - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0) throw std::invalid_argument("all counts are equal; slope undefined");
    CorrelationFit fit;
    fit.points = points;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r = syy == 0 ? 0.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return fit;
}

double improvement(double value, double baseline) {
    if (baseline == 0) throw std::invalid_argument("baseline must be non-zero");
    return (value - baseline) / baseline * 100.0;
}

}  // namespace recscale::eval
