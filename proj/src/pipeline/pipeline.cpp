#include "recscale/pipeline/pipeline.hpp"

#include "recscale/common/parallel.hpp"
#include "recscale/common/text.hpp"
#include "recscale/dedup/dedup.hpp"
#include "recscale/eval/eval.hpp"
#include "recscale/judge/judge.hpp"
#include "recscale/llm/http_backend.hpp"
#include "recscale/llm/mock_backends.hpp"
#include "recscale/pipeline/report.hpp"
#include "recscale/search/strategies.hpp"

#include <algorithm>
#include <iostream>

namespace recscale::pipeline {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> out;
    const std::string content = read_file(path);
    for (auto line : text::split_lines(content)) {
        if (!text::trim(line).empty()) out.emplace_back(line);
    }
    return out;
}

json read_json(const fs::path& path) { return json::parse(read_file(path)); }

eval::Metrics metrics_from_json(const json& j) {
    eval::Metrics m;
    m.valid_rate = j.at("valid_rate").get<double>();
    m.users = j.at("users").get<std::size_t>();
    for (const auto& [k, v] : j.at("ndcg_at").items()) m.ndcg_at[std::stoi(k)] = v.get<double>();
    for (const auto& [k, v] : j.at("hit_at").items()) m.hit_at[std::stoi(k)] = v.get<double>();
    if (j.contains("nip_hit")) m.nip_hit = j.at("nip_hit").get<double>();
    return m;
}

std::string eval_dir(const std::string& source_key, eval::TaskKind task) {
    return "eval/" + source_key + "/" + eval::to_string(task);
}

}  // namespace

std::string Source::key() const { return slug(policy.model) + "/" + search::to_string(strategy); }

Pipeline::Pipeline(RunConfig config, Options options) : config_(std::move(config)), options_(std::move(options)) {
    templates_ = config_.templates_dir.empty() ? TemplateLibrary::load_default()
                                               : TemplateLibrary::load(config_.resolve(config_.templates_dir));
    run_ = std::make_unique<RunDir>(config_.resolve(config_.runs_root) / config_.run_id, config_,
                                    templates_.content_hash());
}

void Pipeline::log(const std::string& line) const {
    if (options_.log) {
        options_.log(line);
    } else {
        std::cerr << line << "\n";
    }
}

llm::Gateway& Pipeline::gateway(const std::string& name) {
    if (auto it = gateways_.find(name); it != gateways_.end()) return *it->second;
    const auto found = config_.backends.find(name);
    if (found == config_.backends.end()) throw ConfigError("unknown backend " + name);
    const auto& entry = found->second;
    std::shared_ptr<llm::Backend> backend;
    if (entry.kind == "openai") {
        backend = std::make_shared<llm::OpenAiHttpBackend>(
            llm::HttpBackendConfig{entry.base_url, entry.api_key_env, entry.timeout_s, {}});
    } else if (entry.kind == "simulated") {
        backend = std::make_shared<llm::SimulatedBackend>(entry.embedding_dim);
    } else {
        backend = std::make_shared<llm::PlaybackBackend>(config_.resolve(entry.transcript));
    }
    if (!entry.record.empty()) {
        auto recorder = std::make_shared<llm::RecordingBackend>(backend, config_.resolve(entry.record));
        recorders_.push_back(recorder);
        backend = recorder;
    }
    auto cache = config_.cache_dir.empty()
                     ? std::make_shared<llm::ResponseCache>()
                     : std::make_shared<llm::ResponseCache>(config_.resolve(config_.cache_dir) / name);
    llm::GatewayOptions opts;
    opts.max_parallel = entry.max_parallel;
    auto gw = std::make_shared<llm::Gateway>(backend, cache, opts);
    gateways_[name] = gw;
    return *gw;
}

void Pipeline::save_recordings() {
    for (const auto& r : recorders_) r->save();
}

std::vector<Source> Pipeline::sources() const {
    std::vector<Source> out;
    for (const auto& p : config_.policies) {
        for (auto s : config_.strategies) out.push_back({p, s});
    }
    return out;
}

std::vector<dataset::UserSplit> Pipeline::load_splits() const {
    std::vector<dataset::UserSplit> out;
    for (const auto& line : read_lines(run_->path("splits/splits.jsonl"))) {
        out.push_back(dataset::split_from_json(json::parse(line)));
    }
    return out;
}

dataset::ItemCatalog Pipeline::load_catalog() const {
    return dataset::load_catalog(run_->path("splits/catalog.jsonl")).catalog;
}

std::map<std::string, search::FeatureSet> Pipeline::load_features(const Source& source) const {
    std::map<std::string, search::FeatureSet> out;
    for (const auto& line : read_lines(run_->path("features/" + source.key() + ".jsonl"))) {
        auto set = search::feature_set_from_json(json::parse(line));
        out[set.user_id] = std::move(set);
    }
    return out;
}

void Pipeline::ingest() {
    if (run_->complete("ingest")) {
        log("[ingest] skipped: stage already complete");
        return;
    }
    auto interactions = dataset::load_interactions(config_.resolve(config_.interactions));
    auto catalog = dataset::load_catalog(config_.resolve(config_.catalog));
    for (const auto& e : interactions.errors) log("[ingest] interactions line " + std::to_string(e.line) + ": " + e.message);
    for (const auto& e : catalog.errors) log("[ingest] catalog line " + std::to_string(e.line) + ": " + e.message);
    const auto missing = dataset::missing_catalog_items(interactions.interactions, catalog.catalog);
    if (!missing.empty()) {
        throw dataset::DatasetError(std::to_string(missing.size()) + " interacted items are missing from the catalog, e.g. " +
                                    missing.front());
    }
    const auto split = dataset::build_splits(interactions.interactions, config_.min_history);
    if (split.splits.empty()) throw dataset::DatasetError("no user has at least min_history interactions");

    fs::create_directories(run_->path("splits"));
    std::vector<std::string> rows;
    for (const auto& s : split.splits) rows.push_back(dataset::to_json(s).dump());
    write_file_atomic(run_->path("splits/splits.jsonl"), join_lines(rows));
    rows.clear();
    for (const auto& [id, info] : catalog.catalog) {
        rows.push_back(json{{"item", id}, {"title", info.title}, {"description", info.description}}.dump());
    }
    write_file_atomic(run_->path("splits/catalog.jsonl"), join_lines(rows));
    const json summary = {{"users", split.splits.size()},
                          {"dropped_users", split.dropped_users},
                          {"collapsed_repeats", split.collapsed_repeats},
                          {"interactions", interactions.interactions.size()},
                          {"skipped_interaction_lines", interactions.skipped},
                          {"catalog_items", catalog.catalog.size()},
                          {"skipped_catalog_lines", catalog.skipped},
                          {"min_history", config_.min_history}};
    write_file_atomic(run_->path("splits/summary.json"), summary.dump(2) + "\n");
    run_->mark("ingest", {"splits/splits.jsonl", "splits/catalog.jsonl", "splits/summary.json"});
    log("[ingest] " + std::to_string(split.splits.size()) + " users, " + std::to_string(split.dropped_users) +
        " dropped");
}

void Pipeline::features() {
    run_->require("ingest", "features");
    std::vector<Source> selected;
    if (options_.policy) {
        const bool known = std::any_of(config_.policies.begin(), config_.policies.end(),
                                       [&](const ModelRef& p) { return p.model == *options_.policy; });
        if (!known) throw ConfigError("policy " + *options_.policy + " is not listed in [[policies]]");
    }
    for (const auto& p : config_.policies) {
        if (options_.policy && p.model != *options_.policy) continue;
        if (options_.strategy) {
            selected.push_back({p, *options_.strategy});
        } else {
            for (auto s : config_.strategies) selected.push_back({p, s});
        }
    }
    for (const auto& source : selected) {
        if (run_->complete("features/" + source.key())) {
            log("[features] " + source.key() + " skipped: stage already complete");
            continue;
        }
        search_source(source);
    }
}

void Pipeline::search_source(const Source& source) {
    const auto splits = load_splits();
    const auto catalog = load_catalog();
    auto& policy_gw = gateway(source.policy.backend);
    auto& reward_gw = gateway(config_.reward.backend);
    const search::SearchModelIds ids{source.policy.model,
                                     config_.reward.model,
                                     {source.policy.temperature, source.policy.max_tokens},
                                     {config_.reward.temperature, config_.reward.max_tokens}};

    const std::string rel_final = "features/" + source.key() + ".jsonl";
    const std::string rel_partial = "features/" + source.key() + ".partial.jsonl";
    const auto partial = run_->path(rel_partial);
    fs::create_directories(partial.parent_path());

    // Keep the checkpointed prefix that matches the user order; a torn or
    // foreign trailing line is dropped and recomputed.
    std::vector<std::string> kept;
    if (fs::exists(partial)) {
        for (const auto& line : read_lines(partial)) {
            if (kept.size() >= splits.size()) break;
            try {
                const auto j = json::parse(line);
                if (j.at("user_id").get<std::string>() != splits[kept.size()].user_id) break;
            } catch (const json::exception&) {
                break;
            }
            kept.push_back(line);
        }
        log("[features] " + source.key() + " resuming after " + std::to_string(kept.size()) + " users");
    }
    write_file_atomic(partial, join_lines(kept));

    std::size_t done = kept.size();
    std::size_t appended = 0;
    const std::size_t chunk = std::max<std::size_t>(1, config_.user_workers);
    while (done < splits.size()) {
        const std::size_t n = std::min(chunk, splits.size() - done);
        std::vector<std::exception_ptr> errors(n);
        auto results = parallel_map(n, n, [&](std::size_t i) {
            search::FeatureSet set;
            try {
                const auto profile = dataset::partition_preferences(splits[done + i], config_.rating_threshold);
                set = search::search_user(source.strategy, profile, catalog, templates_, policy_gw, reward_gw, ids,
                                          config_.search);
            } catch (...) {
                errors[i] = std::current_exception();
            }
            return set;
        });
        for (std::size_t i = 0; i < n; ++i) {
            if (errors[i]) std::rethrow_exception(errors[i]);
            append_line(partial, search::to_json(results[i]).dump());
            ++done;
            ++appended;
            if (options_.stop_after > 0 && appended >= options_.stop_after && done < splits.size()) {
                throw Interrupted("stopped after " + std::to_string(appended) + " users of " + source.key());
            }
        }
    }
    write_file_atomic(run_->path(rel_final), read_file(partial));
    fs::remove(partial);
    run_->mark("features/" + source.key(), {rel_final});
    log("[features] " + source.key() + " done, " + std::to_string(splits.size()) + " users");
}

void Pipeline::dedup() {
    for (const auto& s : sources()) run_->require("features/" + s.key(), "dedup");
    if (run_->complete("dedup")) {
        log("[dedup] skipped: stage already complete");
        return;
    }
    auto& gw = gateway(config_.embedding.backend);
    for (const auto& source : sources()) {
        const auto sets = load_features(source);
        std::vector<search::Feature> features;
        std::vector<std::string> owners;
        for (const auto& [user, set] : sets) {
            for (const auto& f : set.features) {
                features.push_back(f);
                owners.push_back(user);
            }
        }
        const auto embedded = dedup::embed_features(gw, config_.embedding.model, features);
        std::vector<dedup::Vector> points;
        for (const auto& e : embedded) points.push_back(e.vector);
        const auto report = dedup::deduplicate(points, config_.dedup);

        const std::string dir = "dedup/" + source.key();
        fs::create_directories(run_->path(dir));
        json summary = dedup::summary_json(report);
        summary["policy"] = source.policy.model;
        summary["strategy"] = search::to_string(source.strategy);
        summary["users"] = sets.size();
        write_file_atomic(run_->path(dir + "/summary.json"), summary.dump(2) + "\n");
        write_file_atomic(run_->path(dir + "/growth.csv"), dedup::growth_csv(report.growth));
        std::vector<std::string> rows;
        for (std::size_t i = 0; i < features.size(); ++i) {
            rows.push_back(json{{"user_id", owners[i]}, {"name", features[i].name}, {"label", report.labels[i]}}.dump());
        }
        write_file_atomic(run_->path(dir + "/clusters.jsonl"), join_lines(rows));
        log("[dedup] " + source.key() + ": " + std::to_string(report.unique_count) + " unique of " +
            std::to_string(report.total_valid));
    }
    run_->mark("dedup", files_under(run_->root(), "dedup"));
}

void Pipeline::eval() {
    run_->require("ingest", "eval");
    for (const auto& s : sources()) run_->require("features/" + s.key(), "eval");
    if (run_->complete("eval")) {
        log("[eval] skipped: stage already complete");
        return;
    }
    const auto splits = load_splits();
    const auto catalog = load_catalog();
    auto& gw = gateway(config_.recommender.backend);

    eval::EvalConfig ec;
    ec.model_id = config_.recommender.model;
    ec.c = config_.eval.c;
    ec.ks = config_.eval.ks;
    ec.seeds = config_.eval.seeds;
    ec.exclude_noncompliant = config_.eval.exclude_noncompliant;
    ec.workers = config_.eval.workers;
    ec.temperature = config_.recommender.temperature;
    ec.max_tokens = config_.eval.max_tokens;

    // The one-shot example user is left out of the ICL population only.
    std::optional<eval::OneShotExample> example;
    std::vector<dataset::UserSplit> icl_users;
    const bool wants_icl = std::find(config_.eval.tasks.begin(), config_.eval.tasks.end(),
                                     eval::TaskKind::in_context_learning) != config_.eval.tasks.end();
    if (wants_icl) {
        example = eval::make_example(templates_, splits, catalog, config_.eval.c, config_.eval.icl_seed);
        for (const auto& s : splits) {
            if (s.user_id != example->user_id) icl_users.push_back(s);
        }
    }

    std::vector<std::pair<std::string, std::optional<Source>>> all{{"baseline", std::nullopt}};
    for (const auto& s : sources()) all.emplace_back(s.key(), s);
    for (const auto& [key, source] : all) {
        std::optional<std::map<std::string, search::FeatureSet>> features;
        if (source) features = load_features(*source);
        for (auto kind : config_.eval.tasks) {
            eval::RecTask task{kind, kind == eval::TaskKind::in_context_learning ? example : std::optional<eval::OneShotExample>{}};
            const auto& users = kind == eval::TaskKind::in_context_learning ? icl_users : splits;
            const std::string dir = eval_dir(key, kind);
            fs::create_directories(run_->path(dir));
            const auto result = eval::evaluate(gw, templates_, users, catalog, task, features ? &*features : nullptr,
                                               ec, run_->path(dir));
            write_file_atomic(run_->path(dir + "/result.json"), eval::to_json(result).dump(2) + "\n");
            log("[eval] " + key + " " + eval::to_string(kind) + " valid rate " +
                text::fixed(result.mean.valid_rate, 3));
        }
    }
    run_->mark("eval", files_under(run_->root(), "eval"));
}

void Pipeline::judge() {
    if (config_.judges.empty()) {
        log("[judge] skipped: no judges configured");
        return;
    }
    if (config_.judge.model_a.empty() || config_.judge.model_b.empty()) {
        throw ConfigError("[judge] needs model_a and model_b");
    }
    auto find_policy = [&](const std::string& id) {
        for (const auto& p : config_.policies) {
            if (p.model == id) return Source{p, config_.judge.strategy};
        }
        throw ConfigError("judge model " + id + " is not listed in [[policies]]");
    };
    const Source a = find_policy(config_.judge.model_a);
    const Source b = find_policy(config_.judge.model_b);
    run_->require("features/" + a.key(), "judge");
    run_->require("features/" + b.key(), "judge");
    if (run_->complete("judge")) {
        log("[judge] skipped: stage already complete");
        return;
    }
    std::vector<judge::Judge> judges;
    for (const auto& j : config_.judges) judges.push_back({&gateway(j.backend), j.model});
    const judge::JudgeConfig jc{config_.judge.sample_size, config_.judge.pairing_seed, config_.judge.workers};
    const auto sets_a = load_features(a);
    const auto sets_b = load_features(b);
    const auto pairs = judge::form_pairs(sets_a, sets_b, jc);
    const auto outcome = judge::judge_pairs(pairs, judges, templates_, jc.workers);

    fs::create_directories(run_->path("judge"));
    write_file_atomic(run_->path("judge/reports.csv"), judge::reports_csv(outcome.reports));
    std::vector<std::string> rows;
    for (const auto& row : outcome.audit) rows.push_back(row.dump());
    write_file_atomic(run_->path("judge/audit.jsonl"), join_lines(rows));
    const json summary = {{"model_a", a.policy.model},
                          {"model_b", b.policy.model},
                          {"strategy", search::to_string(a.strategy)},
                          {"pairs", pairs.size()}};
    write_file_atomic(run_->path("judge/summary.json"), summary.dump(2) + "\n");
    run_->mark("judge", {"judge/audit.jsonl", "judge/reports.csv", "judge/summary.json"});
    log("[judge] " + std::to_string(pairs.size()) + " pairs judged by " + std::to_string(judges.size()) + " judges");
}

void Pipeline::report() {
    run_->require("ingest", "report");
    run_->require("dedup", "report");
    run_->require("eval", "report");
    if (run_->complete("report")) {
        log("[report] skipped: stage already complete");
        return;
    }
    ReportInputs in;
    in.provenance = provenance_lines(config_, config_.hash(), templates_.content_hash());
    in.dataset_summary = read_json(run_->path("splits/summary.json"));
    in.layout = {config_.eval.tasks, config_.eval.ks};

    auto row_for = [&](const std::string& key, std::string label) {
        SourceMetrics row;
        row.label = std::move(label);
        for (auto kind : config_.eval.tasks) {
            const auto j = read_json(run_->path(eval_dir(key, kind) + "/result.json"));
            row.by_task[kind] = metrics_from_json(j.at("mean"));
        }
        return row;
    };
    in.rows.push_back(row_for("baseline", "w/o features"));

    std::string growth = "policy,strategy,total,unique\n";
    for (const auto& source : sources()) {
        const std::string strategy = search::to_string(source.strategy);
        auto row = row_for(source.key(), source.policy.model + " / " + strategy);
        row.policy = source.policy.model;
        row.strategy = strategy;

        const auto summary = read_json(run_->path("dedup/" + source.key() + "/summary.json"));
        FeatureStats stats{source.policy.model, strategy};
        for (const auto& [user, set] : load_features(source)) {
            ++stats.users;
            if (set.failed) ++stats.failed;
            if (set.note == "degenerate_profile") ++stats.degenerate;
        }
        stats.valid_features = summary.at("total_valid").get<std::size_t>();
        stats.unique_features = summary.at("unique_count").get<std::size_t>();
        in.features.push_back(stats);

        const auto metric = headline_metric(row, in.layout);
        if (metric) in.scatter.push_back({source.policy.model, strategy, stats.unique_features, *metric});

        const auto growth_rows = read_lines(run_->path("dedup/" + source.key() + "/growth.csv"));
        for (std::size_t i = 1; i < growth_rows.size(); ++i) {
            growth += source.policy.model + "," + strategy + "," + growth_rows[i] + "\n";
        }
        in.rows.push_back(std::move(row));
    }
    in.fit = fit_json(in.scatter, headline_name(in.layout));

    if (run_->complete("judge")) {
        const auto summary = read_json(run_->path("judge/summary.json"));
        JudgeSummary js;
        js.model_a = summary.at("model_a").get<std::string>();
        js.model_b = summary.at("model_b").get<std::string>();
        js.strategy = summary.at("strategy").get<std::string>();
        js.pairs = summary.at("pairs").get<std::size_t>();
        const auto report_rows = read_lines(run_->path("judge/reports.csv"));
        for (std::size_t i = 1; i < report_rows.size(); ++i) {
            const auto& line = report_rows[i];
            std::vector<std::string> f;
            std::string cur;
            for (char c : line) {
                if (c == ',') {
                    f.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            f.push_back(cur);
            if (f.size() != 5) continue;
            js.reports.push_back({f[0], std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4])});
        }
        in.judging = js;
    }

    fs::create_directories(run_->path("report"));
    write_file_atomic(run_->path("report/table1.csv"), table1_csv(in.rows, in.layout));
    write_file_atomic(run_->path("report/table1.md"), table1_markdown(in.rows, in.layout));
    write_file_atomic(run_->path("report/scatter.csv"), scatter_csv(in.scatter, headline_name(in.layout)));
    write_file_atomic(run_->path("report/fit.json"), in.fit.dump(2) + "\n");
    write_file_atomic(run_->path("report/growth.csv"), growth);
    write_file_atomic(run_->path("report/report.md"), render_report(in));
    run_->mark("report", files_under(run_->root(), "report"));
    log("[report] written to " + run_->path("report/report.md").string());
}

void Pipeline::all() {
    ingest();
    features();
    dedup();
    eval();
    judge();
    report();
}

int run_command(const std::string& command, const RunConfig& config, const Options& options) {
    std::unique_ptr<Pipeline> pipeline;
    auto fail = [&](int code, const std::string& what) {
        if (pipeline) pipeline->save_recordings();
        std::cerr << "error: " << what << "\n";
        return code;
    };
    try {
        pipeline = std::make_unique<Pipeline>(config, options);
        if (command == "ingest") {
            pipeline->ingest();
        } else if (command == "features") {
            pipeline->features();
        } else if (command == "dedup") {
            pipeline->dedup();
        } else if (command == "eval") {
            pipeline->eval();
        } else if (command == "judge") {
            pipeline->judge();
        } else if (command == "report") {
            pipeline->report();
        } else if (command == "all") {
            pipeline->all();
        } else {
            throw ConfigError("unknown command " + command);
        }
        pipeline->save_recordings();
        return exit_ok;
    } catch (const ConfigError& e) {
        return fail(exit_config, e.what());
    } catch (const TemplateError& e) {
        return fail(exit_config, e.what());
    } catch (const dataset::DatasetError& e) {
        return fail(exit_config, e.what());
    } catch (const StageMissing& e) {
        return fail(exit_upstream_missing, e.what());
    } catch (const Interrupted& e) {
        return fail(exit_interrupted, e.what());
    } catch (const llm::GatewayError& e) {
        return fail(exit_backend, e.what());
    } catch (const std::exception& e) {
        return fail(exit_failure, e.what());
    }
}

}  // namespace recscale::pipeline
