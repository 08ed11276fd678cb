#include "recscale/pipeline/config.hpp"

#include "recscale/common/hashing.hpp"
#include "recscale/common/text.hpp"

#include <toml++/toml.hpp>

#include <set>
#include <sstream>

namespace recscale::pipeline {

using nlohmann::json;

namespace {

json to_json_value(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = to_json_value(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(to_json_value(v));
        return out;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* d = node.as_floating_point()) return d->get();
    if (const auto* b = node.as_boolean()) return b->get();
    // Dates and times are kept as their TOML text.
    std::ostringstream os;
    node.visit([&](const auto& v) { os << v; });
    return os.str();
}

json parse_override_value(const std::string& raw) {
    try {
        const auto doc = toml::parse("v = " + raw);
        return to_json_value(*doc.get("v"));
    } catch (const toml::parse_error&) {
        return raw;
    }
}

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
    const std::string key(text::trim(std::string_view(assignment).substr(0, eq)));
    const std::string value(text::trim(std::string_view(assignment).substr(eq + 1)));
    json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("bad override key: " + key);
        if (!node->is_object()) throw ConfigError("override path crosses a non-table value: " + key);
        if (dot == std::string::npos) {
            (*node)[part] = parse_override_value(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

// Typed accessor with a default; wrong types become ConfigError naming the key.
template <typename T>
T get_or(const json& table, const std::string& section, const std::string& key, T fallback) {
    if (!table.is_object() || !table.contains(key)) return fallback;
    try {
        return table.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key " + (section.empty() ? "" : section + ".") + key + " has the wrong type");
    }
}

const json& section(const json& root, const std::string& name) {
    static const json empty = json::object();
    if (!root.contains(name)) return empty;
    if (!root.at(name).is_object()) throw ConfigError("[" + name + "] must be a table");
    return root.at(name);
}

ModelRef model_ref(const json& j, const std::string& where, double temperature, int max_tokens) {
    if (!j.is_object()) throw ConfigError(where + " must be a table with backend and model");
    ModelRef m;
    m.backend = get_or<std::string>(j, where, "backend", "");
    m.model = get_or<std::string>(j, where, "model", "");
    m.temperature = get_or<double>(j, where, "temperature", temperature);
    m.max_tokens = get_or<int>(j, where, "max_tokens", max_tokens);
    if (m.backend.empty() || m.model.empty()) throw ConfigError(where + " needs both backend and model");
    return m;
}

json model_json(const ModelRef& m) {
    return {{"backend", m.backend}, {"model", m.model}, {"temperature", m.temperature}, {"max_tokens", m.max_tokens}};
}

void check_keys(const json& table, const std::string& where, const std::set<std::string>& known) {
    if (!table.is_object()) return;
    for (const auto& [k, v] : table.items()) {
        if (!known.count(k)) throw ConfigError("unknown config key " + where + (where.empty() ? "" : ".") + k);
    }
}

}  // namespace

std::string slug(const std::string& model_id) {
    std::string out;
    for (char c : model_id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "_" : out;
}

RunConfig config_from_json(const json& root, const fs::path& base_dir) {
    check_keys(root, "", {"run", "dataset", "backends", "policies", "reward", "recommender", "embedding", "judges",
                          "features", "search", "dedup", "eval", "judge", "cache"});
    RunConfig c;
    c.base_dir = base_dir;

    const auto& run = section(root, "run");
    check_keys(run, "run", {"id", "root", "templates"});
    c.run_id = get_or<std::string>(run, "run", "id", "default");
    c.runs_root = get_or<std::string>(run, "run", "root", "runs");
    c.templates_dir = get_or<std::string>(run, "run", "templates", "");

    const auto& ds = section(root, "dataset");
    check_keys(ds, "dataset", {"interactions", "catalog", "min_history", "rating_threshold"});
    c.interactions = get_or<std::string>(ds, "dataset", "interactions", "");
    c.catalog = get_or<std::string>(ds, "dataset", "catalog", "");
    c.min_history = get_or<int>(ds, "dataset", "min_history", 5);
    c.rating_threshold = get_or<int>(ds, "dataset", "rating_threshold", 4);
    if (c.interactions.empty() || c.catalog.empty()) throw ConfigError("[dataset] needs interactions and catalog");
    if (c.min_history < 2) throw ConfigError("dataset.min_history must be at least 2");
    if (c.rating_threshold < 1 || c.rating_threshold > 5) throw ConfigError("dataset.rating_threshold must be 1..5");

    const auto& backends = section(root, "backends");
    for (const auto& [name, b] : backends.items()) {
        const std::string where = "backends." + name;
        check_keys(b, where, {"kind", "base_url", "api_key_env", "timeout_s", "max_parallel", "transcript", "record",
                              "embedding_dim"});
        BackendSpec s;
        s.name = name;
        s.kind = get_or<std::string>(b, where, "kind", "");
        s.base_url = get_or<std::string>(b, where, "base_url", "https://api.openai.com/v1");
        s.api_key_env = get_or<std::string>(b, where, "api_key_env", s.kind == "openai" ? "OPENAI_API_KEY" : "");
        s.timeout_s = get_or<double>(b, where, "timeout_s", 60.0);
        s.max_parallel = get_or<std::size_t>(b, where, "max_parallel", 4);
        s.transcript = get_or<std::string>(b, where, "transcript", "");
        s.record = get_or<std::string>(b, where, "record", "");
        s.embedding_dim = get_or<std::size_t>(b, where, "embedding_dim", 256);
        if (s.kind != "openai" && s.kind != "simulated" && s.kind != "playback") {
            throw ConfigError(where + ".kind must be openai, simulated or playback");
        }
        if (s.kind == "playback" && s.transcript.empty()) throw ConfigError(where + " needs a transcript path");
        if (s.max_parallel < 1) throw ConfigError(where + ".max_parallel must be at least 1");
        c.backends[name] = s;
    }

    if (!root.contains("policies") || !root.at("policies").is_array() || root.at("policies").empty()) {
        throw ConfigError("[[policies]] must list at least one policy model");
    }
    std::set<std::string> policy_slugs;
    for (const auto& p : root.at("policies")) {
        c.policies.push_back(model_ref(p, "policies", 1.0, 1024));
        if (!policy_slugs.insert(slug(c.policies.back().model)).second) {
            throw ConfigError("policy model listed twice: " + c.policies.back().model);
        }
    }
    if (!root.contains("reward")) throw ConfigError("[reward] is required");
    c.reward = model_ref(root.at("reward"), "reward", 0.0, 512);
    if (!root.contains("recommender")) throw ConfigError("[recommender] is required");
    c.recommender = model_ref(root.at("recommender"), "recommender", 0.0, 2048);
    if (!root.contains("embedding")) throw ConfigError("[embedding] is required");
    c.embedding = model_ref(root.at("embedding"), "embedding", 0.0, 0);
    if (root.contains("judges")) {
        if (!root.at("judges").is_array()) throw ConfigError("[[judges]] must be an array of tables");
        for (const auto& j : root.at("judges")) {
            c.judges.push_back(model_ref(j, "judges", 0.0, 16));
            // The judging protocol fixes greedy decoding and a short answer.
            if (c.judges.back().temperature != 0.0 || c.judges.back().max_tokens != 16) {
                throw ConfigError("judges always run at temperature 0 with max_tokens 16");
            }
        }
    }

    auto check_backend = [&](const ModelRef& m, const std::string& role) {
        if (!c.backends.count(m.backend)) throw ConfigError(role + " refers to unknown backend " + m.backend);
    };
    for (const auto& p : c.policies) check_backend(p, "policy " + p.model);
    check_backend(c.reward, "reward");
    check_backend(c.recommender, "recommender");
    check_backend(c.embedding, "embedding");
    for (const auto& j : c.judges) check_backend(j, "judge " + j.model);

    const auto& features = section(root, "features");
    check_keys(features, "features", {"strategies", "workers"});
    if (features.contains("strategies")) {
        c.strategies.clear();
        for (const auto& s : get_or<std::vector<std::string>>(features, "features", "strategies", {})) {
            try {
                c.strategies.push_back(search::strategy_from_string(s));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    c.user_workers = get_or<std::size_t>(features, "features", "workers", 4);

    const auto& sr = section(root, "search");
    check_keys(sr, "search", {"n", "m", "mcts_iterations", "uct_c", "max_features", "rng_seed", "workers"});
    c.search.n = get_or<int>(sr, "search", "n", 8);
    c.search.m = get_or<int>(sr, "search", "m", 2);
    c.search.mcts_iterations = get_or<int>(sr, "search", "mcts_iterations", 32);
    c.search.uct_c = get_or<double>(sr, "search", "uct_c", 1.414);
    c.search.max_features = get_or<int>(sr, "search", "max_features", 10);
    c.search.rng_seed = get_or<std::uint64_t>(sr, "search", "rng_seed", 0);
    c.search.workers = get_or<std::size_t>(sr, "search", "workers", 4);
    try {
        c.search.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto& dd = section(root, "dedup");
    check_keys(dd, "dedup", {"eps", "min_pts", "stride", "workers"});
    c.dedup.eps = get_or<double>(dd, "dedup", "eps", 0.2);
    c.dedup.min_pts = get_or<int>(dd, "dedup", "min_pts", 1);
    c.dedup.stride = get_or<std::size_t>(dd, "dedup", "stride", 0);
    c.dedup.workers = get_or<std::size_t>(dd, "dedup", "workers", 4);
    try {
        c.dedup.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto& ev = section(root, "eval");
    check_keys(ev, "eval", {"c", "ks", "repeats", "seeds", "tasks", "exclude_noncompliant", "workers", "icl_seed",
                            "max_tokens"});
    c.eval.c = get_or<std::size_t>(ev, "eval", "c", 20);
    c.eval.ks = get_or<std::vector<int>>(ev, "eval", "ks", {5, 10});
    const int repeats = get_or<int>(ev, "eval", "repeats", 3);
    if (repeats < 1) throw ConfigError("eval.repeats must be at least 1");
    if (ev.contains("seeds")) {
        c.eval.seeds = get_or<std::vector<std::uint64_t>>(ev, "eval", "seeds", {});
    } else {
        c.eval.seeds.clear();
        for (int r = 0; r < repeats; ++r) c.eval.seeds.push_back(static_cast<std::uint64_t>(r + 1));
    }
    if (c.eval.seeds.size() != static_cast<std::size_t>(repeats)) {
        throw ConfigError("eval.seeds must hold exactly eval.repeats entries");
    }
    if (ev.contains("tasks")) {
        c.eval.tasks.clear();
        for (const auto& t : get_or<std::vector<std::string>>(ev, "eval", "tasks", {})) {
            try {
                c.eval.tasks.push_back(eval::task_from_string(t));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    c.eval.exclude_noncompliant = get_or<bool>(ev, "eval", "exclude_noncompliant", false);
    c.eval.workers = get_or<std::size_t>(ev, "eval", "workers", 8);
    c.eval.icl_seed = get_or<std::uint64_t>(ev, "eval", "icl_seed", 7);
    c.eval.max_tokens = get_or<int>(ev, "eval", "max_tokens", c.recommender.max_tokens);
    if (c.eval.c < 2) throw ConfigError("eval.c must be at least 2");
    for (int k : c.eval.ks) {
        if (k < 1) throw ConfigError("eval.ks entries must be at least 1");
    }

    const auto& jd = section(root, "judge");
    check_keys(jd, "judge", {"model_a", "model_b", "strategy", "sample_size", "pairing_seed", "workers"});
    c.judge.model_a = get_or<std::string>(jd, "judge", "model_a", "");
    c.judge.model_b = get_or<std::string>(jd, "judge", "model_b", "");
    try {
        c.judge.strategy = search::strategy_from_string(get_or<std::string>(jd, "judge", "strategy", "cot"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.judge.sample_size = get_or<std::size_t>(jd, "judge", "sample_size", 0);
    c.judge.pairing_seed = get_or<std::uint64_t>(jd, "judge", "pairing_seed", 0);
    c.judge.workers = get_or<std::size_t>(jd, "judge", "workers", 4);

    const auto& cache = section(root, "cache");
    check_keys(cache, "cache", {"dir"});
    c.cache_dir = get_or<std::string>(cache, "cache", "dir", "");
    return c;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    json root;
    try {
        root = to_json_value(toml::parse_file(path.string()));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "cannot parse " << path.string() << ": " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(os.str());
    }
    for (const auto& o : overrides) apply_override(root, o);
    return config_from_json(root, fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
    json backends_json = json::object();
    for (const auto& [name, b] : backends) {
        backends_json[name] = {{"kind", b.kind},
                               {"base_url", b.base_url},
                               {"api_key_env", b.api_key_env},
                               {"transcript", b.transcript.generic_string()},
                               {"embedding_dim", b.embedding_dim}};
    }
    json policies_json = json::array();
    for (const auto& p : policies) policies_json.push_back(model_json(p));
    json judges_json = json::array();
    for (const auto& j : judges) judges_json.push_back(model_json(j));
    std::vector<std::string> strategy_names;
    for (auto s : strategies) strategy_names.push_back(search::to_string(s));
    std::vector<std::string> task_names;
    for (auto t : eval.tasks) task_names.push_back(eval::to_string(t));
    // Worker counts, timeouts and recording paths do not affect results, so
    // they stay out of the snapshot and can change between resumed runs.
    return {
        {"dataset",
         {{"interactions", interactions.generic_string()},
          {"catalog", catalog.generic_string()},
          {"min_history", min_history},
          {"rating_threshold", rating_threshold}}},
        {"templates", templates_dir.generic_string()},
        {"backends", backends_json},
        {"policies", policies_json},
        {"reward", model_json(reward)},
        {"recommender", model_json(recommender)},
        {"embedding", model_json(embedding)},
        {"judges", judges_json},
        {"features", {{"strategies", strategy_names}}},
        {"search",
         {{"n", search.n},
          {"m", search.m},
          {"mcts_iterations", search.mcts_iterations},
          {"uct_c", search.uct_c},
          {"max_features", search.max_features},
          {"rng_seed", search.rng_seed}}},
        {"dedup", {{"eps", dedup.eps}, {"min_pts", dedup.min_pts}, {"stride", dedup.stride}}},
        {"eval",
         {{"c", eval.c},
          {"ks", eval.ks},
          {"repeats", eval.seeds.size()},
          {"seeds", eval.seeds},
          {"tasks", task_names},
          {"exclude_noncompliant", eval.exclude_noncompliant},
          {"icl_seed", eval.icl_seed},
          {"max_tokens", eval.max_tokens}}},
        {"judge",
         {{"model_a", judge.model_a},
          {"model_b", judge.model_b},
          {"strategy", search::to_string(judge.strategy)},
          {"sample_size", judge.sample_size},
          {"pairing_seed", judge.pairing_seed}}},
    };
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

}  // namespace recscale::pipeline
