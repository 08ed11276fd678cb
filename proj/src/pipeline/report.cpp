#include "recscale/pipeline/report.hpp"

#include "recscale/common/text.hpp"
#include "recscale/pipeline/run_dir.hpp"

#include <algorithm>
#include <sstream>

namespace recscale::pipeline {

using nlohmann::json;

namespace {

bool is_nip(eval::TaskKind k) { return k == eval::TaskKind::next_item_prediction; }

struct Column {
    std::string name;
    eval::TaskKind task;
    enum class What { ndcg, hit, nip_hit, valid_rate } what;
    int k = 0;
};

std::vector<Column> columns(const TableLayout& layout) {
    std::vector<Column> out;
    for (auto task : layout.tasks) {
        const std::string t = eval::to_string(task);
        if (is_nip(task)) {
            out.push_back({t + " HIT", task, Column::What::nip_hit});
        } else {
            for (int k : layout.ks) out.push_back({t + " NDCG@" + std::to_string(k), task, Column::What::ndcg, k});
            for (int k : layout.ks) out.push_back({t + " HIT@" + std::to_string(k), task, Column::What::hit, k});
        }
        out.push_back({t + " valid rate", task, Column::What::valid_rate});
    }
    return out;
}

std::optional<double> cell(const SourceMetrics& row, const Column& col) {
    const auto it = row.by_task.find(col.task);
    if (it == row.by_task.end()) return std::nullopt;
    const auto& m = it->second;
    switch (col.what) {
        case Column::What::ndcg: {
            const auto v = m.ndcg_at.find(col.k);
            return v == m.ndcg_at.end() ? std::nullopt : std::optional<double>(v->second);
        }
        case Column::What::hit: {
            const auto v = m.hit_at.find(col.k);
            return v == m.hit_at.end() ? std::nullopt : std::optional<double>(v->second);
        }
        case Column::What::nip_hit:
            return m.nip_hit;
        case Column::What::valid_rate:
            return m.valid_rate;
    }
    return std::nullopt;
}

std::string percent(std::optional<double> v) { return v ? text::fixed(*v * 100.0, 2) : ""; }

std::optional<double> change(const std::vector<SourceMetrics>& rows, std::size_t i, const TableLayout& layout) {
    if (i == 0 || rows.empty()) return std::nullopt;
    const auto base = headline_metric(rows[0], layout);
    const auto value = headline_metric(rows[i], layout);
    if (!base || !value || *base == 0.0) return std::nullopt;
    return eval::improvement(*value, *base);
}

std::string signed_percent(double v) { return (v >= 0 ? "+" : "") + text::fixed(v, 2) + "%"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::optional<double> headline_metric(const SourceMetrics& row, const TableLayout& layout) {
    if (layout.tasks.empty()) return std::nullopt;
    const auto task = layout.tasks.front();
    if (is_nip(task)) return cell(row, {"", task, Column::What::nip_hit});
    if (layout.ks.empty()) return std::nullopt;
    const int k = *std::max_element(layout.ks.begin(), layout.ks.end());
    return cell(row, {"", task, Column::What::ndcg, k});
}

std::string headline_name(const TableLayout& layout) {
    if (layout.tasks.empty()) return "none";
    const auto task = layout.tasks.front();
    const std::string t = eval::to_string(task);
    if (is_nip(task)) return t + " HIT";
    if (layout.ks.empty()) return "none";
    return t + " NDCG@" + std::to_string(*std::max_element(layout.ks.begin(), layout.ks.end()));
}

std::string table1_csv(const std::vector<SourceMetrics>& rows, const TableLayout& layout) {
    const auto cols = columns(layout);
    std::string out = "source";
    for (const auto& c : cols) out += "," + csv_field(c.name);
    out += ",improvement_pct\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += csv_field(rows[i].label);
        for (const auto& c : cols) out += "," + percent(cell(rows[i], c));
        const auto d = change(rows, i, layout);
        out += "," + (d ? text::fixed(*d, 2) : std::string()) + "\n";
    }
    return out;
}

std::string table1_markdown(const std::vector<SourceMetrics>& rows, const TableLayout& layout) {
    const auto cols = columns(layout);
    std::string out = "| source |";
    std::string rule = "|---|";
    for (const auto& c : cols) {
        out += " " + c.name + " |";
        rule += "---:|";
    }
    out += " change in " + headline_name(layout) + " |\n";
    rule += "---:|\n";
    out += rule;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += "| " + rows[i].label + " |";
        for (const auto& c : cols) {
            const auto v = percent(cell(rows[i], c));
            out += " " + (v.empty() ? std::string("-") : v) + " |";
        }
        const auto d = change(rows, i, layout);
        out += " " + (d ? signed_percent(*d) : std::string("-")) + " |\n";
    }
    return out;
}

std::string scatter_csv(const std::vector<ScatterRow>& rows, const std::string& metric_name) {
    std::string out = "policy,strategy,unique_features," + csv_field(metric_name) + "\n";
    for (const auto& r : rows) {
        out += csv_field(r.policy) + "," + r.strategy + "," + std::to_string(r.unique_features) + "," +
               text::fixed(r.metric, 6) + "\n";
    }
    return out;
}

json fit_json(const std::vector<ScatterRow>& rows, const std::string& metric_name) {
    std::vector<eval::FitPoint> points;
    for (const auto& r : rows) {
        if (r.unique_features > 0) {
            points.push_back({static_cast<double>(r.unique_features), r.metric, r.policy + "/" + r.strategy});
        }
    }
    json out = {{"metric", metric_name}, {"x", "log10(unique_features)"}, {"points", points.size()}};
    try {
        const auto fit = eval::fit_correlation(points);
        out["status"] = "ok";
        out["slope_per_decade"] = fit.slope;
        out["intercept"] = fit.intercept;
        out["r"] = fit.r;
    } catch (const std::invalid_argument& e) {
        out["status"] = "insufficient data";
        out["reason"] = e.what();
    }
    return out;
}

std::vector<std::string> provenance_lines(const RunConfig& c, const std::string& config_hash,
                                          const std::string& templates_hash) {
    auto model = [](const ModelRef& m) {
        return m.model + " via " + m.backend + ", temperature " + text::fixed(m.temperature, 2) + ", max_tokens " +
               std::to_string(m.max_tokens);
    };
    std::vector<std::string> out;
    out.push_back("tool: " + std::string(kToolVersion));
    out.push_back("config hash: " + config_hash);
    out.push_back("templates hash: " + templates_hash);
    out.push_back("dataset: min_history " + std::to_string(c.min_history) + ", rating threshold " +
                  std::to_string(c.rating_threshold));
    for (const auto& p : c.policies) out.push_back("policy: " + model(p));
    out.push_back("reward: " + model(c.reward));
    out.push_back("recommender: " + model(c.recommender));
    out.push_back("embedding: " + c.embedding.model + " via " + c.embedding.backend);
    for (const auto& j : c.judges) out.push_back("judge: " + model(j));
    out.push_back("search: N " + std::to_string(c.search.n) + ", M " + std::to_string(c.search.m) +
                  ", MCTS iterations " + std::to_string(c.search.mcts_iterations) + ", UCT c " +
                  text::fixed(c.search.uct_c, 3) + ", max_features " + std::to_string(c.search.max_features) +
                  ", rng_seed " + std::to_string(c.search.rng_seed));
    out.push_back("dedup: eps " + text::fixed(c.dedup.eps, 3) + " (cosine distance), min_pts " +
                  std::to_string(c.dedup.min_pts));
    std::string ks, seeds, tasks;
    for (int k : c.eval.ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
    for (auto s : c.eval.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    for (auto t : c.eval.tasks) tasks += (tasks.empty() ? "" : ",") + std::string(eval::to_string(t));
    out.push_back("eval: C " + std::to_string(c.eval.c) + ", K {" + ks + "}, repeats " +
                  std::to_string(c.eval.seeds.size()) + ", seeds {" + seeds + "}, tasks {" + tasks +
                  "}, ICL example seed " + std::to_string(c.eval.icl_seed) + ", exclude non-compliant " +
                  (c.eval.exclude_noncompliant ? "yes" : "no"));
    out.push_back("judge: " + (c.judge.model_a.empty() ? std::string("not configured")
                                                        : c.judge.model_a + " vs " + c.judge.model_b + ", strategy " +
                                                              search::to_string(c.judge.strategy) + ", sample " +
                                                              std::to_string(c.judge.sample_size) + ", pairing seed " +
                                                              std::to_string(c.judge.pairing_seed)));
    return out;
}

std::string render_report(const ReportInputs& in) {
    std::ostringstream os;
    os << "# Run report\n\n## Provenance\n\n";
    for (const auto& line : in.provenance) os << "- " << line << "\n";

    os << "\n## Dataset\n\n";
    if (in.dataset_summary.is_object()) {
        for (const auto& [k, v] : in.dataset_summary.items()) os << "- " << k << ": " << v.dump() << "\n";
    }

    os << "\n## Features\n\n";
    os << "| policy | strategy | users | failed | degenerate | valid features | unique features |\n";
    os << "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& f : in.features) {
        os << "| " << f.policy << " | " << f.strategy << " | " << f.users << " | " << f.failed << " | "
           << f.degenerate << " | " << f.valid_features << " | " << f.unique_features << " |\n";
    }

    os << "\n## Recommendation metrics (x100)\n\n" << table1_markdown(in.rows, in.layout);

    os << "\n## Unique features vs " << headline_name(in.layout) << "\n\n";
    os << "| policy | strategy | unique features | " << headline_name(in.layout) << " |\n|---|---|---:|---:|\n";
    for (const auto& r : in.scatter) {
        os << "| " << r.policy << " | " << r.strategy << " | " << r.unique_features << " | "
           << text::fixed(r.metric * 100.0, 2) << " |\n";
    }
    if (in.fit.value("status", "") == "ok") {
        os << "\nOLS on log10(unique features): slope " << text::fixed(in.fit["slope_per_decade"].get<double>(), 4)
           << " per decade, intercept " << text::fixed(in.fit["intercept"].get<double>(), 4) << ", r "
           << text::fixed(in.fit["r"].get<double>(), 4) << " over " << in.fit["points"].get<std::size_t>()
           << " points.\n";
    } else {
        os << "\nNo fit: " << in.fit.value("reason", std::string("no data")) << ".\n";
    }

    os << "\n## Pairwise judging\n\n";
    if (!in.judging) {
        os << "not run\n";
    } else {
        const auto& j = *in.judging;
        os << "A = " << j.model_a << ", B = " << j.model_b << " (strategy " << j.strategy << ", " << j.pairs
           << " pairs)\n\n";
        os << "| judge | A wins | ties | B wins | skipped |\n|---|---:|---:|---:|---:|\n";
        for (const auto& r : j.reports) {
            os << "| " << r.judge_model_id << " | " << r.wins_a << " | " << r.ties << " | " << r.wins_b << " | "
               << r.skipped << " |\n";
        }
    }
    return os.str();
}

}  // namespace recscale::pipeline
