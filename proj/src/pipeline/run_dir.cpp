#include "recscale/pipeline/run_dir.hpp"

#include <algorithm>

namespace recscale::pipeline {

RunDir::RunDir(fs::path root, const RunConfig& config, const std::string& templates_hash) : root_(std::move(root)) {
    const auto manifest_path = root_ / "manifest.json";
    const std::string config_hash = config.hash();
    if (fs::exists(manifest_path)) {
        try {
            manifest_ = json::parse(read_file(manifest_path));
        } catch (const json::exception& e) {
            throw ConfigError("unreadable manifest " + manifest_path.string() + ": " + e.what());
        }
        if (manifest_.value("config_hash", "") != config_hash) {
            throw ConfigError("run directory " + root_.string() +
                              " was created with a different configuration; use a new --run id");
        }
        if (manifest_.value("templates_hash", "") != templates_hash) {
            throw ConfigError("run directory " + root_.string() +
                              " was created with different prompt templates; use a new --run id");
        }
        if (!manifest_.contains("stages") || !manifest_["stages"].is_object()) manifest_["stages"] = json::object();
        return;
    }
    fs::create_directories(root_);
    manifest_ = {{"tool_version", kToolVersion},
                 {"config", config.to_json()},
                 {"config_hash", config_hash},
                 {"templates_hash", templates_hash},
                 {"stages", json::object()}};
    save();
}

bool RunDir::complete(const std::string& stage) const {
    const auto& stages = manifest_["stages"];
    if (!stages.contains(stage)) return false;
    for (const auto& [rel, digest] : stages[stage]["files"].items()) {
        const auto p = root_ / rel;
        if (!fs::is_regular_file(p) || sha256_file(p) != digest.get<std::string>()) return false;
    }
    return true;
}

void RunDir::require(const std::string& stage, const std::string& needed_by) const {
    if (!complete(stage)) {
        throw StageMissing("stage '" + stage + "' must complete before '" + needed_by + "'");
    }
}

void RunDir::mark(const std::string& stage, const std::vector<std::string>& files) {
    json entry = {{"files", json::object()}};
    for (const auto& rel : files) entry["files"][rel] = sha256_file(root_ / rel);
    manifest_["stages"][stage] = entry;
    save();
}

void RunDir::save() const { write_file_atomic(root_ / "manifest.json", manifest_.dump(2) + "\n"); }

std::vector<std::string> files_under(const fs::path& root, const std::string& dir) {
    std::vector<std::string> out;
    const auto base = root / dir;
    if (!fs::is_directory(base)) return out;
    for (const auto& e : fs::recursive_directory_iterator(base)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace recscale::pipeline
