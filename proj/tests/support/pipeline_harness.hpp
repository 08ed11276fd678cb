#pragma once

#include "recscale/common/files.hpp"
#include "recscale/pipeline/pipeline.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <map>
#include <string>
#include <vector>

namespace recscale::testing {

inline fs::path source_dir() { return fs::path(RECSCALE_SOURCE_DIR); }

inline fs::path tiny_config_path() { return source_dir() / "configs" / "tiny.toml"; }

// The five-user playback config with its run directory moved under `root`.
inline pipeline::RunConfig tiny_config(const fs::path& root, std::vector<std::string> overrides = {}) {
    overrides.push_back("run.root = \"" + root.generic_string() + "\"");
    return pipeline::load_config(tiny_config_path(), overrides);
}

inline pipeline::Options quiet(pipeline::Options o = {}) {
    o.log = [](const std::string&) {};
    return o;
}

// Relative path -> bytes for every regular file under dir.
inline std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
    }
    return out;
}

// Names of files that differ or exist on one side only; empty when identical.
inline std::vector<std::string> snapshot_diff(const std::map<std::string, std::string>& a,
                                              const std::map<std::string, std::string>& b) {
    std::vector<std::string> out;
    for (const auto& [k, v] : a) {
        const auto it = b.find(k);
        if (it == b.end() || it->second != v) out.push_back(k);
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k)) out.push_back(k);
    }
    return out;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

// Runs the command-line tool; returns its exit status.
inline int run_cli(const std::string& args) {
    const std::string cmd = shell_quote(RECSCALE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

// ingest -> features (all strategies) -> dedup -> eval -> judge -> report,
// in-process. Returns the run directory.
inline fs::path run_tiny_pipeline(const fs::path& root, const std::string& run_id = "tiny") {
    auto config = tiny_config(root);
    config.run_id = run_id;
    pipeline::Pipeline p(config, quiet());
    p.all();
    return p.run().root();
}

}  // namespace recscale::testing
