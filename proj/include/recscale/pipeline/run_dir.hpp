#pragma once

#include "recscale/common/files.hpp"
#include "recscale/pipeline/config.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::pipeline {

inline constexpr const char* kToolVersion = "recscale 0.1.0";

// An upstream stage has not completed. The message names the stage.
class StageMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// runs/<run-id>/ with manifest.json:
//   {tool_version, config, config_hash, templates_hash,
//    stages: {<stage>: {files: {<relative path>: <sha256>}}}}
// A stage entry is written only after all of its files exist, so an entry
// whose checksums still verify means the stage is complete.
class RunDir {
public:
    // Opens or creates the directory. Throws ConfigError when an existing
    // manifest was written for a different effective config or template set.
    RunDir(fs::path root, const RunConfig& config, const std::string& templates_hash);

    const fs::path& root() const { return root_; }
    fs::path path(const std::string& relative) const { return root_ / relative; }

    bool complete(const std::string& stage) const;
    void require(const std::string& stage, const std::string& needed_by) const;

    // Checksums `files` (relative to root) and records the stage.
    void mark(const std::string& stage, const std::vector<std::string>& files);

    const json& manifest() const { return manifest_; }

private:
    void save() const;

    fs::path root_;
    json manifest_;
};

// Regular files under root/<dir>, relative to root, sorted.
std::vector<std::string> files_under(const fs::path& root, const std::string& dir);

}  // namespace recscale::pipeline
