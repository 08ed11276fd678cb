#pragma once

#include "recscale/common/templates.hpp"
#include "recscale/dataset/dataset.hpp"
#include "recscale/llm/gateway.hpp"
#include "recscale/llm/playback.hpp"
#include "recscale/pipeline/config.hpp"
#include "recscale/pipeline/run_dir.hpp"
#include "recscale/search/feature.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::pipeline {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_upstream_missing = 3,
    exit_backend = 4,
    exit_interrupted = 130,
};

// Raised by the features stage once `stop_after` users were checkpointed.
class Interrupted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::optional<search::Strategy> strategy;  // features: only this strategy
    std::optional<std::string> policy;         // features: only this policy model id
    std::size_t stop_after = 0;                // features: stop after this many users (0 = never)
    std::function<void(const std::string&)> log;  // defaults to stderr
};

// A configured feature source: one policy model under one strategy.
struct Source {
    ModelRef policy;
    search::Strategy strategy;

    std::string key() const;  // "<slug>/<strategy>"
};

class Pipeline {
public:
    Pipeline(RunConfig config, Options options = {});

    void ingest();
    void features();
    void dedup();
    void eval();
    void judge();
    void report();
    void all();

    // Writes transcripts of recording backends. Safe to call repeatedly.
    void save_recordings();

    const RunConfig& config() const { return config_; }
    RunDir& run() { return *run_; }
    std::vector<Source> sources() const;  // policies x configured strategies

private:
    void log(const std::string& line) const;
    llm::Gateway& gateway(const std::string& backend);
    void search_source(const Source& source);

    std::vector<dataset::UserSplit> load_splits() const;
    dataset::ItemCatalog load_catalog() const;
    std::map<std::string, search::FeatureSet> load_features(const Source& source) const;

    RunConfig config_;
    Options options_;
    TemplateLibrary templates_;
    std::unique_ptr<RunDir> run_;
    std::map<std::string, std::shared_ptr<llm::Gateway>> gateways_;
    std::vector<std::shared_ptr<llm::RecordingBackend>> recorders_;
};

// Runs one subcommand ("ingest", "features", "dedup", "eval", "judge",
// "report", "all") and maps failures to exit codes, printing them to stderr.
int run_command(const std::string& command, const RunConfig& config, const Options& options);

}  // namespace recscale::pipeline
