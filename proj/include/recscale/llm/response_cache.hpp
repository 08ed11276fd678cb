#pragma once

#include "recscale/common/files.hpp"
#include "recscale/llm/canonical.hpp"

#include <map>
#include <mutex>
#include <optional>

namespace recscale::llm {

// Content-addressed response store. With a directory, each entry is one file
// at <dir>/<d[0:2]>/<d[2:4]>/<digest>.json written via temp-file + rename;
// without one, entries live in memory. Safe for concurrent use.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(fs::path dir);

    std::optional<json> load(const CacheKey& key) const;
    void store(const CacheKey& key, const json& value);

    std::optional<fs::path> directory() const { return dir_; }
    fs::path path_for(const CacheKey& key) const;

private:
    std::optional<fs::path> dir_;
    mutable std::mutex mutex_;
    std::map<std::string, json> memory_;
};

}  // namespace recscale::llm
