#include "recscale/llm/response_cache.hpp"

namespace recscale::llm {

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(*dir_); }

fs::path ResponseCache::path_for(const CacheKey& key) const {
    if (!dir_ || key.digest.size() < 4) {
        throw GatewayError("cache has no directory or digest is malformed");
    }
    return *dir_ / key.digest.substr(0, 2) / key.digest.substr(2, 2) / (key.digest + ".json");
}

std::optional<json> ResponseCache::load(const CacheKey& key) const {
    if (!dir_) {
        std::lock_guard lock(mutex_);
        const auto it = memory_.find(key.digest);
        if (it == memory_.end()) return std::nullopt;
        return std::optional<json>(std::in_place, it->second);
    }
    const fs::path p = path_for(key);
    std::error_code ec;
    if (!fs::exists(p, ec)) return std::nullopt;
    try {
        json entry = json::parse(read_file(p));
        if (entry.value("digest", std::string{}) != key.digest) return std::nullopt;
        return std::optional<json>(std::in_place, entry.at("value"));
    } catch (const std::exception&) {
        // Unreadable entries are treated as misses and overwritten on store.
        return std::nullopt;
    }
}

void ResponseCache::store(const CacheKey& key, const json& value) {
    if (!dir_) {
        std::lock_guard lock(mutex_);
        memory_[key.digest] = value;
        return;
    }
    json entry{{"digest", key.digest}, {"value", value}};
    write_file_atomic(path_for(key), entry.dump());
}

}  // namespace recscale::llm
