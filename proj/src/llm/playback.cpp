#include "recscale/llm/playback.hpp"

#include "recscale/llm/canonical.hpp"

namespace recscale::llm {

namespace {

std::map<std::string, json> read_transcript(const fs::path& path) {
    std::map<std::string, json> entries;
    const auto raw = read_jsonl(path);
    if (!raw.errors.empty()) {
        throw GatewayError("transcript " + path.string() + " line " + std::to_string(raw.errors.front().first) +
                           " is not valid JSON");
    }
    for (const auto& rec : raw.records) {
        if (!rec.value.contains("digest") || !rec.value.contains("response")) {
            throw GatewayError("transcript " + path.string() + " line " + std::to_string(rec.line_number) +
                               " lacks digest/response");
        }
        entries[rec.value.at("digest").get<std::string>()] = rec.value.at("response");
    }
    return entries;
}

}  // namespace

PlaybackBackend::PlaybackBackend(const fs::path& transcript) : source_(transcript.string()) {
    if (!fs::exists(transcript)) throw GatewayError("transcript not found: " + transcript.string());
    entries_ = read_transcript(transcript);
}

const json& PlaybackBackend::lookup(const std::string& digest) const {
    const auto it = entries_.find(digest);
    if (it == entries_.end()) throw MissingTranscriptEntry(digest);
    return it->second;
}

ChatResponse PlaybackBackend::complete(const ChatRequest& request) {
    return response_from_json(lookup(cache_key(request).digest));
}

std::vector<EmbeddingVector> PlaybackBackend::embed(const std::vector<std::string>& texts,
                                                    const std::string& model_id) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        const json& entry = lookup(embedding_cache_key(t, model_id).digest);
        if (!entry.contains("embedding")) throw MalformedReply("transcript entry is not an embedding");
        out.push_back({entry.at("embedding").get<std::vector<double>>(), model_id});
    }
    return out;
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, fs::path transcript)
    : inner_(std::move(inner)), transcript_(std::move(transcript)) {}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse r = inner_->complete(request);
    std::lock_guard lock(mutex_);
    entries_[cache_key(request).digest] = response_to_json(r);
    return r;
}

std::vector<EmbeddingVector> RecordingBackend::embed(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
    auto out = inner_->embed(texts, model_id);
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < texts.size() && i < out.size(); ++i) {
        entries_[embedding_cache_key(texts[i], model_id).digest] = json{{"embedding", out[i].values}};
    }
    return out;
}

std::size_t RecordingBackend::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void RecordingBackend::save() const {
    std::map<std::string, json> merged;
    if (fs::exists(transcript_)) merged = read_transcript(transcript_);
    {
        std::lock_guard lock(mutex_);
        for (const auto& [k, v] : entries_) merged[k] = v;
    }
    std::string out;
    for (const auto& [digest, response] : merged) {
        out += json{{"digest", digest}, {"response", response}}.dump();
        out += '\n';
    }
    write_file_atomic(transcript_, out);
}

}  // namespace recscale::llm
