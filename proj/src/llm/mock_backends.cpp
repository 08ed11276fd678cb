#include "recscale/llm/mock_backends.hpp"

#include "recscale/common/rng.hpp"
#include "recscale/common/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

namespace recscale::llm {

namespace {

std::string joined_content(const ChatRequest& request) {
    std::string all;
    for (const auto& m : request.messages) {
        if (!all.empty()) all.push_back('\n');
        all += m.content;
    }
    return all;
}

int word_count(std::string_view s) {
    int n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

ChatResponse make_response(const ChatRequest& request, std::string text) {
    ChatResponse r;
    r.usage.prompt_tokens = word_count(joined_content(request));
    r.usage.completion_tokens = word_count(text);
    r.text = std::move(text);
    r.finish_reason = FinishReason::stop;
    return r;
}

}  // namespace

ScriptedBackend& ScriptedBackend::on(std::string substring, std::string reply) {
    rules_.emplace_back(std::move(substring), std::move(reply));
    return *this;
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    const std::size_t index = calls_.fetch_add(1);
    {
        std::lock_guard lock(log_mutex_);
        log_.push_back(request);
    }
    const std::string content = joined_content(request);
    for (const auto& [needle, reply] : rules_) {
        if (text::contains(content, needle)) return make_response(request, reply);
    }
    if (fallback_) return make_response(request, fallback_(request, index));
    throw GatewayError("scripted backend has no reply for request #" + std::to_string(index));
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

void FlakyBackend::maybe_fail() {
    if (remaining_.fetch_sub(1) > 0) {
        throw TransientError("injected HTTP " + std::to_string(status_), status_);
    }
}

ChatResponse FlakyBackend::complete(const ChatRequest& request) {
    maybe_fail();
    return inner_->complete(request);
}

std::vector<EmbeddingVector> FlakyBackend::embed(const std::vector<std::string>& texts, const std::string& model_id) {
    maybe_fail();
    return inner_->embed(texts, model_id);
}

std::vector<double> HashEmbeddingBackend::vector_for(const std::string& text, std::size_t dim) {
    SplitMix64 g(fnv1a64(text));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> v(dim);
    for (auto& x : v) x = (g.next() >> 63) ? scale : -scale;
    return v;
}

ChatResponse HashEmbeddingBackend::complete(const ChatRequest&) {
    throw GatewayError("hash embedding backend does not serve chat completions");
}

std::vector<EmbeddingVector> HashEmbeddingBackend::embed(const std::vector<std::string>& texts,
                                                         const std::string& model_id) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back({vector_for(t, dim_), model_id});
    return out;
}

// ---------------------------------------------------------------------------
// SimulatedBackend

namespace {

struct VocabEntry {
    const char* name;
    const char* definition;
    const char* values;
};

constexpr std::array<VocabEntry, 40> kVocabulary{{
    {"Material Type", "The primary materials used to make the product.", "Plastic, Wood, Metal, Fabric"},
    {"Brand Reputation", "How established and trusted the product's brand is.", "Well-known, Niche, Unknown"},
    {"Price Tier", "The relative price band the product sits in.", "Budget, Mid-range, Premium"},
    {"Age Suitability", "The age group the product is designed for.", "Toddler, Child, Teen, Adult"},
    {"Durability", "How well the product withstands repeated use.", "Fragile, Standard, Heavy-Duty"},
    {"Educational Value", "Whether the product teaches a skill or concept.", "STEM, Language, None"},
    {"Assembly Complexity", "Effort needed to put the product together.", "None, Simple, Involved"},
    {"Licensed Franchise", "Whether the product is tied to a film, show or game.", "Licensed, Original"},
    {"Play Mode", "Whether the product is meant for solo or group use.", "Solo, Cooperative, Competitive"},
    {"Size", "Physical size of the product.", "Pocket, Tabletop, Large"},
    {"Power Source", "How the product is powered.", "Battery, Rechargeable, Manual"},
    {"Sound Output", "Whether and how the product produces sound.", "Silent, Chimes, Speaker"},
    {"Color Scheme", "The dominant colors of the product.", "Pastel, Bright, Neutral"},
    {"Collectibility", "Whether the product belongs to a collectible series.", "Series, Standalone"},
    {"Component Count", "How many separate pieces the product has.", "Single, Few, Hundreds"},
    {"Safety Certification", "Safety standards the product is certified against.", "ASTM, CE, None"},
    {"Portability", "How easily the product can be carried around.", "Travel-friendly, Stationary"},
    {"Creativity Focus", "How much open-ended creation the product supports.", "Open-ended, Guided"},
    {"Skill Level", "The level of expertise the product expects.", "Beginner, Intermediate, Expert"},
    {"Brand Compatibility", "Compatibility with other products of specific brands.", "Universal, Brand-specific"},
    {"Installation Complexity", "Ease of installing the component.", "Tool-free, Moderate, Professional"},
    {"Sound Characteristics", "Tonal qualities of sound-producing components.", "Warm, Bright, Aggressive"},
    {"Aesthetic Finish", "Visual appearance and surface treatment.", "Matte, Glossy, Chrome"},
    {"Customization Options", "Options for personalizing the product.", "Color Variants, Add-ons"},
    {"Usage Context", "Situations the product is intended for.", "Home, Outdoor, Classroom"},
    {"Packaging Quality", "Condition and presentation of the packaging.", "Gift-ready, Plain"},
    {"Replay Value", "How often the product stays engaging on reuse.", "High, Medium, Low"},
    {"Theme", "The narrative or visual theme of the product.", "Space, Animals, Vehicles"},
    {"Interactivity", "How much the product responds to the user.", "Static, Reactive, App-connected"},
    {"Maintenance Needs", "Care required to keep the product working.", "None, Occasional, Regular"},
    {"Weight", "How heavy the product is.", "Light, Moderate, Heavy"},
    {"Texture", "The tactile feel of the product surface.", "Soft, Smooth, Rough"},
    {"Gift Suitability", "How well the product works as a present.", "Ideal, Acceptable, Unsuitable"},
    {"Accessory Inclusion", "Whether accessories come in the box.", "Included, Sold Separately"},
    {"Learning Curve", "Time needed before the product is enjoyable.", "Immediate, Gradual, Steep"},
    {"Manufacturer Origin", "Where the product is manufactured.", "Domestic, Imported"},
    {"Eco Friendliness", "Environmental footprint of materials and packaging.", "Recycled, Conventional"},
    {"Screen Dependence", "Whether the product needs a screen or device.", "Screen-free, Companion App"},
    {"Noise Level", "Loudness during typical use.", "Quiet, Moderate, Loud"},
    {"Warranty Coverage", "Length and scope of the manufacturer warranty.", "None, 1 Year, Lifetime"},
}};

bool is_reasoning_model(const std::string& model_id) {
    const std::string id = text::to_lower(model_id);
    for (const char* marker : {"o1", "o3", "r1", "reason", "thinking"}) {
        if (text::contains(id, marker)) return true;
    }
    return false;
}

std::string definition_for(const VocabEntry& e, bool detailed) {
    std::string d = e.definition;
    if (detailed) {
        d += " Possible values include: ";
        d += e.values;
        d += ".";
    }
    return d;
}

// Lines of the block that follows `header` up to the next blank line.
std::vector<std::string> block_after(const std::string& content, const std::string& header, bool last = false) {
    const std::size_t pos = last ? content.rfind(header) : content.find(header);
    std::vector<std::string> lines;
    if (pos == std::string::npos) return lines;
    bool started = false;
    for (auto line : text::split_lines(std::string_view(content).substr(pos + header.size()))) {
        const auto t = text::trim(line);
        if (t.empty()) {
            if (started) break;
            continue;
        }
        started = true;
        lines.emplace_back(t);
    }
    return lines;
}

std::string feature_name_of(std::string_view line) {
    line = text::strip_list_marker(line);
    const auto colon = line.find(':');
    return text::strip_emphasis(line.substr(0, colon));
}

std::uint64_t request_hash(const ChatRequest& request, const std::string& content) {
    std::uint64_t h = fnv1a64(content) ^ (fnv1a64(request.model_id) * 31);
    if (request.seed) h ^= static_cast<std::uint64_t>(*request.seed) * 0x9E3779B97F4A7C15ULL;
    return h;
}

std::string sim_policy(const ChatRequest& request, const std::string& content) {
    SplitMix64 rng(request_hash(request, content));
    const bool deep = is_reasoning_model(request.model_id);
    const std::size_t count = 3 + rng.bounded(5) + (deep ? 3 : 0);
    std::vector<std::size_t> idx(kVocabulary.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.bounded(idx.size() - i)]);
    std::ostringstream out;
    if (rng.bounded(2) == 0) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < count; ++i) obj[kVocabulary[idx[i]].name] = definition_for(kVocabulary[idx[i]], deep);
        out << "```json\n" << obj.dump(2) << "\n```";
    } else {
        out << "Based on the historical user behavior provided, I think the reasons why users make these decisions "
               "can be attributed to:\n\n";
        for (std::size_t i = 0; i < count; ++i) {
            out << (i + 1) << ". **" << kVocabulary[idx[i]].name << "**: " << definition_for(kVocabulary[idx[i]], deep)
                << "\n";
        }
    }
    return out.str();
}

std::string sim_continuation(const ChatRequest& request, const std::string& content) {
    std::set<std::string> used;
    for (const auto& line : block_after(content, "Features identified so far:")) {
        if (line == "(none)") continue;
        used.insert(text::to_lower(feature_name_of(line)));
    }
    SplitMix64 rng(request_hash(request, content));
    if (used.size() >= 2 && rng.bounded(8) == 0) return "END";
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < kVocabulary.size(); ++i) {
        if (!used.contains(text::to_lower(kVocabulary[i].name))) free.push_back(i);
    }
    if (free.empty()) return "END";
    const auto& e = kVocabulary[free[rng.bounded(free.size())]];
    return std::string(e.name) + ": " + definition_for(e, is_reasoning_model(request.model_id));
}

std::string sim_reward(const std::string& content) {
    std::string user;
    const std::string marker = "Items that user ";
    if (const auto p = content.find(marker); p != std::string::npos) {
        const auto end = content.find(" rated", p);
        user = content.substr(p + marker.size(), end - p - marker.size());
    }
    std::string out = "[";
    bool first = true;
    for (const auto& line : block_after(content, "Candidate features:")) {
        const bool valid = fnv1a64(user + "|" + text::to_lower(feature_name_of(line))) % 4 != 0;
        out += first ? "" : ", ";
        out += valid ? "true" : "false";
        first = false;
    }
    return out + "]";
}

std::string sim_recommender(const ChatRequest& request, const std::string& content) {
    // The query's candidates are the last "Candidate items:" block.
    auto lines = block_after(content, "Candidate items:", /*last=*/true);
    SplitMix64 rng(request_hash(request, content));
    std::vector<std::pair<std::uint64_t, std::string>> scored;
    for (const auto& line : lines) scored.emplace_back(fnv1a64(line) ^ rng.next(), line);
    std::sort(scored.begin(), scored.end());
    const bool nip = text::contains(content, "predict the single item");
    if (nip) return scored.empty() ? "" : scored.front().second;
    // Occasionally non-compliant: repeat the top item in place of the last.
    if (scored.size() > 1 && rng.bounded(25) == 0) scored.back() = scored.front();
    std::string out;
    for (const auto& [key, line] : scored) out += line + "\n";
    return out;
}

std::string sim_judge(const std::string& content) {
    const auto p1 = content.find("Description 1:");
    const auto p2 = content.find("Description 2:");
    const auto p3 = content.find("Which description");
    if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos) return "unclear";
    const auto first = text::trim(std::string_view(content).substr(p1 + 14, p2 - p1 - 14));
    const auto second = text::trim(std::string_view(content).substr(p2 + 14, p3 - p2 - 14));
    return second.size() > first.size() ? "second" : "first";
}

}  // namespace

ChatResponse SimulatedBackend::complete(const ChatRequest& request) {
    const std::string content = joined_content(request);
    std::string reply;
    if (text::contains(content, "Features identified so far:")) {
        reply = sim_continuation(request, content);
    } else if (content.rfind("You are a user behavior analyst.", 0) == 0) {
        reply = sim_policy(request, content);
    } else if (text::contains(content, "You are a reward model")) {
        reply = sim_reward(content);
    } else if (text::contains(content, "You are a recommender system.")) {
        reply = sim_recommender(request, content);
    } else if (text::contains(content, "Which description is more specific")) {
        reply = sim_judge(content);
    } else {
        reply = "OK";
    }
    return make_response(request, std::move(reply));
}

std::vector<EmbeddingVector> SimulatedBackend::embed(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
    return embedder_.embed(texts, model_id);
}

}  // namespace recscale::llm
