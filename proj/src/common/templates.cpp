#include "recscale/common/templates.hpp"

#include "recscale/common/hashing.hpp"

#include <set>

#ifndef RECSCALE_TEMPLATE_DIR
#define RECSCALE_TEMPLATE_DIR "templates"
#endif

namespace recscale {

fs::path default_template_dir() { return fs::path(RECSCALE_TEMPLATE_DIR); }

TemplateLibrary TemplateLibrary::load(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw TemplateError("template directory not found: " + dir.string());
    }
    TemplateLibrary lib;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            lib.add(entry.path().stem().string(), read_file(entry.path()));
        }
    }
    return lib;
}

TemplateLibrary TemplateLibrary::load_default() { return load(default_template_dir()); }

void TemplateLibrary::add(std::string name, std::string body) { templates_[std::move(name)] = std::move(body); }

const std::string& TemplateLibrary::body(const std::string& name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw TemplateError("unknown template: " + name);
    return it->second;
}

std::string TemplateLibrary::render(const std::string& name, const std::map<std::string, std::string>& values) const {
    const std::string& tpl = body(name);
    std::string out;
    out.reserve(tpl.size() * 2);
    std::set<std::string> used;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const std::size_t open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        const std::size_t close = tpl.find("}}", open + 2);
        if (close == std::string::npos) throw TemplateError(name + ": unterminated placeholder");
        out.append(tpl, pos, open - pos);
        const std::string key = tpl.substr(open + 2, close - open - 2);
        const auto it = values.find(key);
        if (it == values.end()) throw TemplateError(name + ": no value for placeholder {{" + key + "}}");
        out += it->second;
        used.insert(key);
        pos = close + 2;
    }
    for (const auto& [key, value] : values) {
        if (!used.contains(key)) throw TemplateError(name + ": value '" + key + "' has no placeholder");
    }
    return out;
}

std::string TemplateLibrary::content_hash() const {
    std::string manifest;
    for (const auto& [name, tpl] : templates_) {
        manifest += name;
        manifest.push_back('\0');
        manifest += sha256_hex(tpl);
        manifest.push_back('\n');
    }
    return sha256_hex(manifest);
}

}  // namespace recscale
