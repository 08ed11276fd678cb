#pragma once

#include "recscale/common/files.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace recscale {

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Plain-text prompt templates with {{name}} placeholders, one file per
// template (<dir>/<name>.txt).
class TemplateLibrary {
public:
    TemplateLibrary() = default;
    static TemplateLibrary load(const fs::path& dir);
    // Directory compiled in at build time (the repository's templates/).
    static TemplateLibrary load_default();

    void add(std::string name, std::string body);
    bool has(const std::string& name) const { return templates_.contains(name); }
    const std::string& body(const std::string& name) const;

    // Every placeholder must have a value, and every value must be used by
    // the template; both mismatches throw TemplateError.
    std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;

    // SHA-256 over "name\0sha256(body)\n" for all templates in name order.
    std::string content_hash() const;

    const std::map<std::string, std::string>& all() const { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

fs::path default_template_dir();

}  // namespace recscale
