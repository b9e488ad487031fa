#include "metric_gate/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "metric_gate/errors.hpp"

namespace mgate {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "DOB", "GENDER", "ZIP", "DIAGNOSIS", "ROLE", "NAME", "NATIONAL_ID",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}

}  // namespace

std::string_view category_name(Category c) {
    return kCategoryNames[static_cast<std::size_t>(c)];
}

std::optional<Category> category_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (kCategoryNames[i] == name) return static_cast<Category>(i);
    }
    return std::nullopt;
}

SensitiveLexicon::SensitiveLexicon(SynonymSets synonyms) : synonyms_(std::move(synonyms)) {
    for (std::size_t a = 0; a < kCategoryCount; ++a) {
        for (const auto& name : synonyms_[a]) {
            if (name.empty()) throw LexiconError("empty synonym in " + std::string(kCategoryNames[a]));
            for (std::size_t b = a + 1; b < kCategoryCount; ++b) {
                if (synonyms_[b].count(name)) {
                    throw LexiconError("synonym '" + name + "' listed under both " +
                                       std::string(kCategoryNames[a]) + " and " +
                                       std::string(kCategoryNames[b]));
                }
            }
        }
    }
}

const SensitiveLexicon& SensitiveLexicon::builtin() {
    static const SensitiveLexicon lexicon(SynonymSets{{
        {"dob", "date_of_birth", "birthdate", "birth_date"},
        {"gender", "sex"},
        {"zip", "zipcode", "zip_code", "postal_code", "postcode"},
        {"diagnosis_code", "icd_code", "diagnosis", "icd10_code"},
        {"role", "job_title"},
        {"name", "first_name", "last_name", "full_name"},
        {"ssn", "social_security_number", "national_id"},
    }});
    return lexicon;
}

SensitiveLexicon SensitiveLexicon::empty() { return SensitiveLexicon(SynonymSets{}); }

SensitiveLexicon SensitiveLexicon::parse(std::string_view text) {
    SynonymSets sets;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        sets[i] = builtin().synonyms_[i];
    }
    std::array<bool, kCategoryCount> seen{};

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw LexiconError("line " + std::to_string(line_no) + ": expected CATEGORY = names");
        }
        const std::string key = to_upper(trim(line.substr(0, eq)));
        const auto category = category_from_name(key);
        if (!category) {
            throw LexiconError("line " + std::to_string(line_no) + ": unknown category '" + key + "'");
        }
        const auto idx = static_cast<std::size_t>(*category);
        if (seen[idx]) {
            throw LexiconError("line " + std::to_string(line_no) + ": category " + key +
                               " listed twice");
        }
        seen[idx] = true;

        std::set<std::string> names;
        std::string_view rest = line.substr(eq + 1);
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view item = trim(rest.substr(0, comma));
            if (!item.empty()) names.insert(to_lower(item));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        sets[idx] = std::move(names);
    }
    return SensitiveLexicon(std::move(sets));
}

SensitiveLexicon SensitiveLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read lexicon file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<Category> SensitiveLexicon::classify(std::string_view column) const {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (synonyms_[i].find(std::string(column)) != synonyms_[i].end()) {
            return static_cast<Category>(i);
        }
    }
    return std::nullopt;
}

}  // namespace mgate
