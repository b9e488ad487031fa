#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace mgate {

// Quasi-identifier / sensitive-attribute categories, in canonical order.
enum class Category : std::size_t {
    Dob = 0,
    Gender,
    Zip,
    Diagnosis,
    Role,
    Name,
    NationalId,
};

inline constexpr std::size_t kCategoryCount = 7;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::Dob,  Category::Gender, Category::Zip,       Category::Diagnosis,
    Category::Role, Category::Name,   Category::NationalId,
};

// "DOB", "GENDER", ..., "NATIONAL_ID".
std::string_view category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

// Immutable mapping from category to exact lowercase column names. Synonym
// sets are pairwise disjoint; construction enforces it.
class SensitiveLexicon {
public:
    using SynonymSets = std::array<std::set<std::string>, kCategoryCount>;

    // Throws LexiconError when two categories share a synonym.
    explicit SensitiveLexicon(SynonymSets synonyms);

    static const SensitiveLexicon& builtin();
    static SensitiveLexicon empty();

    // `CATEGORY = name1, name2` lines, '#' comments. Listed categories replace
    // the built-in synonyms; unlisted ones keep them. Unknown categories,
    // duplicate category lines and malformed lines throw LexiconError.
    static SensitiveLexicon parse(std::string_view text);
    static SensitiveLexicon load(const std::filesystem::path& path);

    const std::set<std::string>& synonyms(Category c) const {
        return synonyms_[static_cast<std::size_t>(c)];
    }

    // Exact match only; no substring or fuzzy matching.
    std::optional<Category> classify(std::string_view column) const;

private:
    SynonymSets synonyms_;
};

inline std::optional<Category> classify_column(std::string_view column_name,
                                               const SensitiveLexicon& lexicon) {
    return lexicon.classify(column_name);
}

}  // namespace mgate
