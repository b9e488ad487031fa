#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgate {

// Base of every error the library raises. kind() is the stable name that
// appears in JSON reports ("SyntaxError", "ProviderError", ...).
class Error : public std::runtime_error {
public:
    Error(std::string_view kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    std::string_view kind() const noexcept { return kind_; }

private:
    std::string_view kind_;
};

#define MGATE_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& message)                     \
            : Error(#Name, message) {}                                \
    }

// Unparseable SQL; offset is the byte position in the original text.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t offset)
        : Error("SyntaxError",
                message + " at byte " + std::to_string(offset)),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

MGATE_DEFINE_ERROR(UnsupportedStatement);
MGATE_DEFINE_ERROR(LexiconError);
MGATE_DEFINE_ERROR(ProviderError);
MGATE_DEFINE_ERROR(DimensionMismatch);
MGATE_DEFINE_ERROR(SchemaMismatch);
MGATE_DEFINE_ERROR(EmptyDataset);
MGATE_DEFINE_ERROR(NonFiniteInput);
MGATE_DEFINE_ERROR(InvalidHyperparams);
MGATE_DEFINE_ERROR(InvalidLabel);
MGATE_DEFINE_ERROR(IoError);
MGATE_DEFINE_ERROR(FormatVersionMismatch);
MGATE_DEFINE_ERROR(CorruptModel);
MGATE_DEFINE_ERROR(InvalidCount);
MGATE_DEFINE_ERROR(ConfigError);

#undef MGATE_DEFINE_ERROR

}  // namespace mgate
